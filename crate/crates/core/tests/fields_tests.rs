use std::sync::Arc;

use nalgebra::DVector;
use proptest::prelude::*;

use symgrowth::fields::{
    cheng_yau, newton_divergence_check, phi_divergence, proposition_residuals, AmbientVectorField, OperatorField,
    ScalarField,
};
use symgrowth::geometry;
use symgrowth::Error;

fn constant_field(v: [f64; 3]) -> AmbientVectorField {
    let v = DVector::from_column_slice(&v);
    Arc::new(move |_u: &[f64], _p: &DVector<f64>| Ok(v.clone()))
}

fn rotation_field() -> AmbientVectorField {
    Arc::new(|_u: &[f64], p: &DVector<f64>| Ok(DVector::from_vec(vec![-p[1], p[0], 0.3 * p[2]])))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phi_divergence_is_linear(theta in -2.5f64..2.5, v in -1.0f64..1.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let field = OperatorField::newton(geometry::catenoid(1.5).unwrap(), 1);
        let (x, y) = (rotation_field(), constant_field([0.2, -0.5, 1.0]));
        let (xc, yc) = (x.clone(), y.clone());
        let sum: AmbientVectorField = Arc::new(move |u: &[f64], p: &DVector<f64>| Ok(xc(u, p)? * a + yc(u, p)? * b));
        let u = [theta, v];
        let lhs = phi_divergence(&field, &sum, &u).unwrap();
        let rhs = a * phi_divergence(&field, &x, &u).unwrap() + b * phi_divergence(&field, &y, &u).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-7 * (1.0 + lhs.abs()));
    }

    #[test]
    fn divergence_identities_hold_on_the_sphere(theta in -2.5f64..2.5, phi in 0.5f64..2.6) {
        let field = OperatorField::shape_operator(geometry::sphere(1.3).unwrap());
        let f = ScalarField::new(|u: &[f64]| 2.0 + u[0].sin() * u[1].cos());
        let r = proposition_residuals(&field, &rotation_field(), &f, &[theta, phi]).unwrap();
        prop_assert!(r.max_relative() <= 1e-5, "{:?}", r);
    }

    #[test]
    fn scalar_identity_divergence_is_the_gradient(x in -2.0f64..2.0, y in -2.0f64..2.0) {
        // div(λI) = ∇λ; on the flat plane with λ = e^(−r) that is −e^(−r) u/r.
        let chart = geometry::plane(3.0).unwrap();
        let lambda = ScalarField::exp_neg_distance(&chart, 1.0);
        let field = OperatorField::scalar_identity(chart, lambda, 1.0);
        let r = (x * x + y * y).sqrt();
        prop_assume!(r > 0.05);
        let s = field.sample(&[x, y]).unwrap();
        let expected = DVector::from_vec(vec![x, y]) * (-(-r).exp() / r);
        prop_assert!((&s.divergence - expected).norm() < 1e-6);
        prop_assert!(s.mean_curvature.norm() < 1e-9);
    }
}

#[test]
fn cheng_yau_of_squared_norm_is_twice_the_dimension() {
    // □_I (|u|²/2) = Δ(|u|²/2) = 2 on the plane.
    let field = OperatorField::identity(geometry::plane(2.0).unwrap());
    let f = ScalarField::new(|u: &[f64]| 0.5 * (u[0] * u[0] + u[1] * u[1]));
    for u in [[0.3, -0.4], [1.1, 0.7], [-1.5, 0.2]] {
        let v = cheng_yau(&field, &f, &u).unwrap();
        assert!((v - 2.0).abs() < 1e-6, "{v}");
    }
}

#[test]
fn sphere_shape_operator_is_umbilic() {
    let field = OperatorField::shape_operator(geometry::sphere(2.0).unwrap());
    let s = field.sample(&[0.4, 0.3]).unwrap();
    let ev = s.phi.eigenvalues();
    assert!((ev[0].abs() - 0.5).abs() < 1e-6 && (ev[1] - ev[0]).abs() < 1e-6, "{ev:?}");
    assert!(s.divergence_norm() < 1e-5);
}

#[test]
fn newton_divergence_preconditions() {
    let cat = geometry::catenoid(1.0).unwrap();
    assert!(matches!(newton_divergence_check(&cat, 0, &[0.1, 0.2]), Err(Error::Domain(_))));
    assert!(matches!(newton_divergence_check(&cat, 2, &[0.1, 0.2]), Err(Error::Domain(_))));
    let h2 = geometry::hyperbolic_normal_plane(1.0, 2.0).unwrap();
    // The normal-coordinate hyperbolic plane sits in H³, codimension one.
    assert!(newton_divergence_check(&h2, 1, &[0.3, 0.2]).unwrap() < 1e-4);
}

#[test]
fn positivity_is_enforced_when_requested() {
    // The helicoid's shape operator has eigenvalues ±k, never semidefinite off the axis.
    let field = OperatorField::shape_operator(geometry::helicoid(2.0, 1.0).unwrap()).with_positivity(true);
    assert!(matches!(field.sample(&[0.3, 0.5]), Err(Error::NotPositiveSemidefinite { .. })));
}

#[test]
fn flat_ambient_under_a_hyperbolic_profile_falls_short() {
    // Φ = I on the plane, h = sinh: D_Φ X = cosh r + sinh r / r against 2 cosh r.
    let chart = geometry::plane(3.0).unwrap();
    let field = OperatorField::identity(chart);
    let profile = symgrowth::comparison::solve_profile(
        symgrowth::comparison::Curvature::hyperbolic(1.0),
        symgrowth::comparison::Alpha::Zero,
        4.0,
        1e-3,
    )
    .unwrap();
    for u in [[0.5f64, 0.0], [0.8, -1.1], [-1.7, 0.9]] {
        let r = (u[0] * u[0] + u[1] * u[1]).sqrt();
        let res = symgrowth::comparison::pointwise_comparison_residual(&field, &profile, &u).unwrap();
        let exact = r.sinh() / r - r.cosh();
        assert!(res < 0.0 && (res - exact).abs() < 1e-4 * (1.0 + exact.abs()), "{res} vs {exact}");
    }
}
