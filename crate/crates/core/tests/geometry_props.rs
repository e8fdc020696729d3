use nalgebra::DVector;
use proptest::prelude::*;

use symgrowth::comparison::{solve_profile, Alpha, Curvature, Extent};
use symgrowth::geometry::{self, hyperboloid_lift, AmbientSpace};

fn point(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hyperbolic_distance_is_a_metric(
        c in 0.3f64..3.0,
        a in prop::array::uniform2(-2.0f64..2.0),
        b in prop::array::uniform2(-2.0f64..2.0),
        d in prop::array::uniform2(-2.0f64..2.0),
    ) {
        let amb = AmbientSpace::hyperbolic(2, c).unwrap();
        let (x, y, z) = (hyperboloid_lift(c, &point(&a)), hyperboloid_lift(c, &point(&b)), hyperboloid_lift(c, &point(&d)));
        for p in [&x, &y, &z] {
            prop_assert!(amb.model_residual(p) < 1e-12);
        }
        let (dxy, dyx) = (amb.distance(&x, &y), amb.distance(&y, &x));
        prop_assert!((dxy - dyx).abs() <= 1e-12 * (1.0 + dxy));
        prop_assert!(amb.distance(&x, &x) == 0.0);
        prop_assert!(dxy <= amb.distance(&x, &z) + amb.distance(&z, &y) + 1e-10);
    }

    #[test]
    fn hyperbolic_distance_matches_arccosh(c in 0.3f64..3.0, a in prop::array::uniform2(-2.0f64..2.0), b in prop::array::uniform2(-2.0f64..2.0)) {
        // Oracle: d = acosh(−c² ⟨x, y⟩_L) / c.
        let amb = AmbientSpace::hyperbolic(2, c).unwrap();
        let (x, y) = (hyperboloid_lift(c, &point(&a)), hyperboloid_lift(c, &point(&b)));
        let expected = (-(c * c) * amb.inner(&x, &y)).max(1.0).acosh() / c;
        let d = amb.distance(&x, &y);
        prop_assert!((d - expected).abs() <= 1e-6 * (1.0 + expected));
    }

    #[test]
    fn radial_gradient_is_unit_and_tangent(c in 0.3f64..3.0, a in prop::array::uniform2(-2.0f64..2.0), b in prop::array::uniform2(-2.0f64..2.0)) {
        let amb = AmbientSpace::hyperbolic(2, c).unwrap();
        let (x, x0) = (hyperboloid_lift(c, &point(&a)), hyperboloid_lift(c, &point(&b)));
        prop_assume!(amb.distance(&x, &x0) > 1e-3);
        let (_, g) = amb.radial_gradient(&x, &x0).unwrap();
        prop_assert!((amb.norm(&g) - 1.0).abs() < 1e-8);
        prop_assert!(amb.inner(&g, &x).abs() < 1e-8 * (1.0 + x.norm_squared()));
    }

    #[test]
    fn cylinder_metric_is_flat(theta in -3.0f64..3.0, z in -2.0f64..2.0) {
        let chart = geometry::cylinder(1.5, 3.0).unwrap();
        let f = chart.frame_at(&[theta, z]).unwrap();
        prop_assert!((f.sqrt_det() - 1.5).abs() < 1e-6);
        // Principal curvatures 1/R and 0.
        let h = f.mean_curvature_vector();
        prop_assert!((h.norm() - 1.0 / 1.5).abs() < 1e-5);
    }

    #[test]
    fn catenoid_is_minimal(theta in -3.0f64..3.0, v in -1.5f64..1.5) {
        let chart = geometry::catenoid(2.0).unwrap();
        let f = chart.frame_at(&[theta, v]).unwrap();
        prop_assert!(f.mean_curvature_vector().norm() < 1e-5 * v.cosh().powi(2));
    }

    #[test]
    fn hyperbolic_profile_is_sinh(c in 0.2f64..2.0, t in 0.0f64..4.0) {
        let p = solve_profile(Curvature::hyperbolic(c), Alpha::Zero, 4.0, 1e-3).unwrap();
        let exact = (c * t).sinh() / c;
        prop_assert!((p.h(t).unwrap() - exact).abs() <= 1e-7 * (1.0 + exact));
        prop_assert!((p.dh(t).unwrap() - (c * t).cosh()).abs() <= 1e-7 * (c * t).cosh());
    }

    #[test]
    fn spherical_window_is_arctan(c in 0.3f64..3.0, kappa in 0.1f64..3.0) {
        let p = solve_profile(Curvature::spherical(c), Alpha::Constant(kappa), std::f64::consts::PI / c, 1e-3).unwrap();
        let expected = (c / kappa).atan() / c;
        match p.mu_bound() {
            Extent::Finite(mu) => prop_assert!((mu - expected).abs() < 1e-4),
            Extent::Unbounded => prop_assert!(false, "bounded window expected"),
        }
        prop_assert!(p.valid_radius() <= p.limit());
    }

    #[test]
    fn decay_factor_multiplies(eps in 0.2f64..3.0, a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let p = solve_profile(Curvature::flat(), Alpha::InverseShifted(eps), 5.0, 1e-3).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        // e^(−∫α) for α = 1/(t + ε) is (lo + ε)/(hi + ε).
        prop_assert!((p.decay(lo, hi) - (lo + eps) / (hi + eps)).abs() < 1e-9);
        prop_assert!((p.decay(0.0, hi) - p.decay(0.0, lo) * p.decay(lo, hi)).abs() < 1e-9);
    }
}

#[test]
fn degenerate_inputs_are_rejected() {
    assert!(AmbientSpace::hyperbolic(2, 0.0).is_err());
    assert!(AmbientSpace::euclidean(1).is_err());
    assert!(geometry::plane(-1.0).is_err());
    assert!(solve_profile(Curvature::flat(), Alpha::Zero, -1.0, 1e-3).is_err());
    assert!(solve_profile(Curvature::flat(), Alpha::Zero, 1.0, 0.0).is_err());
}

#[test]
fn profile_outside_range_is_an_error() {
    let p = solve_profile(Curvature::spherical(1.0), Alpha::Zero, 5.0, 1e-3).unwrap();
    assert_eq!(p.r0().finite().map(|r| (r - std::f64::consts::PI).abs() < 1e-6), Some(true));
    assert!(p.h(4.0).is_err());
}
