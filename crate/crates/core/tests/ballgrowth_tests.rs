use std::f64::consts::PI;

use symgrowth::ballgrowth::{
    fg_check, gamma, growth_curve, hypothesis_check, mesh_and_distance, phi_r_integral, sample_nodes, theorem_bound,
    GrowthOptions, HypothesisKind, TheoremId,
};
use symgrowth::comparison::{solve_profile, Alpha, Curvature};
use symgrowth::fields::OperatorField;
use symgrowth::geometry;
use symgrowth::Error;

#[test]
fn flat_ball_area_and_distance() {
    let chart = geometry::plane(4.0).unwrap();
    let ball = mesh_and_distance(&chart, 96, f64::INFINITY).unwrap();
    // The first rings carry a bias of a fraction of a cell; it does not grow.
    let slack = 0.15 * ball.metric_spacing();
    for n in ball.nodes() {
        assert!(n.rho >= n.r - 1e-9, "ρ below r at {:?}", n.u);
        assert!(n.rho <= 1.01 * n.r + slack, "ρ = {} vs r = {} at {:?}", n.rho, n.r, n.u);
    }
    let ones = vec![1.0; ball.len()];
    for mu in [1.0, 2.0, 3.0] {
        let area = ball.integrate(mu, &ones);
        assert!((area / (PI * mu * mu) - 1.0).abs() < 0.03, "area {area} at μ = {mu}");
    }
}

#[test]
fn cylinder_distance_wraps_around() {
    let chart = geometry::cylinder(1.0, 6.0).unwrap();
    let ball = mesh_and_distance(&chart, 128, f64::INFINITY).unwrap();
    for n in ball.nodes().iter().step_by(37) {
        let theta = n.u[0].rem_euclid(2.0 * PI);
        let arc = theta.min(2.0 * PI - theta);
        let exact = (arc * arc + n.u[1] * n.u[1]).sqrt();
        assert!((n.rho - exact).abs() <= 0.02 * exact + 0.05, "ρ = {} vs {exact} at {:?}", n.rho, n.u);
    }
}

#[test]
fn end_ball_gamma_matches_closed_form() {
    // m = 2, 𝒦 = c² = 1, α = κ: Γ(μ) = 2∫₀^μ sin τ e^(−2κτ) dτ.
    for kappa in [0.5, 1.0, 2.0] {
        let p = solve_profile(Curvature::spherical(1.0), Alpha::Constant(kappa), PI, 1e-3).unwrap();
        let a = 2.0 * kappa;
        let mu = 0.9 * p.valid_radius();
        let exact = 2.0 * (1.0 - (-a * mu).exp() * (a * mu.sin() + mu.cos())) / (1.0 + a * a);
        let g = gamma(&p, 2, mu).unwrap();
        assert!((g - exact).abs() < 1e-6, "κ = {kappa}: {g} vs {exact}");
        assert_eq!(g, phi_r_integral(&p, 2, mu).unwrap());
    }
}

#[test]
fn plane_growth_and_theorems() {
    let chart = geometry::plane(5.0).unwrap();
    let field = OperatorField::identity(chart.clone());
    let profile = solve_profile(Curvature::flat(), Alpha::InverseShifted(1.0), 8.0, 1e-3).unwrap();
    let ball = mesh_and_distance(&chart, 96, profile.limit()).unwrap();
    let samples = sample_nodes(&ball, &field, 4.8).unwrap();
    let hyps: Vec<_> = [HypothesisKind::AlphaBound, HypothesisKind::GradientBound]
        .into_iter()
        .map(|k| hypothesis_check(&ball, &samples, &profile, k, 4.0, 1e-3).unwrap())
        .collect();
    assert!(hyps.iter().all(|h| h.verdict));
    let curve = growth_curve(&ball, &samples, &profile, GrowthOptions::new(4.0)).unwrap();
    // f = ∫ trI = 2·area.
    for (&mu, &f) in curve.mu.iter().zip(&curve.f).filter(|(m, _)| **m >= 1.0) {
        assert!((f / (2.0 * PI * mu * mu) - 1.0).abs() < 0.03, "f = {f} at μ = {mu}");
    }
    for t in [TheoremId::General, TheoremId::Logarithmic] {
        let r = theorem_bound(&curve, &profile, t, &hyps, 0.07).unwrap();
        assert!(r.satisfied && !r.rows.is_empty(), "{t:?}");
    }
    let fg = fg_check(&curve, &profile).unwrap();
    assert!(fg.f_geq_g(0.07) && fg.f_geq_mg(0.07) && fg.g_geq_lambda_h(0.07));
}

#[test]
fn missing_hypothesis_blocks_theorem() {
    let chart = geometry::plane(5.0).unwrap();
    // Φ = e₁ ⊗ e₁ has λ_min = 0, so the gradient bound of the F ≥ mG route fails.
    let field = OperatorField::distribution(
        chart.clone(),
        vec![std::sync::Arc::new(|_u: &[f64]| nalgebra::DVector::from_vec(vec![1.0, 0.0]))],
    );
    let profile = solve_profile(Curvature::flat(), Alpha::Zero, 8.0, 1e-3).unwrap();
    let ball = mesh_and_distance(&chart, 64, profile.limit()).unwrap();
    let samples = sample_nodes(&ball, &field, 4.8).unwrap();
    let hyps: Vec<_> = [HypothesisKind::AlphaBound, HypothesisKind::GradientBound]
        .into_iter()
        .map(|k| hypothesis_check(&ball, &samples, &profile, k, 4.0, 1e-3).unwrap())
        .collect();
    assert!(hyps[0].verdict && !hyps[1].verdict);
    let curve = growth_curve(&ball, &samples, &profile, GrowthOptions::new(4.0)).unwrap();
    assert!(theorem_bound(&curve, &profile, TheoremId::Linear, &hyps, 0.07).unwrap().satisfied);
    assert!(matches!(
        theorem_bound(&curve, &profile, TheoremId::PhiR, &hyps, 0.07),
        Err(Error::HypothesisViolated { .. })
    ));
}

#[test]
fn growth_beyond_the_mesh_is_rejected() {
    let chart = geometry::plane(2.0).unwrap();
    let field = OperatorField::identity(chart.clone());
    let profile = solve_profile(Curvature::flat(), Alpha::Zero, 20.0, 1e-3).unwrap();
    let ball = mesh_and_distance(&chart, 48, profile.limit()).unwrap();
    let samples = sample_nodes(&ball, &field, f64::INFINITY).unwrap();
    assert!(growth_curve(&ball, &samples, &profile, GrowthOptions::new(10.0)).is_err());
    assert!(mesh_and_distance(&chart, 1, 1.0).is_err());
}
