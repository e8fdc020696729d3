//! Comparison profiles `h'' + 𝒦(t) h = 0`, `h(0) = 0`, `h'(0) = 1`.
//!
//! A [`ComparisonProfile`] bundles the curvature bound `𝒦`, the admissible
//! function `α`, a dense RK4 solution `h`, its first positive zero `r₀` and
//! the validity radius `μ_{𝒦,α}`: the supremum of `t` such that on all of
//! `(0, t]` both `h'/h > α` and `α' ≥ −(h'/h)² − 𝒦` hold. Infinite radii are
//! represented by [`Extent::Unbounded`].
//!
//! The module also hosts the two comparison checks consuming a profile: the
//! pointwise residual `D_Φ(h(r)∇̄r) − h'(r) trΦ` and its integrated form over
//! a meshed ball.

use serde::{Deserialize, Serialize};

use crate::ballgrowth::{MeshedBall, NodeSample};
use crate::error::{Error, Result};
use crate::fields::{phi_divergence, AmbientVectorField, OperatorField};
use crate::geometry::radial_field_at;

/// A radius that may be infinite. `Finite(_) < Unbounded`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extent {
    Finite(f64),
    Unbounded,
}

impl Extent {
    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Self::Finite(x) => Some(x),
            Self::Unbounded => None,
        }
    }

    /// `+∞` for the sentinel; for arithmetic with other bounds only.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// Whether `t < self`.
    pub fn exceeds(&self, t: f64) -> bool {
        match *self {
            Self::Finite(x) => t < x,
            Self::Unbounded => true,
        }
    }
}

/// The even curvature bound `𝒦`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curvature {
    Constant(f64),
    /// Samples of `𝒦` at increasing `t ≥ 0`, linearly interpolated and held
    /// constant past the last sample; evaluated at `|t|`.
    Table { t: Vec<f64>, k: Vec<f64> },
}

impl Curvature {
    pub fn flat() -> Self {
        Self::Constant(0.0)
    }

    pub fn hyperbolic(c: f64) -> Self {
        Self::Constant(-c * c)
    }

    pub fn spherical(c: f64) -> Self {
        Self::Constant(c * c)
    }

    pub fn table(t: Vec<f64>, k: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || t.len() != k.len() {
            return Err(Error::Domain(
                "curvature table needs at least two (t, 𝒦) pairs of equal length".into(),
            ));
        }
        if t[0] < 0.0 || t.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain(
                "curvature table abscissae must be nonnegative and strictly increasing".into(),
            ));
        }
        if t.iter().chain(&k).any(|x| !x.is_finite()) {
            return Err(Error::Domain("curvature table has non-finite entries".into()));
        }
        Ok(Self::Table { t, k })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Constant(k) => *k,
            Self::Table { t: ts, k } => {
                let t = t.abs();
                if t <= ts[0] {
                    return k[0];
                }
                let last = ts.len() - 1;
                if t >= ts[last] {
                    return k[last];
                }
                let i = ts.partition_point(|&x| x <= t) - 1;
                let s = (t - ts[i]) / (ts[i + 1] - ts[i]);
                k[i] + s * (k[i + 1] - k[i])
            }
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Self::Constant(k) => Some(*k),
            Self::Table { .. } => None,
        }
    }

    /// Smallest value of `𝒦` on `[0, t]`; a constant ambient curvature `K̄`
    /// satisfies `K̄ ≤ 𝒦(r)` for all `r ≤ t` iff it is at most this value.
    pub fn min_on(&self, t: f64) -> f64 {
        match self {
            Self::Constant(k) => *k,
            Self::Table { t: ts, k } => ts
                .iter()
                .zip(k)
                .filter(|(x, _)| **x <= t)
                .map(|(_, v)| *v)
                .chain([self.eval(t)])
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// The nonnegative `C¹` function `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alpha {
    Zero,
    Constant(f64),
    /// `1 / (t + ε)`.
    InverseShifted(f64),
}

impl Alpha {
    /// The constant `(m − 1) c / m`.
    pub fn scaled(m: usize, c: f64) -> Self {
        Self::Constant((m as f64 - 1.0) * c / m as f64)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Zero => Ok(()),
            Self::Constant(k) if k >= 0.0 && k.is_finite() => Ok(()),
            Self::InverseShifted(e) if e > 0.0 && e.is_finite() => Ok(()),
            other => Err(Error::Domain(format!("α = {other:?} is not a nonnegative C¹ function"))),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Constant(k) => k,
            Self::InverseShifted(e) => 1.0 / (t + e),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Self::Zero | Self::Constant(_) => 0.0,
            Self::InverseShifted(e) => -1.0 / ((t + e) * (t + e)),
        }
    }

    /// `∫_a^b α`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Constant(k) => k * (b - a),
            Self::InverseShifted(e) => ((b + e) / (a + e)).ln(),
        }
    }

    /// `∫_a^b exp(−∫_a^τ α) dτ`.
    pub fn integral_of_decay(&self, a: f64, b: f64) -> f64 {
        match *self {
            Self::Zero => b - a,
            Self::Constant(0.0) => b - a,
            Self::Constant(k) => -(-k * (b - a)).exp_m1() / k,
            Self::InverseShifted(e) => (a + e) * ((b + e) / (a + e)).ln(),
        }
    }
}

/// Solved comparison profile. Read-only after [`solve_profile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonProfile {
    curvature: Curvature,
    alpha: Alpha,
    step: f64,
    t: Vec<f64>,
    h: Vec<f64>,
    dh: Vec<f64>,
    r0: Extent,
    mu_bound: Extent,
    truncated: bool,
}

const OVERFLOW: f64 = 1e150;

/// Integrates `h'' = −𝒦h` by RK4 on a uniform grid ending exactly at `t_max`
/// (the step is shrunk to fit), then locates `r₀` and `μ_{𝒦,α}`.
pub fn solve_profile(curvature: Curvature, alpha: Alpha, t_max: f64, step: f64) -> Result<ComparisonProfile> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Domain(format!("profile step {step} must be positive")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::Domain(format!("profile range {t_max} must be positive")));
    }
    alpha.validate()?;
    let n = (t_max / step).ceil().max(1.0) as usize;
    let dt = t_max / n as f64;
    let k = |t: f64| curvature.eval(t);

    let mut t = vec![0.0];
    let mut h = vec![0.0];
    let mut dh = vec![1.0];
    let mut truncated = false;
    for i in 0..n {
        let t0 = i as f64 * dt;
        let (y, v) = (h[i], dh[i]);
        let (k1y, k1v) = (v, -k(t0) * y);
        let tm = t0 + 0.5 * dt;
        let (k2y, k2v) = (v + 0.5 * dt * k1v, -k(tm) * (y + 0.5 * dt * k1y));
        let (k3y, k3v) = (v + 0.5 * dt * k2v, -k(tm) * (y + 0.5 * dt * k2y));
        let t1 = t0 + dt;
        let (k4y, k4v) = (v + dt * k3v, -k(t1) * (y + dt * k3y));
        let y1 = y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        let v1 = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if !(y1.abs() < OVERFLOW && v1.abs() < OVERFLOW) {
            truncated = true;
            break;
        }
        t.push(if i + 1 == n { t_max } else { t1 });
        h.push(y1);
        dh.push(v1);
    }

    let mut profile = ComparisonProfile {
        curvature,
        alpha,
        step: dt,
        t,
        h,
        dh,
        r0: Extent::Unbounded,
        mu_bound: Extent::Unbounded,
        truncated,
    };
    profile.r0 = profile.locate_r0();
    profile.mu_bound = profile.locate_mu_bound();
    Ok(profile)
}

fn bisect<F: Fn(f64) -> bool>(mut good: f64, mut bad: f64, ok: F) -> f64 {
    for _ in 0..100 {
        let mid = 0.5 * (good + bad);
        if mid == good || mid == bad {
            break;
        }
        if ok(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    0.5 * (good + bad)
}

impl ComparisonProfile {
    pub fn curvature(&self) -> &Curvature {
        &self.curvature
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// End of the solved range (smaller than requested after truncation).
    pub fn t_max(&self) -> f64 {
        *self.t.last().expect("profile grid is non-empty")
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn r0(&self) -> Extent {
        self.r0
    }

    pub fn mu_bound(&self) -> Extent {
        self.mu_bound
    }

    /// Largest radius on which `h` may be evaluated: `min(r₀, t_max)`.
    pub fn limit(&self) -> f64 {
        self.r0.to_f64().min(self.t_max())
    }

    /// Largest radius on which the growth estimates apply:
    /// `min(μ_{𝒦,α}, r₀, t_max)`.
    pub fn valid_radius(&self) -> f64 {
        self.mu_bound.to_f64().min(self.limit())
    }

    pub fn grid(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.t, &self.h, &self.dh)
    }

    /// Cubic Hermite interpolation of `(h, h')` and `(h', h'')` on the grid.
    fn interpolate(&self, t: f64) -> (f64, f64) {
        let n = self.t.len() - 1;
        let t = t.clamp(0.0, self.t_max());
        let i = ((t / self.step) as usize).min(n.saturating_sub(1));
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let dt = t1 - t0;
        let s = (t - t0) / dt;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        let ddh0 = -self.curvature.eval(t0) * self.h[i];
        let ddh1 = -self.curvature.eval(t1) * self.h[i + 1];
        let h = h00 * self.h[i] + h10 * dt * self.dh[i] + h01 * self.h[i + 1] + h11 * dt * self.dh[i + 1];
        let dh = h00 * self.dh[i] + h10 * dt * ddh0 + h01 * self.dh[i + 1] + h11 * dt * ddh1;
        (h, dh)
    }

    fn check(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.t_max() && self.r0.exceeds(t)) {
            return Err(Error::ProfileDomain { r: t, limit: self.limit() });
        }
        Ok(())
    }

    /// `h(t)` for `0 ≤ t < r₀`, `t ≤ t_max`.
    pub fn h(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.interpolate(t).0)
    }

    pub fn dh(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.interpolate(t).1)
    }

    fn locate_r0(&self) -> Extent {
        let k = match self.h.iter().skip(1).position(|&y| y <= 0.0) {
            Some(k) => k + 1,
            None => return Extent::Unbounded,
        };
        if self.h[k] == 0.0 {
            return Extent::Finite(self.t[k]);
        }
        Extent::Finite(bisect(self.t[k - 1], self.t[k], |t| self.interpolate(t).0 > 0.0))
    }

    /// Both defining conditions of `μ_{𝒦,α}` at a single `t > 0`.
    pub fn window_conditions(&self, t: f64) -> (bool, bool) {
        let (h, dh) = self.interpolate(t);
        if !(h > 0.0) {
            return (false, false);
        }
        let q = dh / h;
        let k = self.curvature.eval(t);
        let positive = q > self.alpha.value(t);
        let slack = 1e-9 * (1.0 + q * q + k.abs());
        let monotone = self.alpha.derivative(t) >= -q * q - k - slack;
        (positive, monotone)
    }

    fn locate_mu_bound(&self) -> Extent {
        let ok = |t: f64| {
            let (a, b) = self.window_conditions(t);
            a && b
        };
        for i in 1..self.t.len() {
            let t = self.t[i];
            if !self.r0.exceeds(t) {
                // The quotient h'/h tends to −∞ at r₀; the window closes first.
                let lo = self.t[i - 1];
                return Extent::Finite(bisect(lo, self.r0.to_f64(), ok).min(self.r0.to_f64()));
            }
            if !ok(t) {
                let lo = self.t[i - 1];
                if lo == 0.0 {
                    return Extent::Finite(bisect(1e-12, t, ok));
                }
                return Extent::Finite(bisect(lo, t, ok));
            }
        }
        Extent::Unbounded
    }

    /// `exp(−∫_a^b α)`.
    pub fn decay(&self, a: f64, b: f64) -> f64 {
        (-self.alpha.integral(a, b)).exp()
    }
}

/// `D_Φ(h(r)∇̄r) − h'(r) trΦ` at `u`.
///
/// Nonnegative (up to discretization) when the ambient radial curvature is
/// bounded by `𝒦` and `Φ ⪰ 0`; zero when the ambient curvature equals `𝒦`.
pub fn pointwise_comparison_residual(
    field: &OperatorField,
    profile: &ComparisonProfile,
    u: &[f64],
) -> Result<f64> {
    let chart = field.chart();
    let x0 = chart.base_position();
    let amb = *chart.ambient();
    let r = amb.distance(&chart.eval(u), &x0);
    let limit = profile.valid_radius();
    if !(r < limit) {
        return Err(Error::ProfileDomain { r, limit });
    }
    let profile_c = profile.clone();
    let x: AmbientVectorField = std::sync::Arc::new(move |_u: &[f64], x: &nalgebra::DVector<f64>| {
        radial_field_at(&amb, x, &x0, &profile_c)
    });
    let d = phi_divergence(field, &x, u)?;
    let (_, phi) = field.mixed_at(u)?;
    Ok(d - profile.dh(r)? * phi.trace())
}

/// Integrated comparison over `B_μ`:
/// `∫_{∂B_μ} h(r)⟨Φ∇r, ν⟩` against `∫_{B_μ} (h'(r) trΦ − h(r)|H_Φ + div Φ|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainCheck {
    pub mu: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub boundary_cells: usize,
}

/// Boundary flux by coarea: `d/dμ ∫_{B_μ} h(r)⟨Φ∇r, ∇ρ⟩`, central
/// differences with step twice the lattice spacing.
pub fn domain_comparison_check(
    ball: &MeshedBall,
    samples: &[NodeSample],
    profile: &ComparisonProfile,
    mu: f64,
) -> Result<DomainCheck> {
    let dmu = 2.0 * ball.metric_spacing();
    let limit = ball.usable_radius().min(profile.limit());
    if !(mu > dmu && mu + dmu <= limit) {
        return Err(Error::ProfileDomain { r: mu, limit: limit - dmu });
    }
    let boundary_cells = ball.boundary_cells(mu);
    if boundary_cells < 8 {
        return Err(Error::InsufficientResolution { boundary_cells });
    }
    let mut flux = Vec::with_capacity(samples.len());
    let mut interior = Vec::with_capacity(samples.len());
    for (node, s) in ball.nodes().iter().zip(samples) {
        if node.r < profile.limit() {
            let (h, dh) = (profile.h(node.r)?, profile.dh(node.r)?);
            flux.push(h * s.flux);
            interior.push(dh * s.tr_phi - h * s.mean_div_norm);
        } else {
            flux.push(0.0);
            interior.push(0.0);
        }
    }
    let lhs = (ball.integrate(mu + dmu, &flux) - ball.integrate(mu - dmu, &flux)) / (2.0 * dmu);
    let rhs = ball.integrate(mu, &interior);
    Ok(DomainCheck {
        mu,
        lhs,
        rhs,
        slack: lhs - rhs,
        boundary_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn flat_profile_is_linear_and_unbounded() {
        let p = solve_profile(Curvature::flat(), Alpha::InverseShifted(0.5), 5.0, 1e-3).unwrap();
        for &t in &[0.0, 0.3, 2.0, 4.99] {
            assert_abs_diff_eq!(p.h(t).unwrap(), t, epsilon = 1e-10);
        }
        assert_eq!(p.mu_bound(), Extent::Unbounded);
        assert_eq!(p.r0(), Extent::Unbounded);
    }

    #[test]
    fn hyperbolic_profile_matches_sinh() {
        let p = solve_profile(Curvature::hyperbolic(1.0), Alpha::Zero, 5.0, 1e-3).unwrap();
        assert_abs_diff_eq!(p.h(2.0).unwrap(), 2f64.sinh(), epsilon = 1e-6);
        assert_abs_diff_eq!(p.dh(2.0).unwrap(), 2f64.cosh(), epsilon = 1e-6);
        assert_eq!(p.mu_bound(), Extent::Unbounded);
    }

    #[test]
    fn spherical_profile_window() {
        let p = solve_profile(Curvature::spherical(1.0), Alpha::Constant(1.0), 4.0, 1e-3).unwrap();
        assert_abs_diff_eq!(p.r0().finite().unwrap(), PI, epsilon = 1e-4);
        assert_abs_diff_eq!(p.mu_bound().finite().unwrap(), 1f64.atan(), epsilon = 1e-4);
        assert!(p.mu_bound() <= p.r0());
        assert!(matches!(p.h(3.5), Err(Error::ProfileDomain { .. })));
    }

    #[test]
    fn spherical_window_for_other_constants() {
        let (c, kappa) = (2.0, 0.5);
        let p = solve_profile(Curvature::spherical(c), Alpha::Constant(kappa), 2.0, 1e-3).unwrap();
        assert_abs_diff_eq!(p.mu_bound().finite().unwrap(), (c / kappa).atan() / c, epsilon = 1e-4);
        assert_abs_diff_eq!(p.r0().finite().unwrap(), PI / c, epsilon = 1e-4);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(solve_profile(Curvature::flat(), Alpha::Zero, 1.0, 0.0).is_err());
        assert!(solve_profile(Curvature::flat(), Alpha::Zero, 1.0, -1.0).is_err());
        assert!(solve_profile(Curvature::flat(), Alpha::Constant(-1.0), 1.0, 0.1).is_err());
    }

    #[test]
    fn overflow_truncates_with_flag() {
        let p = solve_profile(Curvature::hyperbolic(10.0), Alpha::Zero, 50.0, 1e-2).unwrap();
        assert!(p.truncated());
        assert!(p.t_max() < 50.0);
    }

    #[test]
    fn curvature_table_interpolates_evenly() {
        let k = Curvature::table(vec![0.0, 1.0, 2.0], vec![0.0, -1.0, -1.0]).unwrap();
        assert_abs_diff_eq!(k.eval(0.5), -0.5);
        assert_abs_diff_eq!(k.eval(-0.5), -0.5);
        assert_abs_diff_eq!(k.eval(7.0), -1.0);
        assert!(Curvature::table(vec![1.0, 0.5], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn decay_integrals_match_quadrature() {
        for alpha in [Alpha::Zero, Alpha::Constant(0.7), Alpha::InverseShifted(0.3)] {
            let (a, b) = (0.4, 3.1);
            let n = 20000;
            let dt = (b - a) / n as f64;
            let numeric: f64 = (0..n)
                .map(|i| {
                    let t = a + (i as f64 + 0.5) * dt;
                    (-alpha.integral(a, t)).exp() * dt
                })
                .sum();
            assert_abs_diff_eq!(alpha.integral_of_decay(a, b), numeric, epsilon = 1e-7);
        }
    }
}
