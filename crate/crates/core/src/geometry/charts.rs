//! Built-in charts and term-list charts from configuration.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{AmbientSpace, Axis, ImmersionChart};
use crate::error::{Error, Result};

/// `(u₁, u₂, 0)` on `[−e, e]²`.
pub fn plane(extent: f64) -> Result<ImmersionChart> {
    ImmersionChart::new(
        "plane",
        AmbientSpace::euclidean(3)?,
        vec![Axis::bounded(-extent, extent); 2],
        Arc::new(|u: &[f64]| DVector::from_vec(vec![u[0], u[1], 0.0])),
        vec![0.0, 0.0],
    )
}

/// `(R cos θ, R sin θ, z)` with `θ` periodic and the unit normal pointing
/// towards the axis, so that `A = diag(1/R, 0)`.
pub fn cylinder(radius: f64, half_height: f64) -> Result<ImmersionChart> {
    Ok(ImmersionChart::new(
        "cylinder",
        AmbientSpace::euclidean(3)?,
        vec![Axis::periodic(-PI, PI), Axis::bounded(-half_height, half_height)],
        Arc::new(move |u: &[f64]| {
            DVector::from_vec(vec![radius * u[0].cos(), radius * u[0].sin(), u[1]])
        }),
        vec![0.0, 0.0],
    )?
    .with_flipped_normal(true))
}

/// Spherical coordinates `(θ, φ)` away from the poles; the default normal
/// points inwards, so `II = (1/R) g ⊗ ν`.
pub fn sphere(radius: f64) -> Result<ImmersionChart> {
    ImmersionChart::new(
        "sphere",
        AmbientSpace::euclidean(3)?,
        vec![Axis::periodic(-PI, PI), Axis::bounded(0.2, PI - 0.2)],
        Arc::new(move |u: &[f64]| {
            let (st, ct) = u[0].sin_cos();
            let (sp, cp) = u[1].sin_cos();
            DVector::from_vec(vec![radius * sp * ct, radius * sp * st, radius * cp])
        }),
        vec![0.0, PI / 2.0],
    )
}

/// `(cosh v cos θ, cosh v sin θ, v)`; conformal with factor `cosh² v`.
pub fn catenoid(v_max: f64) -> Result<ImmersionChart> {
    ImmersionChart::new(
        "catenoid",
        AmbientSpace::euclidean(3)?,
        vec![Axis::periodic(-PI, PI), Axis::bounded(-v_max, v_max)],
        Arc::new(|u: &[f64]| {
            let ch = u[1].cosh();
            DVector::from_vec(vec![ch * u[0].cos(), ch * u[0].sin(), u[1]])
        }),
        vec![0.0, 0.0],
    )
}

/// `(sinh v cos θ, sinh v sin θ, θ)`; conformal with factor `cosh² v`.
pub fn helicoid(theta_max: f64, v_max: f64) -> Result<ImmersionChart> {
    ImmersionChart::new(
        "helicoid",
        AmbientSpace::euclidean(3)?,
        vec![
            Axis::bounded(-theta_max, theta_max),
            Axis::bounded(-v_max, v_max),
        ],
        Arc::new(|u: &[f64]| {
            let sh = u[1].sinh();
            DVector::from_vec(vec![sh * u[0].cos(), sh * u[0].sin(), u[0]])
        }),
        vec![0.0, 0.0],
    )
}

/// Graph `z = u₁²` over `[−e, e]²`.
pub fn parabolic_graph(extent: f64) -> Result<ImmersionChart> {
    ImmersionChart::new(
        "graph",
        AmbientSpace::euclidean(3)?,
        vec![Axis::bounded(-extent, extent); 2],
        Arc::new(|u: &[f64]| DVector::from_vec(vec![u[0], u[1], u[0] * u[0]])),
        vec![0.0, 0.0],
    )
}

/// Totally geodesic `H²(−c²) ⊂ H³(−c²)` in band coordinates:
/// `f(x, y) = (1/c)(cosh x / cos y, sinh x / cos y, tan y, 0)`.
///
/// The metric is `sec² y (dx² + dy²) / c²` and the distance to the base point
/// `(0, 0)` satisfies `cosh(c r) = cosh x / cos y`.
pub fn hyperbolic_plane(c: f64, x_max: f64, y_max: f64) -> Result<ImmersionChart> {
    if !(y_max < PI / 2.0) {
        return Err(Error::Domain(format!(
            "band coordinate bound {y_max} must stay below π/2"
        )));
    }
    ImmersionChart::new(
        "h2_totally_geodesic",
        AmbientSpace::hyperbolic(3, c)?,
        vec![Axis::bounded(-x_max, x_max), Axis::bounded(-y_max, y_max)],
        Arc::new(move |u: &[f64]| {
            let sec = 1.0 / u[1].cos();
            DVector::from_vec(vec![
                u[0].cosh() * sec / c,
                u[0].sinh() * sec / c,
                u[1].tan() / c,
                0.0,
            ])
        }),
        vec![0.0, 0.0],
    )
}

/// Totally geodesic `H²(−c²) ⊂ H³(−c²)` in geodesic normal coordinates at
/// the base point: `f(u) = (1/c)(cosh(c|u|), sinh(c|u|) u/|u|, 0)`.
///
/// The ambient and intrinsic distances to the base point both equal `|u|`;
/// the metric is `dρ² + (sinh(cρ)/c)² dθ²` in polar form.
pub fn hyperbolic_normal_plane(c: f64, extent: f64) -> Result<ImmersionChart> {
    ImmersionChart::new(
        "h2_normal",
        AmbientSpace::hyperbolic(3, c)?,
        vec![Axis::bounded(-extent, extent); 2],
        Arc::new(move |u: &[f64]| {
            let s = (u[0] * u[0] + u[1] * u[1]).sqrt();
            let ratio = if s < 1e-8 { 1.0 + (c * s).powi(2) / 6.0 } else { (c * s).sinh() / (c * s) };
            DVector::from_vec(vec![(c * s).cosh() / c, ratio * u[0], ratio * u[1], 0.0])
        }),
        vec![0.0, 0.0],
    )
}

/// Band-coordinate box containing the intrinsic ball of radius `mu` of
/// [`hyperbolic_plane`], with a relative margin.
pub fn hyperbolic_plane_box(c: f64, mu: f64, margin: f64) -> (f64, f64) {
    let x = c * mu * (1.0 + margin);
    let y = (c * mu * (1.0 + margin)).sinh().atan();
    (x, y.min(PI / 2.0 - 1e-3))
}

/// Lifts spatial coordinates `y ∈ ℝⁿ` to the hyperboloid:
/// `(√(1/c² + |y|²), y)`.
pub fn hyperboloid_lift(c: f64, y: &DVector<f64>) -> DVector<f64> {
    let mut x = DVector::zeros(y.len() + 1);
    x[0] = (1.0 / (c * c) + y.norm_squared()).sqrt();
    x.rows_mut(1, y.len()).copy_from(y);
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Elementary {
    Sin,
    Cos,
    Sinh,
    Cosh,
}

impl Elementary {
    fn eval(self, x: f64) -> f64 {
        match self {
            Self::Sin => x.sin(),
            Self::Cos => x.cos(),
            Self::Sinh => x.sinh(),
            Self::Cosh => x.cosh(),
        }
    }
}

/// `func(freq · u[axis])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub func: Elementary,
    pub axis: usize,
    #[serde(default = "one")]
    pub freq: f64,
}

fn one() -> f64 {
    1.0
}

/// `coef · Π_a u[a]^{powers[a]} · Π factors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    #[serde(default)]
    pub powers: Vec<u32>,
    #[serde(default)]
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn eval(&self, u: &[f64]) -> f64 {
        let mono: f64 = self
            .powers
            .iter()
            .zip(u)
            .map(|(&p, &x)| x.powi(p as i32))
            .product();
        let trig: f64 = self
            .factors
            .iter()
            .map(|f| f.func.eval(f.freq * u[f.axis]))
            .product();
        self.coef * mono * trig
    }

    fn validate(&self, m: usize) -> Result<()> {
        if self.powers.len() > m {
            return Err(Error::Domain(format!(
                "term has {} exponents for a {m}-dimensional chart",
                self.powers.len()
            )));
        }
        if let Some(f) = self.factors.iter().find(|f| f.axis >= m) {
            return Err(Error::Domain(format!(
                "factor refers to axis {} of a {m}-dimensional chart",
                f.axis
            )));
        }
        Ok(())
    }
}

/// A chart whose spatial components are sums of [`Term`]s. For a hyperbolic
/// ambient the `n` spatial components are lifted with [`hyperboloid_lift`].
pub fn term_chart(
    name: &str,
    ambient: AmbientSpace,
    axes: Vec<Axis>,
    components: Vec<Vec<Term>>,
    base_point: Vec<f64>,
) -> Result<ImmersionChart> {
    if components.len() != ambient.dim() {
        return Err(Error::Domain(format!(
            "chart `{name}` has {} components, ambient needs {}",
            components.len(),
            ambient.dim()
        )));
    }
    for t in components.iter().flatten() {
        t.validate(axes.len())?;
    }
    let spatial = move |u: &[f64]| {
        DVector::from_iterator(
            components.len(),
            components.iter().map(|c| c.iter().map(|t| t.eval(u)).sum::<f64>()),
        )
    };
    let map: super::ChartMap = match ambient {
        AmbientSpace::Euclidean { .. } => Arc::new(spatial),
        AmbientSpace::Hyperbolic { c, .. } => Arc::new(move |u: &[f64]| hyperboloid_lift(c, &spatial(u))),
    };
    ImmersionChart::new(name, ambient, axes, map, base_point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn term_eval_combines_monomial_and_factors() {
        let t = Term {
            coef: 2.0,
            powers: vec![1, 2],
            factors: vec![Factor {
                func: Elementary::Cos,
                axis: 0,
                freq: 0.5,
            }],
        };
        let u = [1.5, -2.0];
        assert_abs_diff_eq!(t.eval(&u), 2.0 * 1.5 * 4.0 * (0.75f64).cos(), epsilon = 1e-14);
    }

    #[test]
    fn lifted_points_lie_on_the_hyperboloid() {
        let amb = AmbientSpace::hyperbolic(3, 0.7).unwrap();
        let x = hyperboloid_lift(0.7, &DVector::from_vec(vec![0.3, -1.0, 2.0]));
        assert!(amb.model_residual(&x) < 1e-14);
    }

    #[test]
    fn band_chart_distance_matches_closed_form() {
        let chart = hyperbolic_plane(1.0, 2.0, 1.2).unwrap();
        let u = [0.8, -0.4];
        let d = chart
            .ambient()
            .distance(&chart.eval(&u), &chart.base_position());
        assert_abs_diff_eq!(d.cosh(), 0.8f64.cosh() / 0.4f64.cos(), epsilon = 1e-12);
    }

    #[test]
    fn normal_plane_distance_is_coordinate_norm() {
        let chart = hyperbolic_normal_plane(0.8, 3.0).unwrap();
        let u = [1.2, -2.1];
        let d = chart.ambient().distance(&chart.eval(&u), &chart.base_position());
        assert_abs_diff_eq!(d, (1.2f64 * 1.2 + 2.1 * 2.1).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn term_chart_rejects_bad_axis() {
        let amb = AmbientSpace::euclidean(3).unwrap();
        let bad = vec![
            vec![Term {
                coef: 1.0,
                powers: vec![],
                factors: vec![Factor {
                    func: Elementary::Sin,
                    axis: 4,
                    freq: 1.0,
                }],
            }],
            vec![],
            vec![],
        ];
        assert!(term_chart("bad", amb, vec![Axis::bounded(-1.0, 1.0); 2], bad, vec![0.0, 0.0]).is_err());
    }
}
