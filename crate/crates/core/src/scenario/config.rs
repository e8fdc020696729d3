use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ballgrowth::TheoremId;
use crate::comparison::{solve_profile, Alpha, ComparisonProfile, Curvature};
use crate::error::{Error, Result};
use crate::fields::{CoordVectorField, OperatorField, ScalarField};
use crate::geometry::{self, AmbientSpace, Axis, ImmersionChart, Term};

use super::registry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    /// Built-in chart name or `custom`.
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_height: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_max: Option<f64>,
    /// `euclidean` or `hyperbolic`, for custom charts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient: Option<String>,
    /// Ambient dimension `n`, for custom charts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<Axis>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<f64>>,
    /// One term list per spatial ambient coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<Vec<Term>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flip_normal: Option<bool>,
}

impl ChartSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.into(),
            extent: None,
            radius: None,
            half_height: None,
            theta_max: None,
            v_max: None,
            c: None,
            x_max: None,
            y_max: None,
            ambient: None,
            n: None,
            axes: None,
            base: None,
            components: None,
            flip_normal: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    /// `identity`, `scalar_exp`, `newton`, `shape_operator` or `distribution`.
    pub preset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    /// Decay rate `k` of `λ = e^{−k r}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    /// Exponent `s` in `Φ = λ^s I`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    /// Constant coordinate fields spanning the distribution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spanning: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub positivity: bool,
}

impl FieldSpec {
    pub fn preset(name: &str) -> Self {
        Self {
            preset: name.into(),
            j: None,
            rate: None,
            exponent: None,
            spanning: None,
            positivity: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    /// `flat`, `hyperbolic`, `spherical` or `table`.
    pub curvature: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_t: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_k: Option<Vec<f64>>,
    /// `zero`, `constant`, `inverse_shifted` or `scaled` (`(m−1)c/m`).
    pub alpha: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub t_max: f64,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_step() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndBallSpec {
    pub p: f64,
    pub kappa: f64,
    /// Upper curvature bound `c²` of the ambient.
    pub c: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub resolution: usize,
    pub mu_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    /// Relative slack for theorem bounds and `F`/`G` checks.
    #[serde(default = "default_slack")]
    pub tolerance: f64,
    #[serde(default = "default_hypothesis_tol")]
    pub hypothesis_tol: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Sample count for pointwise identity checks.
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_slack() -> f64 {
    0.07
}

fn default_hypothesis_tol() -> f64 {
    1e-3
}

fn default_seed() -> u64 {
    1
}

fn default_points() -> usize {
    50
}

/// Pointwise and integrated identity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    PointwiseComparison,
    DomainComparison,
    Foliation,
    NewtonDivergence,
    Propositions,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::PointwiseComparison => "pointwise_comparison",
            Self::DomainComparison => "domain_comparison",
            Self::Foliation => "foliation",
            Self::NewtonDivergence => "newton_divergence",
            Self::Propositions => "propositions",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub chart: ChartSpec,
    pub field: FieldSpec,
    pub profile: ProfileSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub theorems: Vec<TheoremId>,
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_ball: Option<EndBallSpec>,
}

/// Deep merge of `over` into `base`; tables merge, everything else replaces.
fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn need<T: Copy>(v: Option<T>, path: &str, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::config(path, format!("required for {what}")))
}

fn positive(v: f64, path: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(path, format!("must be positive and finite, got {v}")))
    }
}

impl ScenarioConfig {
    /// Parses a TOML document. With a top-level `scenario = "<name>"` the
    /// built-in scenario is used as the base and the remaining keys override
    /// it.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<document>", e.to_string()))?;
        let value = match doc.remove("scenario") {
            Some(toml::Value::String(name)) => {
                let base = registry::builtin(&name)?;
                let mut v = toml::Value::try_from(&base)
                    .map_err(|e| Error::config("scenario", e.to_string()))?;
                merge(&mut v, toml::Value::Table(doc));
                v
            }
            Some(other) => {
                return Err(Error::config("scenario", format!("expected a string, got {other}")));
            }
            None => toml::Value::Table(doc),
        };
        let cfg: Self = value
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<document>", e.to_string()))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).unwrap_or_default())
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.run;
        if r.resolution < crate::ballgrowth::MIN_RESOLUTION {
            return Err(Error::config(
                "run.resolution",
                format!("must be at least {}, got {}", crate::ballgrowth::MIN_RESOLUTION, r.resolution),
            ));
        }
        positive(r.mu_max, "run.mu_max")?;
        if let Some(mu0) = r.mu0 {
            positive(mu0, "run.mu0")?;
            if mu0 >= r.mu_max {
                return Err(Error::config("run.mu0", "must be below run.mu_max"));
            }
        }
        if !(0.0..1.0).contains(&r.tolerance) {
            return Err(Error::config("run.tolerance", "must lie in [0, 1)"));
        }
        if !(r.hypothesis_tol >= 0.0) {
            return Err(Error::config("run.hypothesis_tol", "must be nonnegative"));
        }
        if r.points == 0 {
            return Err(Error::config("run.points", "must be at least 1"));
        }
        positive(self.profile.t_max, "profile.t_max")?;
        positive(self.profile.step, "profile.step")?;
        if let Some(e) = &self.end_ball {
            positive(e.mu, "end_ball.mu")?;
            positive(e.c, "end_ball.c")?;
            if !(e.p >= 1.0) {
                return Err(Error::config("end_ball.p", "must be at least 1"));
            }
            if !(e.kappa >= 0.0) {
                return Err(Error::config("end_ball.kappa", "must be nonnegative"));
            }
        }
        // Presets must resolve.
        self.build_chart()?;
        self.build_profile()?;
        Ok(())
    }

    pub fn build_chart(&self) -> Result<ImmersionChart> {
        let s = &self.chart;
        let n = s.name.as_str();
        let chart = match n {
            "plane" => geometry::plane(positive(need(s.extent, "chart.extent", n)?, "chart.extent")?),
            "cylinder" => geometry::cylinder(
                positive(need(s.radius, "chart.radius", n)?, "chart.radius")?,
                positive(need(s.half_height, "chart.half_height", n)?, "chart.half_height")?,
            ),
            "sphere" => geometry::sphere(positive(need(s.radius, "chart.radius", n)?, "chart.radius")?),
            "catenoid" => geometry::catenoid(positive(need(s.v_max, "chart.v_max", n)?, "chart.v_max")?),
            "helicoid" => geometry::helicoid(
                positive(need(s.theta_max, "chart.theta_max", n)?, "chart.theta_max")?,
                positive(need(s.v_max, "chart.v_max", n)?, "chart.v_max")?,
            ),
            "graph" => geometry::parabolic_graph(positive(need(s.extent, "chart.extent", n)?, "chart.extent")?),
            "h2_band" => geometry::hyperbolic_plane(
                positive(need(s.c, "chart.c", n)?, "chart.c")?,
                positive(need(s.x_max, "chart.x_max", n)?, "chart.x_max")?,
                positive(need(s.y_max, "chart.y_max", n)?, "chart.y_max")?,
            ),
            "h2_normal" => geometry::hyperbolic_normal_plane(
                positive(need(s.c, "chart.c", n)?, "chart.c")?,
                positive(need(s.extent, "chart.extent", n)?, "chart.extent")?,
            ),
            "custom" => {
                let ambient = match s.ambient.as_deref() {
                    Some("euclidean") => AmbientSpace::euclidean(need(s.n, "chart.n", "custom charts")?)?,
                    Some("hyperbolic") => AmbientSpace::hyperbolic(
                        need(s.n, "chart.n", "custom charts")?,
                        positive(need(s.c, "chart.c", "hyperbolic custom charts")?, "chart.c")?,
                    )?,
                    other => {
                        return Err(Error::config(
                            "chart.ambient",
                            format!("expected `euclidean` or `hyperbolic`, got {other:?}"),
                        ))
                    }
                };
                let axes = s
                    .axes
                    .clone()
                    .ok_or_else(|| Error::config("chart.axes", "required for custom charts"))?;
                let base = s
                    .base
                    .clone()
                    .ok_or_else(|| Error::config("chart.base", "required for custom charts"))?;
                let comps = s
                    .components
                    .clone()
                    .ok_or_else(|| Error::config("chart.components", "required for custom charts"))?;
                geometry::term_chart(&self.name, ambient, axes, comps, base)
            }
            other => {
                return Err(Error::config(
                    "chart.name",
                    format!(
                        "unknown chart `{other}`; expected one of plane, cylinder, sphere, catenoid, \
                         helicoid, graph, h2_band, h2_normal, custom"
                    ),
                ))
            }
        }
        .map_err(|e| match e {
            Error::Config { .. } => e,
            other => Error::config("chart", other.to_string()),
        })?;
        Ok(match s.flip_normal {
            Some(flip) if flip != chart.normal_flipped() => chart.with_flipped_normal(flip),
            _ => chart,
        })
    }

    pub fn build_field(&self, chart: &ImmersionChart) -> Result<OperatorField> {
        let s = &self.field;
        let field = match s.preset.as_str() {
            "identity" => OperatorField::identity(chart.clone()),
            "scalar_exp" => {
                let rate = need(s.rate, "field.rate", "scalar_exp")?;
                let lambda = ScalarField::exp_neg_distance(chart, rate);
                OperatorField::scalar_identity(chart.clone(), lambda, s.exponent.unwrap_or(1.0))
            }
            "newton" => {
                let j = need(s.j, "field.j", "newton")?;
                if chart.codim() != 1 {
                    return Err(Error::config("field.preset", "newton needs a hypersurface chart"));
                }
                OperatorField::newton(chart.clone(), j)
            }
            "shape_operator" => OperatorField::shape_operator(chart.clone()),
            "distribution" => {
                let spanning = s
                    .spanning
                    .clone()
                    .ok_or_else(|| Error::config("field.spanning", "required for distribution"))?;
                if let Some(v) = spanning.iter().find(|v| v.len() != chart.dim()) {
                    return Err(Error::config(
                        "field.spanning",
                        format!("vector {v:?} must have {} components", chart.dim()),
                    ));
                }
                let fields: Vec<CoordVectorField> = spanning
                    .into_iter()
                    .map(|v| {
                        let v = DVector::from_vec(v);
                        Arc::new(move |_: &[f64]| v.clone()) as CoordVectorField
                    })
                    .collect();
                OperatorField::distribution(chart.clone(), fields)
            }
            other => {
                return Err(Error::config(
                    "field.preset",
                    format!(
                        "unknown preset `{other}`; expected identity, scalar_exp, newton, shape_operator or distribution"
                    ),
                ))
            }
        };
        Ok(field.with_positivity(s.positivity))
    }

    pub fn curvature(&self) -> Result<Curvature> {
        let s = &self.profile;
        match s.curvature.as_str() {
            "flat" => Ok(Curvature::flat()),
            "hyperbolic" => Ok(Curvature::hyperbolic(positive(need(s.c, "profile.c", "hyperbolic")?, "profile.c")?)),
            "spherical" => Ok(Curvature::spherical(positive(need(s.c, "profile.c", "spherical")?, "profile.c")?)),
            "table" => {
                let t = s.table_t.clone().ok_or_else(|| Error::config("profile.table_t", "required for table"))?;
                let k = s.table_k.clone().ok_or_else(|| Error::config("profile.table_k", "required for table"))?;
                Curvature::table(t, k).map_err(|e| Error::config("profile.table_t", e.to_string()))
            }
            other => Err(Error::config(
                "profile.curvature",
                format!("unknown curvature `{other}`; expected flat, hyperbolic, spherical or table"),
            )),
        }
    }

    pub fn alpha(&self, dim: usize) -> Result<Alpha> {
        let s = &self.profile;
        let a = match s.alpha.as_str() {
            "zero" => Alpha::Zero,
            "constant" => Alpha::Constant(need(s.kappa, "profile.kappa", "constant alpha")?),
            "inverse_shifted" => Alpha::InverseShifted(need(s.epsilon, "profile.epsilon", "inverse_shifted alpha")?),
            "scaled" => Alpha::scaled(dim, need(s.c, "profile.c", "scaled alpha")?),
            other => {
                return Err(Error::config(
                    "profile.alpha",
                    format!("unknown alpha `{other}`; expected zero, constant, inverse_shifted or scaled"),
                ))
            }
        };
        a.validate().map_err(|e| Error::config("profile.alpha", e.to_string()))?;
        Ok(a)
    }

    pub fn build_profile(&self) -> Result<ComparisonProfile> {
        let dim = self.build_chart()?.dim();
        solve_profile(self.curvature()?, self.alpha(dim)?, self.profile.t_max, self.profile.step)
            .map_err(|e| Error::config("profile", e.to_string()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
