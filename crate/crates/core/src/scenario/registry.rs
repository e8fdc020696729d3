//! Built-in scenarios.

use crate::ballgrowth::TheoremId;
use crate::error::{Error, Result};

use super::config::{
    ChartSpec, CheckKind, EndBallSpec, FieldSpec, ProfileSpec, RunSpec, ScenarioConfig,
};

pub const BUILTIN_NAMES: [&str; 8] = [
    "plane",
    "cylinder_newton",
    "catenoid",
    "helicoid",
    "h2_totally_geodesic",
    "h2_lambda_exp",
    "plane_foliation",
    "graph_foliation",
];

fn flat(alpha: &str, t_max: f64) -> ProfileSpec {
    ProfileSpec {
        curvature: "flat".into(),
        c: None,
        table_t: None,
        table_k: None,
        alpha: alpha.into(),
        kappa: None,
        epsilon: None,
        t_max,
        step: 1e-3,
    }
}

fn hyperbolic_scaled(c: f64, t_max: f64) -> ProfileSpec {
    ProfileSpec {
        curvature: "hyperbolic".into(),
        c: Some(c),
        alpha: "scaled".into(),
        ..flat("scaled", t_max)
    }
}

fn run(resolution: usize, mu_max: f64) -> RunSpec {
    RunSpec {
        resolution,
        mu_max,
        mu0: None,
        tolerance: 0.07,
        hypothesis_tol: 1e-3,
        seed: 1,
        points: 50,
    }
}

pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    let cfg = match name {
        "plane" => ScenarioConfig {
            name: name.into(),
            chart: ChartSpec {
                extent: Some(7.0),
                ..ChartSpec::named("plane")
            },
            field: FieldSpec::preset("identity"),
            profile: ProfileSpec {
                epsilon: Some(1.0),
                ..flat("inverse_shifted", 12.0)
            },
            run: run(128, 6.0),
            theorems: vec![TheoremId::General, TheoremId::Logarithmic],
            checks: vec![
                CheckKind::PointwiseComparison,
                CheckKind::DomainComparison,
                CheckKind::Propositions,
            ],
            end_ball: None,
        },
        "cylinder_newton" => ScenarioConfig {
            name: name.into(),
            chart: ChartSpec {
                radius: Some(1.0),
                half_height: Some(17.0),
                ..ChartSpec::named("cylinder")
            },
            field: FieldSpec {
                j: Some(1),
                positivity: true,
                ..FieldSpec::preset("newton")
            },
            profile: flat("zero", 20.0),
            run: run(256, 15.0),
            theorems: vec![TheoremId::Linear],
            checks: vec![CheckKind::NewtonDivergence, CheckKind::PointwiseComparison],
            end_ball: None,
        },
        "catenoid" => ScenarioConfig {
            name: name.into(),
            chart: ChartSpec {
                v_max: Some(3.2),
                ..ChartSpec::named("catenoid")
            },
            field: FieldSpec::preset("identity"),
            profile: flat("zero", 15.0),
            run: run(192, 8.0),
            theorems: vec![TheoremId::Linear],
            checks: vec![CheckKind::PointwiseComparison, CheckKind::NewtonDivergence],
            end_ball: None,
        },
        "helicoid" => ScenarioConfig {
            name: name.into(),
            chart: ChartSpec {
                theta_max: Some(7.0),
                v_max: Some(2.75),
                ..ChartSpec::named("helicoid")
            },
            field: FieldSpec::preset("identity"),
            profile: flat("zero", 12.0),
            run: run(256, 6.0),
            theorems: vec![TheoremId::Linear],
            checks: vec![CheckKind::PointwiseComparison],
            end_ball: None,
        },
        "h2_totally_geodesic" => ScenarioConfig {
            name: name.into(),
            chart: ChartSpec {
                c: Some(1.0),
                extent: Some(3.4),
                ..ChartSpec::named("h2_normal")
            },
            field: FieldSpec::preset("identity"),
            profile: hyperbolic_scaled(1.0, 6.0),
            run: run(160, 3.0),
            theorems: vec![TheoremId::General, TheoremId::PhiR, TheoremId::HyperbolicRate],
            checks: vec![CheckKind::PointwiseComparison, CheckKind::DomainComparison],
            end_ball: None,
        },
        "h2_lambda_exp" => ScenarioConfig {
            name: name.into(),
            chart: ChartSpec {
                c: Some(1.0),
                extent: Some(3.4),
                ..ChartSpec::named("h2_normal")
            },
            field: FieldSpec {
                rate: Some(1.0),
                exponent: Some(1.0),
                positivity: true,
                ..FieldSpec::preset("scalar_exp")
            },
            profile: hyperbolic_scaled(1.0, 6.0),
            run: run(200, 3.0),
            theorems: vec![TheoremId::PhiR, TheoremId::HyperbolicRate],
            checks: vec![CheckKind::PointwiseComparison, CheckKind::Propositions],
            end_ball: Some(EndBallSpec {
                p: 1.0,
                kappa: 1.0,
                c: 1.0,
                mu: 0.7,
            }),
        },
        "plane_foliation" => ScenarioConfig {
            name: name.into(),
            chart: ChartSpec {
                extent: Some(7.0),
                ..ChartSpec::named("plane")
            },
            field: FieldSpec {
                spanning: Some(vec![vec![1.0, 0.0]]),
                positivity: true,
                ..FieldSpec::preset("distribution")
            },
            profile: flat("zero", 12.0),
            run: run(128, 6.0),
            theorems: vec![TheoremId::Linear],
            checks: vec![CheckKind::Foliation],
            end_ball: None,
        },
        "graph_foliation" => ScenarioConfig {
            name: name.into(),
            chart: ChartSpec {
                extent: Some(2.0),
                ..ChartSpec::named("graph")
            },
            field: FieldSpec {
                spanning: Some(vec![vec![1.0, 0.0]]),
                ..FieldSpec::preset("distribution")
            },
            profile: flat("zero", 12.0),
            run: run(64, 1.5),
            theorems: vec![],
            checks: vec![CheckKind::Foliation],
            end_ball: None,
        },
        other => {
            return Err(Error::config(
                "scenario",
                format!("unknown scenario `{other}`; built-ins are {}", BUILTIN_NAMES.join(", ")),
            ))
        }
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_validates() {
        for name in BUILTIN_NAMES {
            builtin(name).unwrap().validate().unwrap();
        }
        assert!(builtin("torus").is_err());
    }
}
