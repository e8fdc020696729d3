use symgrowth::scenario::run::{theorem_file, CURVE_FILE};
use symgrowth::scenario::{
    builtin, run_scenario, verify_identities, verify_operator, write_outputs, Report, RunOptions, ScenarioConfig,
    VerifyOptions,
};
use symgrowth::symop::SymOp;
use symgrowth::Error;

fn small_plane() -> ScenarioConfig {
    ScenarioConfig::from_toml_str("scenario = \"plane\"\nrun.resolution = 48\nrun.mu_max = 2.5\nrun.points = 10\n").unwrap()
}

#[test]
fn runs_are_reproducible() {
    let cfg = small_plane();
    let a = run_scenario(&cfg, RunOptions::default()).unwrap().report.to_json().unwrap();
    let b = run_scenario(&cfg, RunOptions::default()).unwrap().report.to_json().unwrap();
    assert_eq!(a, b);
    assert!(!a.contains("runtimes"));
    let timed = run_scenario(&cfg, RunOptions { timings: true }).unwrap();
    assert!(timed.report.runtimes.as_ref().is_some_and(|r| r.contains_key("growth")));
}

#[test]
fn every_requested_check_appears_once() {
    let out = run_scenario(&small_plane(), RunOptions::default()).unwrap();
    let names: Vec<&str> = out.report.checks.iter().map(|c| c.name.as_str()).collect();
    for want in [
        "pointwise_comparison",
        "domain_comparison",
        "propositions",
        "theorem:general",
        "theorem:logarithmic",
        "hypothesis:alpha_bound",
    ] {
        assert_eq!(names.iter().filter(|n| **n == want).count(), 1, "{want} in {names:?}");
    }
    assert!(out.report.all_passed(), "{}", out.report.render_text());
    assert_eq!(out.report.provenance.config_hash, small_plane().hash());
}

#[test]
fn empty_theorem_list_gives_identity_results_only() {
    let mut cfg = small_plane();
    cfg.theorems.clear();
    cfg.checks.retain(|c| c.name() != "domain_comparison");
    let out = run_scenario(&cfg, RunOptions::default()).unwrap();
    let names: Vec<&str> = out.report.checks.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["pointwise_comparison", "propositions"]);
    assert!(out.curve.is_none() && out.report.curves.is_empty());
}

#[test]
fn outputs_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario(&small_plane(), RunOptions::default()).unwrap();
    let written = write_outputs(dir.path(), &out).unwrap();
    assert_eq!(written.len(), 2 + out.report.curves.len());
    let curve = std::fs::read_to_string(dir.path().join(CURVE_FILE)).unwrap();
    assert!(curve.starts_with("mu,f,F,G\n"));
    let thm = std::fs::read_to_string(dir.path().join(theorem_file(symgrowth::ballgrowth::TheoremId::General))).unwrap();
    assert!(thm.starts_with("mu,f,F,G,bound,margin\n"));
    let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(Report::from_json(&json).unwrap(), out.report);
    let text = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert_eq!(text, out.report.render_text());
}

#[test]
fn validation_errors_name_the_field() {
    let err = ScenarioConfig::from_toml_str("scenario = \"plane\"\nrun.mu_max = -1.0\n")
        .and_then(|c| c.validate())
        .unwrap_err();
    assert!(err.to_string().contains("run.mu_max"), "{err}");
    let err = ScenarioConfig::from_toml_str("scenario = \"plane\"\nchart.bogus = 1\n").unwrap_err();
    assert!(matches!(err, Error::Config { .. }), "{err}");
}

#[test]
fn module_errors_carry_scenario_context() {
    let mut cfg = small_plane();
    cfg.run.mu_max = 4.0;
    cfg.chart.extent = Some(2.0);
    let err = run_scenario(&cfg, RunOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Scenario { ref name, .. } if name == "plane"), "{err}");
    assert!(err.to_string().starts_with("scenario `plane`"));
}

#[test]
fn builtins_round_trip_through_toml() {
    let cfg = builtin("h2_lambda_exp").unwrap();
    let text = cfg.to_toml_string().unwrap();
    assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
}

#[test]
fn verify_is_deterministic() {
    let opts = VerifyOptions {
        field_points: 3,
        ..VerifyOptions::new(7, 50, vec![2, 3, 4])
    };
    let a = verify_identities(&opts).unwrap();
    let b = verify_identities(&opts).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert!(a.all_passed(), "{}", a.render_text());
    let other = verify_identities(&VerifyOptions { seed: 8, ..opts }).unwrap();
    assert_ne!(a.provenance.config_hash, other.provenance.config_hash);
}

#[test]
fn verify_on_the_identity_has_zero_algebraic_residuals() {
    let opts = VerifyOptions {
        field_points: 2,
        ..VerifyOptions::new(1, 1, vec![3])
    };
    let r = verify_operator(&opts, &SymOp::identity(3)).unwrap();
    for name in ["symop:trace_identities", "symop:eigen_identity"] {
        assert_eq!(r.check(name).unwrap().data["max_relative"].as_f64(), Some(0.0), "{name}");
    }
    assert!(verify_identities(&VerifyOptions::new(1, 0, vec![2])).is_err());
}
