use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use symgrowth::comparison::Extent;
use symgrowth::scenario::{
    builtin, run_scenario, verify_identities, write_outputs, write_profile_csv, Report, RunOptions, ScenarioConfig,
    VerifyOptions, BUILTIN_NAMES,
};

/// Symmetric-operator identity checks and geodesic-ball growth estimates
/// on parametrized submanifolds.
#[derive(Parser, Debug)]
#[command(name = "symgrowth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the randomized operator and operator-field identity suites.
    Verify(VerifyArgs),
    /// Solve the comparison profile of a scenario and dump h, r₀ and the
    /// validity window.
    Profile(ScenarioArgs),
    /// Run the full pipeline of a scenario: hypotheses, growth curves,
    /// theorem bounds and identity checks.
    Growth(GrowthArgs),
    /// Re-render a JSON report as text.
    Report {
        /// Path to a report.json written by `growth` or `verify`.
        path: PathBuf,
    },
    /// List the built-in scenarios.
    Scenarios,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Scenario file (TOML, flat dotted keys allowed).
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    scenario: Option<String>,
    /// Directory for CSV curves, report.json and summary.txt.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Lattice nodes along the longest chart axis.
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    mu_max: Option<f64>,
}

#[derive(Args, Debug)]
struct GrowthArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Record wall-clock times per stage (breaks byte-identical reports).
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Random operators per dimension.
    #[arg(long, default_value_t = 1000)]
    count: usize,
    /// Operator dimensions, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3, 4, 5, 6])]
    dims: Vec<usize>,
    /// Sample points per chart in the field suites.
    #[arg(long, default_value_t = 10)]
    points: usize,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match (&self.config, &self.scenario) {
            (Some(path), _) => ScenarioConfig::from_path(path)?,
            (None, Some(name)) => builtin(name)?,
            (None, None) => bail!("pass --config <path> or --scenario <name> (one of {})", BUILTIN_NAMES.join(", ")),
        };
        if let Some(seed) = self.seed {
            cfg.run.seed = seed;
        }
        if let Some(res) = self.resolution {
            cfg.run.resolution = res;
        }
        if let Some(mu) = self.mu_max {
            cfg.run.mu_max = mu;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn extent(e: Extent) -> String {
    e.finite().map_or_else(|| "inf".to_string(), |v| format!("{v:.6}"))
}

fn profile(args: &ScenarioArgs) -> Result<bool> {
    let cfg = args.load()?;
    let p = cfg.build_profile()?;
    let mut text = String::new();
    writeln!(text, "scenario:  {}", cfg.name)?;
    writeln!(text, "r0:        {}", extent(p.r0()))?;
    writeln!(text, "mu_bound:  {}", extent(p.mu_bound()))?;
    writeln!(text, "t_max:     {:.6}", p.t_max())?;
    writeln!(text, "truncated: {}", p.truncated())?;
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join("profile.csv");
        write_profile_csv(&path, &p)?;
        writeln!(text, "wrote {}", path.display())?;
    }
    say(&text)?;
    Ok(true)
}

/// Writes to stdout; a reader that closed the pipe early is not an error.
fn say(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e).context("writing to stdout"),
        _ => Ok(()),
    }
}

fn emit(report: &Report, written: &[PathBuf]) -> Result<()> {
    let mut text = report.render_text();
    for p in written {
        writeln!(text, "wrote {}", p.display())?;
    }
    say(&text)
}

fn growth(args: &GrowthArgs) -> Result<bool> {
    let cfg = args.scenario.load()?;
    let outcome = run_scenario(&cfg, RunOptions { timings: args.timings })?;
    let written = match &args.scenario.out_dir {
        Some(dir) => write_outputs(dir, &outcome)?,
        None => vec![],
    };
    emit(&outcome.report, &written)?;
    Ok(outcome.report.all_passed())
}

fn verify(args: &VerifyArgs) -> Result<bool> {
    let mut opts = VerifyOptions::new(args.seed, args.count, args.dims.clone());
    opts.field_points = args.points;
    let report = verify_identities(&opts)?;
    let written = match &args.out_dir {
        Some(dir) => symgrowth::scenario::report::write_report(dir, &report)?,
        None => vec![],
    };
    emit(&report, &written)?;
    Ok(report.all_passed())
}

fn render(path: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report = Report::from_json(&text)?;
    say(&report.render_text())?;
    Ok(report.all_passed())
}

/// Exit status: 0 when every check passed, 1 when some check failed,
/// 2 on errors.
fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(a) => verify(a),
        Command::Profile(a) => profile(a),
        Command::Growth(a) => growth(a),
        Command::Report { path } => render(path),
        Command::Scenarios => say(&(BUILTIN_NAMES.join("\n") + "\n")).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
