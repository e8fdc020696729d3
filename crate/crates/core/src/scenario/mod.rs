//! Scenario configuration, execution and reports.
//!
//! A scenario fixes a chart, an operator field, a comparison profile and a
//! list of checks and theorems. Runs are deterministic given the resolved
//! configuration, which includes the RNG seed.

pub mod config;
pub mod registry;
pub mod report;
pub mod run;
pub mod verify;

pub use config::{CheckKind, ScenarioConfig};
pub use registry::{builtin, BUILTIN_NAMES};
pub use report::{write_profile_csv, CheckRecord, Provenance, Report};
pub use run::{run_scenario, write_outputs, Outcome, RunOptions};
pub use verify::{verify_identities, verify_operator, VerifyOptions};
