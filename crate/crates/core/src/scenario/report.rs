use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ballgrowth::{GrowthCurve, TheoremReport};
use crate::comparison::ComparisonProfile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the resolved configuration.
    pub config_hash: String,
    pub resolution: usize,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub verdict: bool,
    pub summary: String,
    #[serde(default)]
    pub data: serde_json::Value,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, verdict: bool, summary: impl Into<String>, data: serde_json::Value) -> Self {
        Self {
            name: name.into(),
            verdict,
            summary: summary.into(),
            data,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub provenance: Provenance,
    pub checks: Vec<CheckRecord>,
    /// Curve files, relative to the output directory.
    #[serde(default)]
    pub curves: Vec<String>,
    /// Wall-clock seconds per stage; only present when requested, since
    /// they break byte-for-byte reproducibility.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtimes: Option<BTreeMap<String, f64>>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict)
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Io(format!("malformed report: {e}")))
    }

    /// Plain-text summary, one line per check.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario: {}", self.scenario);
        let _ = writeln!(
            out,
            "config:   {} (resolution {}, seed {}, version {})",
            self.provenance.config_hash, self.provenance.resolution, self.provenance.seed, self.provenance.version
        );
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {:width$}  {}",
                if c.verdict { "PASS" } else { "FAIL" },
                c.name,
                c.summary
            );
        }
        for f in &self.curves {
            let _ = writeln!(out, "curve: {f}");
        }
        if let Some(rt) = &self.runtimes {
            for (k, v) in rt {
                let _ = writeln!(out, "time {k}: {v:.3} s");
            }
        }
        let passed = self.checks.iter().filter(|c| c.verdict).count();
        let _ = writeln!(out, "{passed}/{} checks passed", self.checks.len());
        out
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Writes `mu, f, F, G, bound, margin` rows.
pub fn write_theorem_csv(path: &Path, report: &TheoremReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for row in &report.rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    mu: f64,
    f: f64,
    #[serde(rename = "F")]
    big_f: f64,
    #[serde(rename = "G")]
    big_g: f64,
}

pub fn write_curve_csv(path: &Path, curve: &GrowthCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for k in 0..curve.mu.len() {
        w.serialize(CurveRow {
            mu: curve.mu[k],
            f: curve.f[k],
            big_f: curve.big_f[k],
            big_g: curve.big_g[k],
        })
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the solver grid as `t, h, dh` rows.
pub fn write_profile_csv(path: &Path, profile: &ComparisonProfile) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["t", "h", "dh"]).map_err(csv_error)?;
    let (t, h, dh) = profile.grid();
    for k in 0..t.len() {
        w.serialize((t[k], h[k], dh[k])).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `report.json` and `summary.txt` into `dir`.
pub fn write_report(dir: &Path, report: &Report) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let json = dir.join("report.json");
    std::fs::write(&json, report.to_json()? + "\n")?;
    let text = dir.join("summary.txt");
    std::fs::write(&text, report.render_text())?;
    Ok(vec![json, text])
}
