//! Configuration-driven experiments. Each `run_*` returns its tables and a
//! summary; [`write_output`] puts them on disk with provenance headers.

mod domination;
mod gibbs;
mod green;
mod percolation;
mod pinned;
mod sobolev;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fit::FitResult;

pub use domination::{run_domination_check, DominationConfig, DOMINATION_MAX_SITES};
pub use gibbs::{run_gibbs_diagnostics, GibbsDiagnosticsConfig};
pub use green::{g_ref_table, run_unpinned_decay, GreenConfig};
pub use percolation::{run_percolation, PercolationConfig};
pub use pinned::{
    axis_profile, axis_values, decay_fits, run_pinned_decay, AxisProfile, CovEstimator, PinnedDecayConfig, PinnedDecayResult,
};
pub use sobolev::{replica_environment, run_sobolev_decay, SobolevDecayConfig, SobolevDecayResult, SobolevReplica};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: String,
    pub rows: Vec<String>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: impl Into<String>, rows: Vec<String>) -> Self {
        Table {
            name: name.into(),
            header: header.into(),
            rows,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Soft checks are reported but do not affect the exit status.
    pub hard: bool,
    pub detail: String,
}

impl Check {
    pub fn hard(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            hard: true,
            detail: detail.into(),
        }
    }

    pub fn soft(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            hard: false,
            ..Self::hard(name, pass, detail)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub config: serde_json::Value,
    pub input_sha256: String,
    pub fits: BTreeMap<String, FitResult>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub results: serde_json::Value,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub summary: Summary,
    pub tables: Vec<Table>,
}

impl ExperimentOutput {
    pub fn new(experiment: &str, config: &impl Serialize) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let input_sha256 = input_hash(experiment, &config)?;
        Ok(ExperimentOutput {
            summary: Summary {
                experiment: experiment.to_string(),
                config,
                input_sha256,
                fits: BTreeMap::new(),
                checks: Vec::new(),
                pass: true,
                results: serde_json::Value::Null,
            },
            tables: Vec::new(),
        })
    }

    pub fn check(&mut self, c: Check) {
        if c.hard && !c.pass {
            self.summary.pass = false;
        }
        self.summary.checks.push(c);
    }

    pub fn fit(&mut self, name: &str, f: FitResult) {
        self.summary.fits.insert(name.to_string(), f);
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    pub fn pass(&self) -> bool {
        self.summary.pass
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.summary.checks.iter().find(|c| c.name == name)
    }
}

/// SHA-256 of the experiment name and canonical config JSON.
pub fn input_hash(experiment: &str, config: &serde_json::Value) -> Result<String> {
    let mut h = Sha256::new();
    h.update(experiment.as_bytes());
    h.update(b"\n");
    h.update(serde_json::to_string(config)?.as_bytes());
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

pub fn render_table(summary: &Summary, t: &Table) -> Result<String> {
    let mut s = format!(
        "# experiment: {}\n# config: {}\n# input-sha256: {}\n{}\n",
        summary.experiment,
        serde_json::to_string(&summary.config)?,
        summary.input_sha256,
        t.header
    );
    for r in &t.rows {
        s.push_str(r);
        s.push('\n');
    }
    Ok(s)
}

/// Writes every table as `<name>.csv` and the summary as `summary.json`.
pub fn write_output(dir: &Path, out: &ExperimentOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for t in &out.tables {
        let p = dir.join(format!("{}.csv", t.name));
        fs::write(&p, render_table(&out.summary, t)?)?;
        written.push(p);
    }
    let p = dir.join("summary.json");
    fs::write(&p, serde_json::to_string_pretty(&out.summary)? + "\n")?;
    written.push(p);
    Ok(written)
}

/// Parses a JSON config; unknown keys are errors.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => parse_config(&fs::read_to_string(p)?),
        None => Ok(T::default()),
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}
