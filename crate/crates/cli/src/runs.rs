//! Run-directory layout and artifact persistence.
//!
//! Every run lives in <out>/<name>-<hash8>/ where hash8 addresses the
//! canonical config, so reruns of the same scenario land in the same
//! place and different configs never collide.  CSV artifacts carry fixed
//! column sets; summary.json accumulates check verdicts per stage.

use crate::config::{ConfigError, ScenarioConfig, SCHEMA_VERSION};
use fraclab_core::{FrequencyCurve, MCEstimate, ObstacleSolution, ProblemSpec};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckRow {
    /// stage/check[@node], e.g. "solve/compResidual" or "frequency/phi0@288".
    pub name: String,
    /// Absent when the stage failed before producing a number.
    pub measured: Option<f64>,
    pub band: String,
    pub passed: bool,
}

impl CheckRow {
    pub fn new(name: impl Into<String>, measured: f64, band: String, passed: bool) -> Self {
        Self {
            name: name.into(),
            measured: Some(measured),
            band,
            passed,
        }
    }

    /// A module error downgraded to a failed check so the run completes.
    pub fn failed(name: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self {
            name: name.into(),
            measured: None,
            band: format!("error: {err}"),
            passed: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunRecord {
    pub schema_version: u32,
    pub name: String,
    pub hash: String,
    pub created_unix: u64,
    pub updated_unix: u64,
    pub checks: Vec<CheckRow>,
}

pub struct RunDir {
    pub path: PathBuf,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunDir {
    /// Create (or reuse) the run directory and persist the canonical
    /// config snapshot it was derived from.
    pub fn prepare(out_root: &Path, config: &ScenarioConfig) -> std::io::Result<Self> {
        let path = out_root.join(config.run_dir_name());
        fs::create_dir_all(&path)?;
        fs::write(path.join("config.json"), config.canonical())?;
        Ok(Self { path })
    }

    pub fn open(path: &Path) -> Self {
        Self {
            path: path.to_path_buf(),
        }
    }

    /// Node trace with columns x,u,phi,contact.
    pub fn write_traces(
        &self,
        spec: &ProblemSpec,
        solution: &ObstacleSolution,
    ) -> std::io::Result<()> {
        let grid = spec.grid();
        let mut w = csv::Writer::from_path(self.path.join("traces.csv"))?;
        w.write_record(["x", "u", "phi", "contact"])?;
        for i in 0..grid.n() {
            w.write_record([
                grid.x(i).to_string(),
                solution.u.values()[i].to_string(),
                spec.obstacle().values()[i].to_string(),
                (solution.contact[i] as u8).to_string(),
            ])?;
        }
        w.flush()
    }

    /// Frequency curve at one base node, columns r,F,Phi,d_r,truncActive.
    pub fn write_frequency(&self, node: usize, curve: &FrequencyCurve) -> std::io::Result<()> {
        let name = format!("frequency-{node}.csv");
        let mut w = csv::Writer::from_path(self.path.join(name))?;
        w.write_record(["r", "F", "Phi", "d_r", "truncActive"])?;
        for i in 0..curve.radii.len() {
            w.write_record([
                curve.radii[i].to_string(),
                curve.f[i].to_string(),
                curve.phi[i].to_string(),
                curve.d_r[i].to_string(),
                (curve.trunc_active[i] as u8).to_string(),
            ])?;
        }
        w.flush()
    }

    /// Estimator table, columns x0,rule,mean,stdErr,nPaths.
    pub fn write_mc(&self, rows: &[(f64, MCEstimate)]) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(self.path.join("mc.csv"))?;
        w.write_record(["x0", "rule", "mean", "stdErr", "nPaths"])?;
        for (x0, est) in rows {
            w.write_record([
                x0.to_string(),
                est.rule.label(),
                est.mean.to_string(),
                est.std_err.to_string(),
                est.n_paths.to_string(),
            ])?;
        }
        w.flush()
    }

    /// Merge this stage's check rows into summary.json: rows with the
    /// given prefix are replaced, everything else is kept.
    pub fn update_summary(
        &self,
        config: &ScenarioConfig,
        stage_prefix: &str,
        rows: Vec<CheckRow>,
    ) -> std::io::Result<RunRecord> {
        let mut record = self.load_summary().unwrap_or_else(|_| RunRecord {
            schema_version: SCHEMA_VERSION,
            name: config.name.clone(),
            hash: config.hash8(),
            created_unix: unix_now(),
            updated_unix: 0,
            checks: Vec::new(),
        });
        record
            .checks
            .retain(|c| !c.name.starts_with(stage_prefix));
        record.checks.extend(rows);
        record.updated_unix = unix_now();
        let mut text = serde_json::to_string_pretty(&record).expect("record serializes");
        text.push('\n');
        fs::write(self.path.join("summary.json"), text)?;
        Ok(record)
    }

    pub fn load_summary(&self) -> Result<RunRecord, ConfigError> {
        let file = self.path.join("summary.json");
        let text = fs::read_to_string(&file)
            .map_err(|e| ConfigError(format!("no run record at {}: {e}", file.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("corrupt run record {}: {e}", file.display())))
    }
}
