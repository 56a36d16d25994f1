//! CSV tables and the JSON metadata sidecar.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::config::Loaded;
use crate::error::CliError;

pub const METADATA_FILE: &str = "metadata.json";
pub const SCHEMA_VERSION: u32 = 1;

/// Writes a CSV with `header` and one record per row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest representation that reads back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Complete,
    Incomplete,
}

#[derive(Debug, Serialize)]
pub struct Metadata {
    pub schema_version: u32,
    pub command: &'static str,
    pub version: String,
    pub config_hash: String,
    pub config_path: String,
    pub seed: u64,
    pub workers: usize,
    pub model: String,
    pub strategies: Vec<String>,
    pub particles: usize,
    pub replications: usize,
    /// Successful replications per strategy; below `replications` only for
    /// incomplete runs.
    pub replications_completed: BTreeMap<String, usize>,
    pub wall_clock_seconds: f64,
    pub total_flips: u64,
    pub status: Status,
    pub error: Option<String>,
    pub reference_log_likelihood: Option<f64>,
    pub files: Vec<String>,
}

impl Metadata {
    pub fn new(command: &'static str, loaded: &Loaded, config_path: &Path) -> Self {
        let c = &loaded.config;
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            version: format!("v{}", env!("CARGO_PKG_VERSION")),
            config_hash: loaded.hash(),
            config_path: config_path.display().to_string(),
            seed: loaded.seed(),
            workers: loaded.workers(),
            model: c.model.to_string(),
            strategies: c.strategies.iter().map(|s| s.to_string()).collect(),
            particles: c.particles,
            replications: c.replications,
            replications_completed: BTreeMap::new(),
            wall_clock_seconds: 0.0,
            total_flips: 0,
            status: Status::Complete,
            error: None,
            reference_log_likelihood: None,
            files: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Runtime(e.to_string()))?;
        std::fs::write(dir.join(METADATA_FILE), text + "\n")?;
        Ok(())
    }
}
