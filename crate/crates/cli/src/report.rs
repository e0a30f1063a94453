use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::config::{Command, Settings};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// A CSV table produced by a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SideFile {
    pub name: String,
    pub columns: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<f64>>,
    /// Where the table was written; absent without `--out`.
    pub path: Option<PathBuf>,
}

impl SideFile {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            path: None,
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn write_csv(&self, path: &Path) -> csv::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// What a command hands back before the common fields are attached.
#[derive(Debug)]
pub struct Outcome {
    /// Every parameter the run used, defaults included.
    pub parameters: Value,
    pub results: Value,
    pub side_files: Vec<SideFile>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: Command,
    pub version: &'static str,
    pub seed: u64,
    pub inputs: Settings,
    pub parameters: Value,
    pub results: Value,
    pub side_files: Vec<SideFile>,
    pub timestamp_unix_s: u64,
    pub runtime_s: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}

fn side_path(out: &Path, name: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    out.with_file_name(format!("{stem}.{name}.csv"))
}

pub fn finish(
    command: Command,
    settings: &Settings,
    outcome: Outcome,
    runtime_s: f64,
) -> Result<Report, CliError> {
    let mut side_files = outcome.side_files;
    if let Some(out) = &settings.out {
        for f in side_files.iter_mut() {
            let p = side_path(out, &f.name);
            f.write_csv(&p)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))?;
            f.path = Some(p);
        }
    }
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed: settings.seed(),
        inputs: settings.clone(),
        parameters: outcome.parameters,
        results: outcome.results,
        side_files,
        timestamp_unix_s: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        runtime_s,
    };
    if let Some(out) = &settings.out {
        std::fs::write(out, report.to_json())
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", out.display())))?;
    }
    Ok(report)
}
