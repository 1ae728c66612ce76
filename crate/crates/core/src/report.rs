//! CSV tables and the JSON summary of a batch of experiments.
//!
//! Layout under the output directory:
//!
//! ```text
//! summary.json                  config echo, tables, checks, runtimes
//! convergence.csv               experiment,table,epsilon,error (all tables)
//! <experiment id>/<table>.csv   per-experiment tables
//! <experiment id>/l_operator.bin  assembled 𝓛, when the experiment built one
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::fractional::export_operator;
use crate::harness::{Check, ConvergenceTable, CsvTable, ExperimentResult};

pub const SUMMARY_FILE: &str = "summary.json";
pub const AGGREGATE_FILE: &str = "convergence.csv";
pub const OPERATOR_FILE: &str = "l_operator.bin";
pub const AGGREGATE_HEADER: [&str; 4] = ["experiment", "table", "epsilon", "error"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub experiment: String,
    pub passed: bool,
    pub runtime_seconds: f64,
    pub config: ExperimentConfig,
    pub tables: Vec<ConvergenceTable>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    /// CSV files written for this experiment, relative to the report root.
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub passed: bool,
    pub experiments: Vec<ExperimentSummary>,
}

impl Summary {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.into(),
            message: e.to_string(),
        })
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format {
            path: path.into(),
            message: format!("{other:?}"),
        },
    }
}

fn write_table(dir: &Path, table: &CsvTable) -> Result<PathBuf> {
    let path = dir.join(&table.name);
    write_csv(
        &path,
        &table.header,
        table
            .rows
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect()),
    )?;
    Ok(path)
}

/// Writes every experiment's CSV tables, the aggregate convergence table and
/// `summary.json`; returns the summary that was written.
pub fn emit_report(results: &[ExperimentResult], dir: &Path) -> Result<Summary> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut experiments = Vec::with_capacity(results.len());
    let mut aggregate = Vec::new();
    for r in results {
        let sub = dir.join(r.id().as_str());
        fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        let mut files = Vec::new();
        for table in &r.csv {
            write_table(&sub, table)?;
            files.push(format!("{}/{}", r.id().as_str(), table.name));
        }
        if let Some(op) = &r.operator {
            export_operator(&sub.join(OPERATOR_FILE), &op.matrix, op.alpha)?;
            files.push(format!("{}/{OPERATOR_FILE}", r.id().as_str()));
        }
        for t in &r.tables {
            for (e, err) in t.epsilons.iter().zip(&t.errors) {
                aggregate.push(vec![
                    r.id().as_str().to_string(),
                    t.label.clone(),
                    e.to_string(),
                    err.to_string(),
                ]);
            }
        }
        experiments.push(ExperimentSummary {
            experiment: r.id().as_str().into(),
            passed: r.passed(),
            runtime_seconds: r.runtime_seconds,
            config: r.config.clone(),
            tables: r.tables.clone(),
            checks: r.checks.clone(),
            notes: r.notes.clone(),
            files,
        });
    }
    write_csv(&dir.join(AGGREGATE_FILE), &AGGREGATE_HEADER, aggregate.into_iter())?;
    let summary = Summary {
        passed: experiments.iter().all(|e| e.passed),
        experiments,
    };
    let path = dir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&summary).expect("summary is serializable");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}
