//! Seeded experiment runs.
//!
//! Trials execute on a bounded rayon pool. Every trial writes only its own
//! slot of a pre-sized result vector and serialization happens afterwards
//! on one thread, so output bytes depend on the config alone and not on
//! the worker count (wall-time columns aside; see [`RunOptions::no_timing`]).

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fountain::{self, FountainStats};
use crate::radio::{self, SweepRow};
use crate::storage::{self, SuccessStats};

pub use config::{
    validate, validate_with_kind, Diagnostic, ExperimentConfig, ExperimentKind, OutputFormat,
    PointParams,
};
pub use output::{Rendered, StorageRow, FountainRow, RadioRow, TrialRows};

/// Version of the config, CSV and summary schemas.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid config:\n{}", format_diagnostics(.0))]
    Config(Vec<Diagnostic>),
    #[error("{path}: {source}", path = .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Io { .. } => 3,
            RunError::Invariant(_) => 4,
        }
    }

    fn config(path: &str, message: String) -> Self {
        RunError::Config(vec![Diagnostic {
            path: path.to_string(),
            message,
        }])
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses all cores.
    pub workers: Option<usize>,
    /// Zero every wall-time field so output is byte-reproducible.
    pub no_timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PointSummary {
    Storage(SuccessStats),
    Fountain(FountainStats),
    Radio(SweepRow),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryPoint {
    pub point: usize,
    pub parameters: PointParams,
    pub summary: PointSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub trials: usize,
    pub seed: u64,
    pub points: Vec<SummaryPoint>,
}

/// Per-trial rows for every point plus the summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub rows: TrialRows,
    pub summary: Summary,
}

fn micros(start: Instant, no_timing: bool) -> u64 {
    if no_timing {
        0
    } else {
        start.elapsed().as_micros() as u64
    }
}

fn run_points(config: &ExperimentConfig, no_timing: bool) -> Result<RunResult, RunError> {
    let trials = config.trials as u64;
    let mut summaries = Vec::new();
    let rows = match config.kind {
        ExperimentKind::Storage => {
            let mut rows = Vec::new();
            for (point, params) in config.points.iter().enumerate() {
                let PointParams::Storage(p) = params else {
                    unreachable!("kind checked by validation")
                };
                let mut spec = p.spec.clone();
                spec.seed = config.seed;
                let batch: Result<Vec<StorageRow>, _> = (0..trials)
                    .into_par_iter()
                    .map(|t| {
                        let start = Instant::now();
                        let trial = storage::run_trial(&spec, p.query_size, t)?;
                        Ok(StorageRow::new(point, trial, micros(start, no_timing)))
                    })
                    .collect();
                let batch = batch.map_err(|e: storage::StorageError| {
                    RunError::config("parameters", e.to_string())
                })?;
                for r in &batch {
                    if r.success && !(r.exact && r.flow_decodable) {
                        return Err(RunError::Invariant(format!(
                            "storage trial {} decoded without {}",
                            r.trial,
                            if r.exact { "a saturating flow" } else { "matching the source data" }
                        )));
                    }
                }
                summaries.push(SummaryPoint {
                    point,
                    parameters: params.clone(),
                    summary: PointSummary::Storage(output::storage_summary(&batch)),
                });
                rows.extend(batch);
            }
            TrialRows::Storage(rows)
        }
        ExperimentKind::Fountain => {
            let mut rows = Vec::new();
            for (point, params) in config.points.iter().enumerate() {
                let PointParams::Fountain(spec) = params else {
                    unreachable!("kind checked by validation")
                };
                let mut spec = spec.clone();
                spec.seed = config.seed;
                let batch: Result<Vec<FountainRow>, _> = (0..trials)
                    .into_par_iter()
                    .map(|t| {
                        let start = Instant::now();
                        let trial = fountain::run_trial(&spec, t)?;
                        Ok(FountainRow::new(point, trial, micros(start, no_timing)))
                    })
                    .collect();
                let batch = batch.map_err(|e: fountain::FountainError| {
                    RunError::config("parameters", e.to_string())
                })?;
                if let Some(r) = batch.iter().find(|r| !r.exact) {
                    return Err(RunError::Invariant(format!(
                        "fountain trial {} recovered a corrupted packet",
                        r.trial
                    )));
                }
                summaries.push(SummaryPoint {
                    point,
                    parameters: params.clone(),
                    summary: PointSummary::Fountain(output::fountain_summary(&batch)),
                });
                rows.extend(batch);
            }
            TrialRows::Fountain(rows)
        }
        ExperimentKind::Radio => {
            let mut rows = Vec::new();
            for (point, params) in config.points.iter().enumerate() {
                let PointParams::Radio(p) = params else {
                    unreachable!("kind checked by validation")
                };
                let spec = p.spec(config.seed);
                let batch: Result<Vec<RadioRow>, _> = (0..trials)
                    .into_par_iter()
                    .map(|t| {
                        let start = Instant::now();
                        let trial = radio::run_trial(&spec, p.collision, t)?;
                        Ok(RadioRow::new(point, &spec, trial, micros(start, no_timing)))
                    })
                    .collect();
                let batch = batch
                    .map_err(|e: radio::RadioError| RunError::config("parameters", e.to_string()))?;
                if let Some(r) = batch
                    .iter()
                    .find(|r| r.forwarding > r.coding || r.coding > r.min_cut)
                {
                    return Err(RunError::Invariant(format!(
                        "radio trial {}: forwarding {} / coding {} / cut bound {} out of order",
                        r.trial, r.forwarding, r.coding, r.min_cut
                    )));
                }
                summaries.push(SummaryPoint {
                    point,
                    parameters: params.clone(),
                    summary: PointSummary::Radio(output::radio_summary(&spec, &batch)),
                });
                rows.extend(batch);
            }
            TrialRows::Radio(rows)
        }
    };
    Ok(RunResult {
        rows,
        summary: Summary {
            schema_version: SCHEMA_VERSION,
            kind: config.kind,
            trials: config.trials,
            seed: config.seed,
            points: summaries,
        },
    })
}

/// Runs every trial of every point without writing anything.
pub fn execute(config: &ExperimentConfig, options: &RunOptions) -> Result<RunResult, RunError> {
    if config.trials < 1 {
        return Err(RunError::config("trials", "must be ≥ 1".to_string()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = options.workers {
        if w < 1 {
            return Err(RunError::config("workers", "must be ≥ 1".to_string()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| RunError::Invariant(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_points(config, options.no_timing))
}

/// Sidecar path for the CSV summary: `results.csv` -> `results.summary.json`.
pub fn summary_path(output: &Path) -> PathBuf {
    output.with_extension("summary.json")
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    std::fs::write(path, contents).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Executes the experiment and writes its output files. Returns the paths written.
pub fn run(config: &ExperimentConfig, options: &RunOptions) -> Result<(RunResult, Vec<PathBuf>), RunError> {
    let Some(out) = config.output_path.clone() else {
        return Err(RunError::config(
            "output_path",
            "required field is missing (or pass --out)".to_string(),
        ));
    };
    let result = execute(config, options)?;
    let rendered = output::render(&result, config.format);
    write_file(&out, &rendered.main)?;
    let mut written = vec![out.clone()];
    if let Some(sidecar) = &rendered.sidecar {
        let path = summary_path(&out);
        write_file(&path, sidecar)?;
        written.push(path);
    }
    Ok((result, written))
}
