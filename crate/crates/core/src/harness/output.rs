//! Row types and CSV/JSON rendering.
//!
//! CSV columns, by kind (`point` indexes the sweep entry, 0 without a sweep):
//!
//! ```text
//! storage:  trial,seed,point,success,rank,rank_deficit,flow_decodable,exact,wall_time_micros
//! fountain: trial,seed,point,recovered,fraction,met_target,prerouting_degree,exact,wall_time_micros
//! radio:    trial,seed,point,n_channels,hops,nodes_per_hop,coding,forwarding,min_cut,coding_over_n,wall_time_micros
//! ```
//!
//! The summary goes to a JSON sidecar next to the CSV. With the JSON format,
//! rows and summary share one document.

use serde::{Deserialize, Serialize};

use crate::fountain::{FountainStats, FountainTrial};
use crate::radio::{RadioNetworkSpec, RadioTrial, SweepRow};
use crate::stats;
use crate::storage::{StorageTrial, SuccessStats};

use super::{OutputFormat, RunResult, Summary, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageRow {
    pub trial: u64,
    pub seed: u64,
    pub point: usize,
    pub success: bool,
    pub rank: usize,
    pub rank_deficit: usize,
    pub flow_decodable: bool,
    pub exact: bool,
    pub wall_time_micros: u64,
}

impl StorageRow {
    pub fn new(point: usize, t: StorageTrial, wall_time_micros: u64) -> Self {
        StorageRow {
            trial: t.trial,
            seed: t.seed,
            point,
            success: t.success,
            rank: t.rank,
            rank_deficit: t.rank_deficit,
            flow_decodable: t.flow_decodable,
            exact: t.exact,
            wall_time_micros,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FountainRow {
    pub trial: u64,
    pub seed: u64,
    pub point: usize,
    pub recovered: usize,
    pub fraction: f64,
    pub met_target: bool,
    pub prerouting_degree: f64,
    pub exact: bool,
    pub wall_time_micros: u64,
}

impl FountainRow {
    pub fn new(point: usize, t: FountainTrial, wall_time_micros: u64) -> Self {
        FountainRow {
            trial: t.trial,
            seed: t.seed,
            point,
            recovered: t.recovered,
            fraction: t.fraction,
            met_target: t.met_target,
            prerouting_degree: t.prerouting_degree,
            exact: t.exact,
            wall_time_micros,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioRow {
    pub trial: u64,
    pub seed: u64,
    pub point: usize,
    pub n_channels: usize,
    pub hops: usize,
    pub nodes_per_hop: usize,
    pub coding: usize,
    pub forwarding: usize,
    pub min_cut: usize,
    pub coding_over_n: f64,
    pub wall_time_micros: u64,
}

impl RadioRow {
    pub fn new(point: usize, spec: &RadioNetworkSpec, t: RadioTrial, wall_time_micros: u64) -> Self {
        RadioRow {
            trial: t.trial,
            seed: t.seed,
            point,
            n_channels: spec.n_channels,
            hops: spec.hops,
            nodes_per_hop: spec.nodes_per_hop,
            coding: t.coding,
            forwarding: t.forwarding,
            min_cut: t.min_cut,
            coding_over_n: t.coding_over_n,
            wall_time_micros,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TrialRows {
    Storage(Vec<StorageRow>),
    Fountain(Vec<FountainRow>),
    Radio(Vec<RadioRow>),
}

impl TrialRows {
    pub fn len(&self) -> usize {
        match self {
            TrialRows::Storage(r) => r.len(),
            TrialRows::Fountain(r) => r.len(),
            TrialRows::Radio(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn storage_summary(rows: &[StorageRow]) -> SuccessStats {
    let trials = rows.len();
    let successes = rows.iter().filter(|r| r.success).count();
    let deficit: usize = rows.iter().map(|r| r.rank_deficit).sum();
    SuccessStats {
        successes,
        trials,
        rate: successes as f64 / trials as f64,
        mean_rank_deficit: deficit as f64 / trials as f64,
    }
}

pub fn fountain_summary(rows: &[FountainRow]) -> FountainStats {
    let n = rows.len() as f64;
    FountainStats {
        trials: rows.len(),
        mean_fraction: rows.iter().map(|r| r.fraction).sum::<f64>() / n,
        rate_meeting_target: rows.iter().filter(|r| r.met_target).count() as f64 / n,
        mean_prerouting_degree: rows.iter().map(|r| r.prerouting_degree).sum::<f64>() / n,
    }
}

pub fn radio_summary(spec: &RadioNetworkSpec, rows: &[RadioRow]) -> SweepRow {
    let coding: Vec<f64> = rows.iter().map(|r| r.coding as f64).collect();
    let forwarding: Vec<f64> = rows.iter().map(|r| r.forwarding as f64).collect();
    let ratio: Vec<f64> = rows.iter().map(|r| r.coding_over_n).collect();
    SweepRow {
        n_channels: spec.n_channels,
        hops: spec.hops,
        nodes_per_hop: spec.nodes_per_hop,
        trials: rows.len(),
        mean_coding: stats::mean(&coding),
        se_coding: stats::std_error(&coding),
        mean_forwarding: stats::mean(&forwarding),
        se_forwarding: stats::std_error(&forwarding),
        coding_over_n: stats::mean(&ratio),
        se_coding_over_n: stats::std_error(&ratio),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub main: String,
    pub sidecar: Option<String>,
}

fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub const STORAGE_COLUMNS: &[&str] = &[
    "trial",
    "seed",
    "point",
    "success",
    "rank",
    "rank_deficit",
    "flow_decodable",
    "exact",
    "wall_time_micros",
];
pub const FOUNTAIN_COLUMNS: &[&str] = &[
    "trial",
    "seed",
    "point",
    "recovered",
    "fraction",
    "met_target",
    "prerouting_degree",
    "exact",
    "wall_time_micros",
];
pub const RADIO_COLUMNS: &[&str] = &[
    "trial",
    "seed",
    "point",
    "n_channels",
    "hops",
    "nodes_per_hop",
    "coding",
    "forwarding",
    "min_cut",
    "coding_over_n",
    "wall_time_micros",
];

#[derive(Serialize)]
struct JsonDocument<'a> {
    schema_version: u32,
    kind: super::ExperimentKind,
    rows: &'a TrialRows,
    summary: &'a Summary,
}

pub fn render(result: &RunResult, format: OutputFormat) -> Rendered {
    let summary_json = || {
        let mut s = serde_json::to_string_pretty(&result.summary).expect("summary serializes");
        s.push('\n');
        s
    };
    match format {
        OutputFormat::Csv => Rendered {
            main: match &result.rows {
                TrialRows::Storage(r) => to_csv(r, STORAGE_COLUMNS),
                TrialRows::Fountain(r) => to_csv(r, FOUNTAIN_COLUMNS),
                TrialRows::Radio(r) => to_csv(r, RADIO_COLUMNS),
            },
            sidecar: Some(summary_json()),
        },
        OutputFormat::Json => {
            let doc = JsonDocument {
                schema_version: SCHEMA_VERSION,
                kind: result.summary.kind,
                rows: &result.rows,
                summary: &result.summary,
            };
            let mut main = serde_json::to_string_pretty(&doc).expect("document serializes");
            main.push('\n');
            Rendered { main, sidecar: None }
        }
    }
}

/// Parses rows back from CSV text produced by [`render`].
pub fn parse_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}
