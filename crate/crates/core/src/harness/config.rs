//! Experiment config documents and their validation.
//!
//! A config is one JSON object:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "kind": "storage",
//!   "parameters": { "k": 20, "n": 50, "c": 5 },
//!   "sweep": [ { "n": 100, "k": 50 } ],
//!   "trials": 1000,
//!   "seed": 7,
//!   "output_path": "storage.csv",
//!   "format": "csv"
//! }
//! ```
//!
//! Validation never stops at the first problem; every diagnostic carries
//! the path of the offending field.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::fountain::{self, FountainSpec};
use crate::radio::{CollisionRule, RadioMode, RadioNetworkSpec, ScaleRule};
use crate::storage::{self, StorageCodeSpec};

use super::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Storage,
    Fountain,
    Radio,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Storage => "storage",
            ExperimentKind::Fountain => "fountain",
            ExperimentKind::Radio => "radio",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "storage" => Some(ExperimentKind::Storage),
            "fountain" => Some(ExperimentKind::Fountain),
            "radio" => Some(ExperimentKind::Radio),
            _ => None,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?}, expected csv or json")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StorageParams {
    pub spec: StorageCodeSpec,
    pub query_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadioParams {
    pub n_channels: usize,
    pub hops: ScaleRule,
    pub nodes_per_hop: ScaleRule,
    pub mode: RadioMode,
    pub p_tx: f64,
    pub p_rx: f64,
    pub p_sleep: f64,
    pub collision: CollisionRule,
}

impl RadioParams {
    pub fn spec(&self, seed: u64) -> RadioNetworkSpec {
        RadioNetworkSpec {
            n_channels: self.n_channels,
            hops: self.hops.apply(self.n_channels),
            nodes_per_hop: self.nodes_per_hop.apply(self.n_channels),
            mode: self.mode,
            p_tx: self.p_tx,
            p_rx: self.p_rx,
            p_sleep: self.p_sleep,
            seed,
        }
    }
}

/// Fully resolved parameters of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PointParams {
    Storage(StorageParams),
    Fountain(FountainSpec),
    Radio(RadioParams),
}

impl PointParams {
    pub(crate) fn set_seed(&mut self, seed: u64) {
        match self {
            PointParams::Storage(p) => p.spec.seed = seed,
            PointParams::Fountain(f) => f.seed = seed,
            PointParams::Radio(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// One entry per sweep point; a config without a sweep has exactly one.
    pub points: Vec<PointParams>,
    pub trials: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    /// Parameters of the unswept base point.
    pub fn base(&self) -> &PointParams {
        &self.points[0]
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        for p in &mut self.points {
            p.set_seed(seed);
        }
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }
}

const TOP_LEVEL: &[&str] = &[
    "schema_version",
    "kind",
    "parameters",
    "sweep",
    "trials",
    "seed",
    "output_path",
    "format",
];

const STORAGE_FIELDS: &[&str] = &["k", "n", "c", "payload_len", "query_size", "degree"];
const FOUNTAIN_FIELDS: &[&str] = &[
    "k",
    "n",
    "epsilon",
    "delta",
    "d_max",
    "payload_len",
    "degree_one_floor",
];
const RADIO_FIELDS: &[&str] = &[
    "n_channels",
    "hops",
    "nodes_per_hop",
    "mode",
    "p_tx",
    "p_rx",
    "p_sleep",
    "collision",
];

fn fields_for(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::Storage => STORAGE_FIELDS,
        ExperimentKind::Fountain => FOUNTAIN_FIELDS,
        ExperimentKind::Radio => RADIO_FIELDS,
    }
}

/// Collects typed field reads and their diagnostics.
struct Reader<'a> {
    obj: &'a Map<String, Value>,
    prefix: String,
    /// Sweep entry whose keys are reported under their own path.
    overrides: Option<(String, &'a Map<String, Value>)>,
    diags: &'a mut Vec<Diagnostic>,
}

impl Reader<'_> {
    fn path(&self, key: &str) -> String {
        match &self.overrides {
            Some((prefix, o)) if o.contains_key(key) => format!("{prefix}.{key}"),
            _ => format!("{}.{key}", self.prefix),
        }
    }

    fn fail(&mut self, key: &str, msg: impl Into<String>) {
        let p = self.path(key);
        self.diags.push(Diagnostic::new(p, msg));
    }

    fn uint(&mut self, key: &str, min: u64) -> Option<usize> {
        let v = self.obj.get(key)?;
        match v.as_u64() {
            Some(x) if x >= min => Some(x as usize),
            Some(_) => {
                self.fail(key, format!("must be ≥ {min}"));
                None
            }
            None if v.as_i64().is_some() => {
                self.fail(key, format!("must be ≥ {min}"));
                None
            }
            None => {
                self.fail(key, "must be an integer");
                None
            }
        }
    }

    fn real(&mut self, key: &str) -> Option<f64> {
        let v = self.obj.get(key)?;
        match v.as_f64() {
            Some(x) => Some(x),
            None => {
                self.fail(key, "must be a number");
                None
            }
        }
    }

    fn positive(&mut self, key: &str) -> Option<f64> {
        let x = self.real(key)?;
        if x > 0.0 {
            Some(x)
        } else {
            self.fail(key, "must be > 0");
            None
        }
    }

    fn probability(&mut self, key: &str) -> Option<f64> {
        let x = self.real(key)?;
        if (0.0..=1.0).contains(&x) {
            Some(x)
        } else {
            self.fail(key, "must lie in [0, 1]");
            None
        }
    }

    fn scale_rule(&mut self, key: &str) -> Option<ScaleRule> {
        let v = self.obj.get(key)?;
        if v.as_str() == Some("linear") {
            return Some(ScaleRule::Linear);
        }
        if v.is_string() {
            self.fail(key, "must be a positive integer or \"linear\"");
            return None;
        }
        self.uint(key, 1).map(ScaleRule::Constant)
    }

    fn choice<T>(&mut self, key: &str, options: &[(&str, T)]) -> Option<T>
    where
        T: Copy,
    {
        let v = self.obj.get(key)?;
        let found = v
            .as_str()
            .and_then(|s| options.iter().find(|(name, _)| *name == s).map(|(_, t)| *t));
        if found.is_none() {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            self.fail(key, format!("must be one of {}", names.join(", ")));
        }
        found
    }
}

fn check_unknown(obj: &Map<String, Value>, allowed: &[&str], prefix: &str, diags: &mut Vec<Diagnostic>) {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            let path = if prefix.is_empty() {
                key.clone()
            } else {
                format!("{prefix}.{key}")
            };
            diags.push(Diagnostic::new(path, "unknown field"));
        }
    }
}

fn merged(base: &Map<String, Value>, overrides: Option<&Map<String, Value>>) -> Map<String, Value> {
    let mut out = base.clone();
    if let Some(o) = overrides {
        for (k, v) in o {
            out.insert(k.clone(), v.clone());
        }
    }
    out
}

/// Builds one point from the base parameters and an optional sweep entry.
/// Field problems are reported at the path of the object that supplied the
/// field, invariant violations at `point_path`.
fn build_point(
    kind: ExperimentKind,
    base: &Map<String, Value>,
    overrides: Option<(String, &Map<String, Value>)>,
    point_path: &str,
    seed: u64,
    diags: &mut Vec<Diagnostic>,
) -> Option<PointParams> {
    let before = diags.len();
    let params = merged(base, overrides.as_ref().map(|(_, o)| *o));
    let mut r = Reader {
        obj: &params,
        prefix: "parameters".to_string(),
        overrides,
        diags,
    };
    let require = |r: &mut Reader<'_>, key: &str| {
        if !r.obj.contains_key(key) {
            r.fail(key, "required field is missing");
        }
    };
    let point = match kind {
        ExperimentKind::Storage => {
            require(&mut r, "k");
            require(&mut r, "n");
            let k = r.uint("k", 1);
            let n = r.uint("n", 1);
            let c = r.positive("c").unwrap_or(storage::DEFAULT_DEGREE_CONSTANT);
            let payload_len = r.uint("payload_len", 1).unwrap_or(storage::DEFAULT_PAYLOAD_LEN);
            let degree = r.uint("degree", 1);
            let query_size = r.uint("query_size", 1);
            let (k, n) = (k?, n?);
            let spec = StorageCodeSpec {
                k,
                n,
                c,
                payload_len,
                seed,
                degree_override: degree,
            };
            let query_size = query_size.unwrap_or(k);
            let mut bad = spec.violations();
            if query_size > n {
                bad.push(format!("query_size ({query_size}) must not exceed n ({n})"));
            }
            for msg in bad {
                r.diags.push(Diagnostic::new(point_path, msg));
            }
            PointParams::Storage(StorageParams { spec, query_size })
        }
        ExperimentKind::Fountain => {
            require(&mut r, "k");
            require(&mut r, "n");
            let k = r.uint("k", 1);
            let n = r.uint("n", 1);
            let epsilon = r.positive("epsilon").unwrap_or(fountain::DEFAULT_EPSILON);
            let delta = r.positive("delta").unwrap_or(fountain::DEFAULT_DELTA);
            let d_max = r.uint("d_max", 1);
            let payload_len = r.uint("payload_len", 1).unwrap_or(storage::DEFAULT_PAYLOAD_LEN);
            let floor = r
                .probability("degree_one_floor")
                .unwrap_or(fountain::DEFAULT_DEGREE_ONE_FLOOR);
            let (k, n) = (k?, n?);
            let spec = FountainSpec {
                k,
                n,
                epsilon,
                delta,
                d_max: d_max.unwrap_or(fountain::DEFAULT_D_MAX.min(k)),
                payload_len,
                seed,
                degree_one_floor: floor,
            };
            for msg in spec.violations() {
                r.diags.push(Diagnostic::new(point_path, format!("FountainSpec: {msg}")));
            }
            PointParams::Fountain(spec)
        }
        ExperimentKind::Radio => {
            require(&mut r, "n_channels");
            let n_channels = r.uint("n_channels", 1);
            let hops = r.scale_rule("hops").unwrap_or(ScaleRule::Linear);
            let nodes_per_hop = r.scale_rule("nodes_per_hop").unwrap_or(ScaleRule::Linear);
            let mode = r
                .choice(
                    "mode",
                    &[("frequency", RadioMode::Frequency), ("timeslot", RadioMode::Timeslot)],
                )
                .unwrap_or_default();
            let p_tx = r.probability("p_tx").unwrap_or(0.5);
            let p_rx = r.probability("p_rx").unwrap_or(0.5);
            let p_sleep = r.probability("p_sleep").unwrap_or(0.0);
            let collision = r
                .choice(
                    "collision",
                    &[
                        ("lowest_index", CollisionRule::LowestIndex),
                        ("random", CollisionRule::Random),
                    ],
                )
                .unwrap_or_default();
            let params = RadioParams {
                n_channels: n_channels?,
                hops,
                nodes_per_hop,
                mode,
                p_tx,
                p_rx,
                p_sleep,
                collision,
            };
            for msg in params.spec(seed).violations() {
                r.diags.push(Diagnostic::new(point_path, msg));
            }
            PointParams::Radio(params)
        }
    };
    (diags.len() == before).then_some(point)
}

/// Parses and validates a config document.
pub fn validate(text: &str) -> Result<ExperimentConfig, Vec<Diagnostic>> {
    validate_with_kind(text, None)
}

/// As [`validate`]; `expected_kind` fills in a missing `kind` and must agree
/// with one that is present.
pub fn validate_with_kind(
    text: &str,
    expected_kind: Option<ExperimentKind>,
) -> Result<ExperimentConfig, Vec<Diagnostic>> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| vec![Diagnostic::new("$", format!("invalid JSON: {e}"))])?;
    let Some(obj) = root.as_object() else {
        return Err(vec![Diagnostic::new("$", "config must be a JSON object")]);
    };
    let mut diags = Vec::new();
    check_unknown(obj, TOP_LEVEL, "", &mut diags);

    if let Some(v) = obj.get("schema_version") {
        if v.as_u64() != Some(SCHEMA_VERSION as u64) {
            diags.push(Diagnostic::new(
                "schema_version",
                format!("unsupported schema version, expected {SCHEMA_VERSION}"),
            ));
        }
    }
    let kind = match (obj.get("kind"), expected_kind) {
        (None, Some(k)) => Some(k),
        (None, None) => {
            diags.push(Diagnostic::new("kind", "required field is missing"));
            None
        }
        (Some(v), expected) => match v.as_str().and_then(ExperimentKind::parse) {
            None => {
                diags
                    .push(Diagnostic::new("kind", "must be one of storage, fountain, radio"));
                None
            }
            Some(k) if expected.is_some_and(|e| e != k) => {
                diags.push(Diagnostic::new(
                    "kind",
                    format!("config is for {k} but {} was requested", expected.unwrap()),
                ));
                None
            }
            Some(k) => Some(k),
        },
    };
    let trials = match obj.get("trials") {
        None => {
            diags.push(Diagnostic::new("trials", "required field is missing"));
            None
        }
        Some(v) => {
            match v.as_u64() {
                Some(t) if t >= 1 => Some(t as usize),
                Some(_) => {
                    diags.push(Diagnostic::new("trials", "must be ≥ 1"));
                    None
                }
                None => {
                    diags.push(Diagnostic::new("trials", "must be an integer ≥ 1"));
                    None
                }
            }
        }
    };
    let seed = match obj.get("seed") {
        None => 0,
        Some(v) => v.as_u64().unwrap_or_else(|| {
            diags.push(Diagnostic::new("seed", "must be an unsigned 64-bit integer"));
            0
        }),
    };
    let output_path = match obj.get("output_path") {
        None => None,
        Some(Value::String(s)) if !s.is_empty() => Some(PathBuf::from(s)),
        Some(_) => {
            diags.push(Diagnostic::new("output_path", "must be a non-empty string"));
            None
        }
    };
    let format = match obj.get("format") {
        None => OutputFormat::Csv,
        Some(v) => match v.as_str().map(str::parse::<OutputFormat>) {
            Some(Ok(f)) => f,
            _ => {
                diags.push(Diagnostic::new("format", "must be csv or json"));
                OutputFormat::Csv
            }
        },
    };

    let params = match obj.get("parameters") {
        Some(Value::Object(m)) => Some(m),
        Some(_) => {
            diags.push(Diagnostic::new("parameters", "must be an object"));
            None
        }
        None => {
            diags.push(Diagnostic::new("parameters", "required field is missing"));
            None
        }
    };
    let sweep: Vec<&Map<String, Value>> = match obj.get("sweep") {
        None => Vec::new(),
        Some(Value::Array(items)) => {
            let mut out = Vec::new();
            for (i, item) in items.iter().enumerate() {
                match item.as_object() {
                    Some(m) => out.push(m),
                    None => diags.push(Diagnostic::new(format!("sweep[{i}]"), "must be an object")),
                }
            }
            if items.is_empty() {
                diags.push(Diagnostic::new("sweep", "must not be empty when present"));
            }
            out
        }
        Some(_) => {
            diags.push(Diagnostic::new("sweep", "must be an array of override objects"));
            Vec::new()
        }
    };

    let mut points = Vec::new();
    if let (Some(kind), Some(params)) = (kind, params) {
        let allowed = fields_for(kind);
        check_unknown(params, allowed, "parameters", &mut diags);
        for (i, o) in sweep.iter().enumerate() {
            check_unknown(o, allowed, &format!("sweep[{i}]"), &mut diags);
        }
        if sweep.is_empty() {
            if let Some(p) = build_point(kind, params, None, "parameters", seed, &mut diags) {
                points.push(p);
            }
        } else {
            for (i, o) in sweep.iter().enumerate() {
                let point_path = format!("sweep[{i}]");
                let overrides = Some((point_path.clone(), *o));
                if let Some(p) = build_point(kind, params, overrides, &point_path, seed, &mut diags) {
                    points.push(p);
                }
            }
        }
    }

    // Base-field errors recur once per sweep point.
    let mut seen = std::collections::HashSet::new();
    diags.retain(|d| seen.insert(d.clone()));

    if diags.is_empty() {
        Ok(ExperimentConfig {
            kind: kind.expect("no diagnostics implies kind"),
            points,
            trials: trials.expect("no diagnostics implies trials"),
            seed,
            output_path,
            format,
        })
    } else {
        Err(diags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paths(diags: &[Diagnostic]) -> Vec<String> {
        diags.iter().map(|d| d.path.clone()).collect()
    }

    #[test]
    fn minimal_storage_config_gets_defaults() {
        let cfg = validate(r#"{"kind":"storage","parameters":{"k":20,"n":50},"trials":3}"#).unwrap();
        let PointParams::Storage(p) = cfg.base() else {
            panic!("wrong kind")
        };
        assert_eq!(p.spec.c, 5.0);
        assert_eq!(p.spec.payload_len, 32);
        assert_eq!(p.query_size, 20);
        assert_eq!(cfg.format, OutputFormat::Csv);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn zero_k_is_reported_with_path() {
        let err = validate(r#"{"kind":"storage","parameters":{"k":0,"n":50},"trials":3}"#).unwrap_err();
        assert_eq!(err.len(), 1);
        assert_eq!(err[0].to_string(), "parameters.k: must be ≥ 1");
    }

    #[test]
    fn fountain_overhead_invariant_is_cited() {
        let err = validate(
            r#"{"kind":"fountain","parameters":{"k":100,"n":120,"epsilon":0.3},"trials":3}"#,
        )
        .unwrap_err();
        assert_eq!(err.len(), 1);
        assert_eq!(err[0].path, "parameters");
        assert!(err[0].message.contains("FountainSpec"));
        assert!(err[0].message.contains("exceeds n"));
    }

    #[test]
    fn all_errors_reported_at_once() {
        let err = validate(
            r#"{"kind":"storage","parameters":{"k":0,"n":"x","bogus":1},"trials":0,"format":"xml","extra":true}"#,
        )
        .unwrap_err();
        let p = paths(&err);
        for expected in ["extra", "parameters.bogus", "parameters.k", "parameters.n", "trials", "format"] {
            assert!(p.contains(&expected.to_string()), "missing {expected} in {p:?}");
        }
    }

    #[test]
    fn kind_mismatch_and_missing_fields() {
        let err = validate_with_kind(
            r#"{"kind":"radio","parameters":{"n_channels":4},"trials":1}"#,
            Some(ExperimentKind::Storage),
        )
        .unwrap_err();
        assert_eq!(paths(&err), vec!["kind"]);
        let cfg = validate_with_kind(
            r#"{"parameters":{"n_channels":4},"trials":1}"#,
            Some(ExperimentKind::Radio),
        )
        .unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Radio);
        let err = validate(r#"{"parameters":{}}"#).unwrap_err();
        assert_eq!(paths(&err), vec!["kind", "trials"]);
        let err = validate(r#"{"kind":"storage","parameters":{"n":3},"trials":1}"#).unwrap_err();
        assert_eq!(err[0].to_string(), "parameters.k: required field is missing");
    }

    #[test]
    fn sweep_points_override_base() {
        let cfg = validate(
            r#"{"kind":"radio","parameters":{"n_channels":4,"hops":"linear","nodes_per_hop":"linear"},
               "sweep":[{"n_channels":8},{"n_channels":16,"hops":3}],"trials":2,"seed":5}"#,
        )
        .unwrap();
        assert_eq!(cfg.points.len(), 2);
        let PointParams::Radio(r) = &cfg.points[1] else { panic!() };
        let spec = r.spec(cfg.seed);
        assert_eq!((spec.n_channels, spec.hops, spec.nodes_per_hop), (16, 3, 16));
        let err = validate(
            r#"{"kind":"storage","parameters":{"k":5,"n":10},"sweep":[{"k":0},{"n":3}],"trials":1}"#,
        )
        .unwrap_err();
        // sweep[1] breaks both k <= n and query_size <= n.
        assert_eq!(paths(&err), vec!["sweep[0].k", "sweep[1]", "sweep[1]"]);
    }

    #[test]
    fn rejects_non_object_and_bad_json() {
        assert_eq!(validate("[]").unwrap_err()[0].path, "$");
        assert_eq!(validate("{").unwrap_err()[0].path, "$");
        let err = validate(r#"{"kind":"storage","parameters":{"k":2,"n":3},"trials":1,"schema_version":2}"#)
            .unwrap_err();
        assert_eq!(paths(&err), vec!["schema_version"]);
    }

    #[test]
    fn timeslot_probabilities_must_sum_to_one() {
        let err = validate(
            r#"{"kind":"radio","parameters":{"n_channels":4,"mode":"timeslot","p_tx":0.5,"p_rx":0.2},"trials":1}"#,
        )
        .unwrap_err();
        assert_eq!(err.len(), 1);
        assert!(err[0].message.contains("must equal 1"));
    }
}
