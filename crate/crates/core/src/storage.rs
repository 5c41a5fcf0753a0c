//! Decentralized erasure codes for networked storage.
//!
//! `k` data nodes each push their packet to `degree(n) = ceil(c ln n)`
//! distinct, uniformly chosen storage nodes out of `n`. Every receiving
//! storage node folds the packet into the single coded packet it keeps,
//! scaled by a fresh nonzero coefficient. A collector that queries `k` (or
//! more) storage nodes decodes by Gaussian elimination over the collected
//! coefficient vectors.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{self, Gf256};
use crate::matrix::{self, FieldMatrix, SingularReport, SolveError};
use crate::rng;
use crate::Payload;

pub const DEFAULT_DEGREE_CONSTANT: f64 = 5.0;
pub const DEFAULT_PAYLOAD_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StorageError {
    #[error("invalid storage code parameters: {0}")]
    InvalidSpec(String),
    #[error("data packet {index} has length {found}, expected {expected}")]
    PayloadLength {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("expected {expected} data packets, got {found}")]
    DataCount { expected: usize, found: usize },
    #[error("cannot query {requested} of {available} storage nodes")]
    QuerySize { requested: usize, available: usize },
    #[error("coded packet {index} has {found} coefficients, expected {expected}")]
    CoefficientLength {
        index: usize,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageCodeSpec {
    pub k: usize,
    pub n: usize,
    /// Degree constant in `ceil(c ln n)`.
    pub c: f64,
    pub payload_len: usize,
    pub seed: u64,
    /// Replaces the logarithmic degree rule with a fixed degree (still
    /// clamped to `[1, n]`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_override: Option<usize>,
}

impl StorageCodeSpec {
    pub fn new(k: usize, n: usize) -> Self {
        StorageCodeSpec {
            k,
            n,
            c: DEFAULT_DEGREE_CONSTANT,
            payload_len: DEFAULT_PAYLOAD_LEN,
            seed: 0,
            degree_override: None,
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_payload_len(mut self, payload_len: usize) -> Self {
        self.payload_len = payload_len;
        self
    }

    pub fn with_degree(mut self, degree: usize) -> Self {
        self.degree_override = Some(degree);
        self
    }

    /// Invariant violations, each as a human-readable message.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.k < 1 {
            out.push("k must be >= 1".to_string());
        }
        if self.k > self.n {
            out.push(format!("k ({}) must not exceed n ({})", self.k, self.n));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            out.push(format!("c must be a positive real, got {}", self.c));
        }
        if self.payload_len < 1 {
            out.push("payload_len must be >= 1".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<(), StorageError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(StorageError::InvalidSpec(v.join("; ")))
        }
    }

    /// Pre-routing degree of every data node.
    pub fn degree(&self) -> usize {
        let raw = match self.degree_override {
            Some(d) => d,
            None => (self.c * (self.n as f64).ln()).ceil() as usize,
        };
        raw.clamp(1, self.n.max(1))
    }
}

/// The one packet a storage node keeps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodedPacket {
    pub coeffs: Vec<Gf256>,
    pub payload: Payload,
}

impl CodedPacket {
    pub fn zero(k: usize, payload_len: usize) -> Self {
        CodedPacket {
            coeffs: vec![Gf256::ZERO; k],
            payload: vec![Gf256::ZERO; payload_len],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Folds `coeff * data` into this packet as the contribution of data node `index`.
    pub fn accumulate(&mut self, index: usize, coeff: Gf256, data: &[Gf256]) {
        self.coeffs[index] += coeff;
        field::axpy(&mut self.payload, coeff, data);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub data: usize,
    pub storage: usize,
    pub coeff: Gf256,
}

/// Bipartite graph of pre-routing transmissions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisseminationGraph {
    pub k: usize,
    pub n: usize,
    pub edges: Vec<Edge>,
}

impl DisseminationGraph {
    /// Storage-node neighbors of each data node.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.k];
        for e in &self.edges {
            adj[e.data].push(e.storage);
        }
        adj
    }
}

fn check_data(spec: &StorageCodeSpec, data: &[Payload]) -> Result<(), StorageError> {
    if data.len() != spec.k {
        return Err(StorageError::DataCount {
            expected: spec.k,
            found: data.len(),
        });
    }
    if let Some((index, d)) = data
        .iter()
        .enumerate()
        .find(|(_, d)| d.len() != spec.payload_len)
    {
        return Err(StorageError::PayloadLength {
            index,
            expected: spec.payload_len,
            found: d.len(),
        });
    }
    Ok(())
}

pub fn random_data<R: Rng + ?Sized>(rng: &mut R, k: usize, payload_len: usize) -> Vec<Payload> {
    (0..k)
        .map(|_| (0..payload_len).map(|_| Gf256::random(rng)).collect())
        .collect()
}

/// Pre-routes every data packet to `spec.degree()` distinct random storage nodes.
pub fn disseminate<R: Rng + ?Sized>(
    spec: &StorageCodeSpec,
    data: &[Payload],
    rng: &mut R,
) -> Result<(Vec<CodedPacket>, DisseminationGraph), StorageError> {
    spec.validate()?;
    check_data(spec, data)?;
    let degree = spec.degree();
    let mut storage = vec![CodedPacket::zero(spec.k, spec.payload_len); spec.n];
    let mut edges = Vec::with_capacity(spec.k * degree);
    for (i, packet) in data.iter().enumerate() {
        for j in index::sample(rng, spec.n, degree) {
            let coeff = Gf256::random_nonzero(rng);
            storage[j].accumulate(i, coeff, packet);
            edges.push(Edge {
                data: i,
                storage: j,
                coeff,
            });
        }
    }
    Ok((
        storage,
        DisseminationGraph {
            k: spec.k,
            n: spec.n,
            edges,
        },
    ))
}

/// A uniform `m`-subset of `0..n`, sorted ascending.
pub fn query_indices<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<Vec<usize>, StorageError> {
    if m < 1 || m > n {
        return Err(StorageError::QuerySize {
            requested: m,
            available: n,
        });
    }
    let mut picked = index::sample(rng, n, m).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

pub fn query<R: Rng + ?Sized>(
    storage: &[CodedPacket],
    m: usize,
    rng: &mut R,
) -> Result<Vec<CodedPacket>, StorageError> {
    Ok(query_indices(storage.len(), m, rng)?
        .into_iter()
        .map(|j| storage[j].clone())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("rank deficient: {} of {k} unknowns resolved", .report.rank)]
    Singular { k: usize, report: SingularReport },
    #[error(transparent)]
    Usage(#[from] StorageError),
}

/// Recovers the `k` data packets from any set of coded packets whose
/// coefficient vectors span the whole space. Every row takes part in the
/// elimination.
pub fn decode(queried: &[CodedPacket], k: usize) -> Result<Vec<Payload>, DecodeError> {
    if let Some((index, p)) = queried.iter().enumerate().find(|(_, p)| p.coeffs.len() != k) {
        return Err(StorageError::CoefficientLength {
            index,
            expected: k,
            found: p.coeffs.len(),
        }
        .into());
    }
    let width = queried.first().map_or(0, |p| p.payload.len());
    if let Some((index, p)) = queried.iter().enumerate().find(|(_, p)| p.payload.len() != width) {
        return Err(StorageError::PayloadLength {
            index,
            expected: width,
            found: p.payload.len(),
        }
        .into());
    }
    let coeffs = FieldMatrix::new(
        queried.len(),
        k,
        queried.iter().flat_map(|p| p.coeffs.iter().copied()).collect(),
    )
    .expect("rows checked above");
    let rhs: Vec<Payload> = queried.iter().map(|p| p.payload.clone()).collect();
    match matrix::solve_full_column_rank(&coeffs, &rhs) {
        Ok(x) => Ok(x),
        Err(SolveError::Singular(report)) => Err(DecodeError::Singular { k, report }),
        Err(SolveError::Dimension(e)) => unreachable!("dimensions were checked: {e}"),
    }
}

/// True iff the data nodes can be matched into distinct queried storage
/// nodes, i.e. the restricted graph carries a flow of value `k`.
pub fn graph_flow_decodable(graph: &DisseminationGraph, queried: &[usize], k: usize) -> bool {
    if k == 0 {
        return true;
    }
    if queried.len() < k || graph.k < k {
        return false;
    }
    let mut in_query = vec![false; graph.n];
    for &j in queried {
        if j < graph.n {
            in_query[j] = true;
        }
    }
    let adj: Vec<Vec<usize>> = graph
        .adjacency()
        .into_iter()
        .take(k)
        .map(|nbrs| nbrs.into_iter().filter(|&j| in_query[j]).collect())
        .collect();
    maximum_matching(&adj, graph.n) == k
}

/// Kuhn's augmenting-path bipartite matching. Returns the matching size.
pub fn maximum_matching(adj: &[Vec<usize>], right_size: usize) -> usize {
    fn augment(
        u: usize,
        adj: &[Vec<usize>],
        visited: &mut [bool],
        match_right: &mut [Option<usize>],
    ) -> bool {
        for &v in &adj[u] {
            if visited[v] {
                continue;
            }
            visited[v] = true;
            if match_right[v].is_none_or(|w| augment(w, adj, visited, match_right)) {
                match_right[v] = Some(u);
                return true;
            }
        }
        false
    }

    let mut match_right = vec![None; right_size];
    let mut size = 0;
    for u in 0..adj.len() {
        let mut visited = vec![false; right_size];
        if augment(u, adj, &mut visited, &mut match_right) {
            size += 1;
        }
    }
    size
}

/// Outcome of one disseminate / query / decode round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageTrial {
    pub trial: u64,
    pub seed: u64,
    pub success: bool,
    pub rank: usize,
    pub rank_deficit: usize,
    pub flow_decodable: bool,
    /// Decoded output equals the source data. Only meaningful on success.
    pub exact: bool,
}

pub fn run_trial(
    spec: &StorageCodeSpec,
    query_size: usize,
    trial: u64,
) -> Result<StorageTrial, StorageError> {
    let seed = rng::derive_seed(spec.seed, trial);
    let mut rng = rng::rng_from_seed(seed);
    let data = random_data(&mut rng, spec.k, spec.payload_len);
    let (storage, graph) = disseminate(spec, &data, &mut rng)?;
    let picked = query_indices(spec.n, query_size, &mut rng)?;
    let queried: Vec<CodedPacket> = picked.iter().map(|&j| storage[j].clone()).collect();
    let flow_decodable = graph_flow_decodable(&graph, &picked, spec.k);
    let (success, rank, exact) = match decode(&queried, spec.k) {
        Ok(decoded) => (true, spec.k, decoded == data),
        Err(DecodeError::Singular { report, .. }) => (false, report.rank, false),
        Err(DecodeError::Usage(e)) => return Err(e),
    };
    Ok(StorageTrial {
        trial,
        seed,
        success,
        rank,
        rank_deficit: spec.k - rank,
        flow_decodable,
        exact,
    })
}

/// Runs trials `0..trials` in parallel; output is in trial order.
pub fn run_trials(
    spec: &StorageCodeSpec,
    trials: usize,
    query_size: usize,
) -> Result<Vec<StorageTrial>, StorageError> {
    spec.validate()?;
    if query_size < 1 || query_size > spec.n {
        return Err(StorageError::QuerySize {
            requested: query_size,
            available: spec.n,
        });
    }
    (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(spec, query_size, t))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessStats {
    pub successes: usize,
    pub trials: usize,
    pub rate: f64,
    /// Mean of `k - rank` over all trials.
    pub mean_rank_deficit: f64,
}

impl SuccessStats {
    pub fn from_trials(trials: &[StorageTrial]) -> Self {
        let successes = trials.iter().filter(|t| t.success).count();
        let n = trials.len();
        let deficit: usize = trials.iter().map(|t| t.rank_deficit).sum();
        SuccessStats {
            successes,
            trials: n,
            rate: if n == 0 { 0.0 } else { successes as f64 / n as f64 },
            mean_rank_deficit: if n == 0 { 0.0 } else { deficit as f64 / n as f64 },
        }
    }
}

pub fn estimate_success(
    spec: &StorageCodeSpec,
    trials: usize,
    query_size: usize,
) -> Result<SuccessStats, StorageError> {
    Ok(SuccessStats::from_trials(&run_trials(spec, trials, query_size)?))
}
