//! Distributed fountain codes with constant pre-routing degree.
//!
//! Each storage node draws a degree `d` from a truncated soliton
//! distribution, picks `d` distinct data nodes and stores the XOR of their
//! packets together with the neighbor list. A collector querying
//! `ceil((1 + epsilon) k)` storage nodes runs a peeling decoder and is
//! content with recovering a `(1 - delta)` fraction of the data.
//!
//! Plain truncation of the ideal soliton leaves only `1/k` of the mass on
//! degree one, so the ripple usually dies before it starts.
//! [`FountainSpec::degree_one_floor`] puts a constant lower bound on that
//! mass instead. The floor does not depend on `n`, so the mean pre-routing
//! degree stays constant.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::Gf256;
use crate::rng;
use crate::storage::random_data;
use crate::Payload;

pub const DEFAULT_EPSILON: f64 = 0.3;
pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_D_MAX: usize = 20;
pub const DEFAULT_DEGREE_ONE_FLOOR: f64 = 0.03;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FountainError {
    #[error("invalid fountain parameters: {0}")]
    InvalidSpec(String),
    #[error("degree cap {d_max} must lie in [1, k = {k}]")]
    DegreeCap { k: usize, d_max: usize },
    #[error("expected {expected} data packets of length {payload_len}")]
    Data { expected: usize, payload_len: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FountainSpec {
    pub k: usize,
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub d_max: usize,
    pub payload_len: usize,
    pub seed: u64,
    /// Lower bound on the pre-normalization mass at degree one. Zero gives
    /// the plain truncated ideal soliton.
    pub degree_one_floor: f64,
}

impl FountainSpec {
    pub fn new(k: usize, n: usize) -> Self {
        FountainSpec {
            k,
            n,
            epsilon: DEFAULT_EPSILON,
            delta: DEFAULT_DELTA,
            d_max: DEFAULT_D_MAX.min(k.max(1)),
            payload_len: crate::storage::DEFAULT_PAYLOAD_LEN,
            seed: 0,
            degree_one_floor: DEFAULT_DEGREE_ONE_FLOOR,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_d_max(mut self, d_max: usize) -> Self {
        self.d_max = d_max;
        self
    }

    pub fn with_overhead(mut self, epsilon: f64, delta: f64) -> Self {
        self.epsilon = epsilon;
        self.delta = delta;
        self
    }

    pub fn with_payload_len(mut self, payload_len: usize) -> Self {
        self.payload_len = payload_len;
        self
    }

    pub fn with_degree_one_floor(mut self, floor: f64) -> Self {
        self.degree_one_floor = floor;
        self
    }

    /// Number of storage nodes a collector queries.
    pub fn query_size(&self) -> usize {
        // The small offset keeps products like 1.3 * 500 from rounding up to 651.
        ((1.0 + self.epsilon) * self.k as f64 - 1e-9).ceil().max(0.0) as usize
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.k < 1 {
            out.push("k must be >= 1".to_string());
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            out.push(format!("epsilon must be > 0, got {}", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            out.push(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        if self.d_max < 1 || self.d_max > self.k {
            out.push(format!("d_max ({}) must lie in [1, k = {}]", self.d_max, self.k));
        }
        if self.epsilon.is_finite() && self.query_size() > self.n {
            out.push(format!(
                "ceil((1 + epsilon) k) = {} exceeds n = {}",
                self.query_size(),
                self.n
            ));
        }
        if self.payload_len < 1 {
            out.push("payload_len must be >= 1".to_string());
        }
        if !(self.degree_one_floor.is_finite() && (0.0..=1.0).contains(&self.degree_one_floor)) {
            out.push(format!(
                "degree_one_floor must lie in [0, 1], got {}",
                self.degree_one_floor
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<(), FountainError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(FountainError::InvalidSpec(v.join("; ")))
        }
    }

    pub fn distribution(&self) -> Result<DegreeDistribution, FountainError> {
        truncated_soliton_with_floor(self.k, self.d_max, self.degree_one_floor)
    }

    /// `(n / k) E[D]`: the mean number of storage nodes a data node reaches.
    pub fn expected_prerouting_degree(&self) -> Result<f64, FountainError> {
        Ok(self.n as f64 / self.k as f64 * self.distribution()?.mean())
    }
}

/// Probabilities of degrees `1..=d_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeDistribution {
    probabilities: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl DegreeDistribution {
    /// Normalizes nonnegative masses for degrees `1..=masses.len()`.
    pub fn from_masses(masses: Vec<f64>) -> Self {
        let total: f64 = masses.iter().sum();
        let probabilities: Vec<f64> = masses.iter().map(|m| m / total).collect();
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        DegreeDistribution {
            probabilities,
            cumulative,
        }
    }

    /// `p[d]` for `d` in `1..=d_max`; zero outside.
    pub fn probability(&self, degree: usize) -> f64 {
        degree
            .checked_sub(1)
            .and_then(|i| self.probabilities.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn d_max(&self) -> usize {
        self.probabilities.len()
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.probabilities.len() - 1) + 1
    }
}

/// Ideal soliton `p[1] = 1/k`, `p[d] = 1/(d(d-1))`, cut at `d_max` and renormalized.
pub fn truncated_soliton(k: usize, d_max: usize) -> Result<DegreeDistribution, FountainError> {
    truncated_soliton_with_floor(k, d_max, 0.0)
}

/// As [`truncated_soliton`], with the degree-one mass raised to `max(1/k, floor)`.
pub fn truncated_soliton_with_floor(
    k: usize,
    d_max: usize,
    floor: f64,
) -> Result<DegreeDistribution, FountainError> {
    if d_max < 1 || d_max > k {
        return Err(FountainError::DegreeCap { k, d_max });
    }
    let mut masses = Vec::with_capacity(d_max);
    masses.push((1.0 / k as f64).max(floor));
    for d in 2..=d_max {
        masses.push(1.0 / (d * (d - 1)) as f64);
    }
    Ok(DegreeDistribution::from_masses(masses))
}

/// What a storage node keeps: the XOR of its neighbors' packets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FountainPacket {
    /// Data-node indices, sorted and distinct.
    pub neighbors: Vec<usize>,
    pub payload: Payload,
}

fn xor_into(dst: &mut [Gf256], src: &[Gf256]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += *s;
    }
}

pub fn build_fountain<R: Rng + ?Sized>(
    spec: &FountainSpec,
    data: &[Payload],
    rng: &mut R,
) -> Result<Vec<FountainPacket>, FountainError> {
    spec.validate()?;
    if data.len() != spec.k || data.iter().any(|d| d.len() != spec.payload_len) {
        return Err(FountainError::Data {
            expected: spec.k,
            payload_len: spec.payload_len,
        });
    }
    let dist = spec.distribution()?;
    let packets = (0..spec.n)
        .map(|_| {
            let degree = dist.sample(rng);
            let mut neighbors = index::sample(rng, spec.k, degree).into_vec();
            neighbors.sort_unstable();
            let mut payload = vec![Gf256::ZERO; spec.payload_len];
            for &i in &neighbors {
                xor_into(&mut payload, &data[i]);
            }
            FountainPacket { neighbors, payload }
        })
        .collect();
    Ok(packets)
}

/// Total pre-routing transmissions divided by `k`.
pub fn mean_prerouting_degree(packets: &[FountainPacket], k: usize) -> f64 {
    packets.iter().map(|p| p.neighbors.len()).sum::<usize>() as f64 / k as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeelResult {
    pub recovered: BTreeMap<usize, Payload>,
    pub fraction: f64,
}

/// Ripple decoding. Degree-one equations are consumed lowest index first;
/// the recovered set does not depend on that order.
pub fn peel_decode(queried: &[FountainPacket], k: usize) -> PeelResult {
    let m = queried.len();
    let mut degree: Vec<usize> = queried.iter().map(|p| p.neighbors.len()).collect();
    // XOR of the unresolved neighbor indices: equals the last one when degree is 1.
    let mut pending: Vec<usize> = queried
        .iter()
        .map(|p| p.neighbors.iter().fold(0, |acc, &i| acc ^ i))
        .collect();
    let mut residual: Vec<Payload> = queried.iter().map(|p| p.payload.clone()).collect();
    let mut containing = vec![Vec::new(); k];
    for (e, p) in queried.iter().enumerate() {
        for &i in &p.neighbors {
            debug_assert!(i < k, "neighbor {i} out of range");
            containing[i].push(e);
        }
    }
    let mut ripple: BTreeSet<usize> = (0..m).filter(|&e| degree[e] == 1).collect();
    let mut recovered = BTreeMap::new();
    while let Some(e) = ripple.pop_first() {
        if degree[e] != 1 {
            continue;
        }
        let i = pending[e];
        let value = residual[e].clone();
        for &f in &containing[i] {
            xor_into(&mut residual[f], &value);
            pending[f] ^= i;
            degree[f] -= 1;
            if degree[f] == 1 {
                ripple.insert(f);
            }
        }
        recovered.insert(i, value);
    }
    let fraction = if k == 0 { 1.0 } else { recovered.len() as f64 / k as f64 };
    PeelResult { recovered, fraction }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FountainTrial {
    pub trial: u64,
    pub seed: u64,
    pub recovered: usize,
    pub fraction: f64,
    pub met_target: bool,
    pub prerouting_degree: f64,
    /// Every recovered payload equals the source packet.
    pub exact: bool,
}

pub fn run_trial(spec: &FountainSpec, trial: u64) -> Result<FountainTrial, FountainError> {
    let seed = rng::derive_seed(spec.seed, trial);
    let mut rng = rng::rng_from_seed(seed);
    let data = random_data(&mut rng, spec.k, spec.payload_len);
    let packets = build_fountain(spec, &data, &mut rng)?;
    let picked = index::sample(&mut rng, spec.n, spec.query_size()).into_vec();
    let mut picked = picked;
    picked.sort_unstable();
    let queried: Vec<FountainPacket> = picked.iter().map(|&j| packets[j].clone()).collect();
    let result = peel_decode(&queried, spec.k);
    let exact = result.recovered.iter().all(|(&i, p)| *p == data[i]);
    Ok(FountainTrial {
        trial,
        seed,
        recovered: result.recovered.len(),
        fraction: result.fraction,
        met_target: result.fraction >= 1.0 - spec.delta - 1e-12,
        prerouting_degree: mean_prerouting_degree(&packets, spec.k),
        exact,
    })
}

pub fn run_trials(spec: &FountainSpec, trials: usize) -> Result<Vec<FountainTrial>, FountainError> {
    spec.validate()?;
    (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(spec, t))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FountainStats {
    pub trials: usize,
    pub mean_fraction: f64,
    pub rate_meeting_target: f64,
    pub mean_prerouting_degree: f64,
}

impl FountainStats {
    pub fn from_trials(trials: &[FountainTrial]) -> Self {
        let n = trials.len().max(1) as f64;
        FountainStats {
            trials: trials.len(),
            mean_fraction: trials.iter().map(|t| t.fraction).sum::<f64>() / n,
            rate_meeting_target: trials.iter().filter(|t| t.met_target).count() as f64 / n,
            mean_prerouting_degree: trials.iter().map(|t| t.prerouting_degree).sum::<f64>() / n,
        }
    }
}

pub fn estimate_fountain(spec: &FountainSpec, trials: usize) -> Result<FountainStats, FountainError> {
    Ok(FountainStats::from_trials(&run_trials(spec, trials)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn packet(neighbors: &[usize], data: &[Payload]) -> FountainPacket {
        let mut payload = vec![Gf256::ZERO; data[0].len()];
        for &i in neighbors {
            xor_into(&mut payload, &data[i]);
        }
        FountainPacket {
            neighbors: neighbors.to_vec(),
            payload,
        }
    }

    #[test]
    fn soliton_examples() {
        assert_eq!(truncated_soliton(7, 1).unwrap().probabilities(), &[1.0]);
        let p = truncated_soliton(4, 4).unwrap();
        let expect = [0.25, 0.5, 1.0 / 6.0, 1.0 / 12.0];
        for (a, b) in p.probabilities().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(truncated_soliton(4, 0), Err(FountainError::DegreeCap { .. })));
        assert!(truncated_soliton(4, 5).is_err());
    }

    #[test]
    fn soliton_mass_and_mean_bounds() {
        for k in [1usize, 2, 5, 50, 500, 5000] {
            for d_max in [1usize, 2, 3, 10, 20, 100] {
                if d_max > k {
                    continue;
                }
                for floor in [0.0, 0.03] {
                    let p = truncated_soliton_with_floor(k, d_max, floor).unwrap();
                    let total: f64 = p.probabilities().iter().sum();
                    assert!((total - 1.0).abs() < 1e-12);
                    assert!(p.probabilities().iter().all(|&x| x >= 0.0));
                    assert!(p.mean() <= d_max as f64 + 1e-12);
                    // Direct summation of the harmonic telescope.
                    let direct: f64 = (1..=d_max).map(|d| d as f64 * p.probability(d)).sum();
                    assert!((direct - p.mean()).abs() < 1e-12);
                    assert!(p.mean() <= 2.0 + (d_max as f64).ln());
                }
            }
        }
    }

    #[test]
    fn sampler_matches_probabilities() {
        let p = truncated_soliton(50, 6).unwrap();
        let mut rng = rng_from_seed(3);
        let draws = 200_000;
        let mut counts = [0usize; 7];
        for _ in 0..draws {
            counts[p.sample(&mut rng)] += 1;
        }
        assert_eq!(counts[0], 0);
        for d in 1..=6 {
            let q = p.probability(d);
            let sigma = (draws as f64 * q * (1.0 - q)).sqrt();
            assert!((counts[d] as f64 - draws as f64 * q).abs() < 5.0 * sigma + 1.0);
        }
    }

    #[test]
    fn expected_degree_is_constant_in_n() {
        let small = FountainSpec::new(125, 250).expected_prerouting_degree().unwrap();
        let large = FountainSpec::new(500, 1000).expected_prerouting_degree().unwrap();
        let huge = FountainSpec::new(50_000, 100_000).expected_prerouting_degree().unwrap();
        assert!((small - large).abs() / large < 1e-12);
        assert!((huge - large).abs() / large < 1e-12);
        // Without the floor the mean still varies only through 1/k.
        let a = FountainSpec::new(125, 250).with_degree_one_floor(0.0);
        let b = FountainSpec::new(500, 1000).with_degree_one_floor(0.0);
        let (ea, eb) = (a.expected_prerouting_degree().unwrap(), b.expected_prerouting_degree().unwrap());
        assert!((ea - eb).abs() / eb < 0.01);
    }

    #[test]
    fn query_size_rounding() {
        assert_eq!(FountainSpec::new(500, 1000).query_size(), 650);
        assert_eq!(FountainSpec::new(10, 20).with_overhead(0.25, 0.1).query_size(), 13);
        assert!(FountainSpec::new(500, 600).validate().is_err());
    }

    #[test]
    fn replication_when_degree_is_one() {
        let spec = FountainSpec::new(5, 12).with_d_max(1).with_payload_len(4);
        let mut rng = rng_from_seed(1);
        let data = random_data(&mut rng, 5, 4);
        for p in build_fountain(&spec, &data, &mut rng).unwrap() {
            assert_eq!(p.neighbors.len(), 1);
            assert_eq!(p.payload, data[p.neighbors[0]]);
        }
    }

    #[test]
    fn single_data_node() {
        let spec = FountainSpec::new(1, 4).with_d_max(1);
        let mut rng = rng_from_seed(2);
        let data = random_data(&mut rng, 1, spec.payload_len);
        for p in build_fountain(&spec, &data, &mut rng).unwrap() {
            assert_eq!(p.payload, data[0]);
        }
    }

    #[test]
    fn stored_payload_is_xor_of_neighbors() {
        let spec = FountainSpec::new(8, 16).with_d_max(4).with_payload_len(8);
        let mut rng = rng_from_seed(4);
        let data = random_data(&mut rng, 8, 8);
        for p in build_fountain(&spec, &data, &mut rng).unwrap() {
            let mut bytes = [0u8; 8];
            for &i in &p.neighbors {
                for s in 0..8 {
                    bytes[s] ^= data[i][s].0;
                }
            }
            assert_eq!(p.payload.iter().map(|g| g.0).collect::<Vec<_>>(), bytes);
            assert!(p.neighbors.windows(2).all(|w| w[0] < w[1]));
            assert!(!p.neighbors.is_empty() && p.neighbors.len() <= 4);
        }
    }

    #[test]
    fn peel_examples() {
        let mut rng = rng_from_seed(5);
        let data = random_data(&mut rng, 3, 2);
        let all_unit: Vec<_> = (0..3).map(|i| packet(&[i], &data)).collect();
        let r = peel_decode(&all_unit, 3);
        assert_eq!(r.fraction, 1.0);
        let stuck = peel_decode(&[packet(&[0, 1], &data[..2])], 2);
        assert_eq!(stuck.fraction, 0.0);
        // A chain: {0}, {0,1}, {1,2} resolves everything.
        let chain = vec![packet(&[1, 2], &data), packet(&[0, 1], &data), packet(&[0], &data)];
        let r = peel_decode(&chain, 3);
        assert_eq!(r.fraction, 1.0);
        for (i, p) in &r.recovered {
            assert_eq!(p, &data[*i]);
        }
    }

    #[test]
    fn vacuous_target_always_met() {
        let spec = FountainSpec::new(20, 40).with_overhead(0.3, 1.0).with_seed(3);
        let stats = estimate_fountain(&spec, 50).unwrap();
        assert_eq!(stats.rate_meeting_target, 1.0);
    }

    #[test]
    fn fraction_monotone_in_query_size() {
        let spec = FountainSpec::new(40, 120).with_d_max(10).with_payload_len(4);
        for seed in 0..20 {
            let mut rng = rng_from_seed(seed);
            let data = random_data(&mut rng, 40, 4);
            let packets = build_fountain(&spec, &data, &mut rng).unwrap();
            let order = index::sample(&mut rng, 120, 120).into_vec();
            let mut last = 0.0;
            for m in (10..=120).step_by(10) {
                let q: Vec<_> = order[..m].iter().map(|&j| packets[j].clone()).collect();
                let f = peel_decode(&q, 40).fraction;
                assert!(f >= last);
                last = f;
            }
        }
    }
}
