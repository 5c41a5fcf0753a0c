//! A multi-hop backplane of untuned radios.
//!
//! `N` unit-capacity channels connect a tuned source to a tuned destination
//! through `H` hops of `M` relays each. A relay listens on one random channel
//! and transmits on another random channel, both drawn uniformly at build
//! time. With random linear network coding the achievable rate is the
//! min-cut of the layered channel/relay graph ([`coding_throughput`]);
//! blind forwarding just composes the random channel maps
//! ([`forwarding_throughput`]).
//!
//! Flow graph layout, for hop `h` (0-based) reading channel layer `h` and
//! writing channel layer `h + 1`:
//!
//! ```text
//! source -> ch(0, c)            for every channel c
//! ch(h, rx) -> relay(h, i)      if relay i listens on rx
//! relay(h, i) -> ch(h + 1, tx)  if relay i transmits on tx
//! ch(H, c) -> sink              for every channel c
//! ```
//!
//! Every channel vertex and every relay is split with a unit-capacity arc.

pub mod flow;

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
use crate::stats;
use flow::FlowNetwork;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadioError {
    #[error("invalid radio network parameters: {0}")]
    InvalidSpec(String),
    #[error("assignment tables do not match {hops} hops x {nodes} nodes: {detail}")]
    Shape {
        hops: usize,
        nodes: usize,
        detail: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RadioMode {
    /// Channels are carrier frequencies; every relay can always listen and transmit.
    #[default]
    Frequency,
    /// Channels are timeslots, and each relay independently decides what to
    /// do in its listening slot and in its transmit slot.
    Timeslot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CollisionRule {
    /// The lowest-index contender on a channel is heard.
    #[default]
    LowestIndex,
    /// A uniformly random contender is heard.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioNetworkSpec {
    pub n_channels: usize,
    pub hops: usize,
    pub nodes_per_hop: usize,
    pub mode: RadioMode,
    pub p_tx: f64,
    pub p_rx: f64,
    pub p_sleep: f64,
    pub seed: u64,
}

impl RadioNetworkSpec {
    /// Frequency mode with `M = H = N`.
    pub fn square(n_channels: usize) -> Self {
        Self::new(n_channels, n_channels, n_channels)
    }

    pub fn new(n_channels: usize, hops: usize, nodes_per_hop: usize) -> Self {
        RadioNetworkSpec {
            n_channels,
            hops,
            nodes_per_hop,
            mode: RadioMode::Frequency,
            p_tx: 0.5,
            p_rx: 0.5,
            p_sleep: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn timeslot(mut self, p_tx: f64, p_rx: f64, p_sleep: f64) -> Self {
        self.mode = RadioMode::Timeslot;
        self.p_tx = p_tx;
        self.p_rx = p_rx;
        self.p_sleep = p_sleep;
        self
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n_channels < 1 {
            out.push("n_channels must be >= 1".to_string());
        }
        if self.hops < 1 {
            out.push("hops must be >= 1".to_string());
        }
        if self.nodes_per_hop < 1 {
            out.push("nodes_per_hop must be >= 1".to_string());
        }
        if self.mode == RadioMode::Timeslot {
            let ps = [self.p_tx, self.p_rx, self.p_sleep];
            if ps.iter().any(|p| !(0.0..=1.0).contains(p)) {
                out.push("role probabilities must lie in [0, 1]".to_string());
            }
            let total: f64 = ps.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                out.push(format!("p_tx + p_rx + p_sleep must equal 1, got {total}"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), RadioError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(RadioError::InvalidSpec(v.join("; ")))
        }
    }
}

/// Channel assignments of every relay, indexed `[hop][node]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioNetwork {
    pub spec: RadioNetworkSpec,
    pub rx: Vec<Vec<usize>>,
    pub tx: Vec<Vec<usize>>,
    pub rx_active: Vec<Vec<bool>>,
    pub tx_active: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Transmit,
    Receive,
    Sleep,
}

fn draw_role<R: Rng + ?Sized>(spec: &RadioNetworkSpec, rng: &mut R) -> Role {
    let u: f64 = rng.gen();
    if u < spec.p_tx {
        Role::Transmit
    } else if u < spec.p_tx + spec.p_rx {
        Role::Receive
    } else {
        Role::Sleep
    }
}

pub fn build_network<R: Rng + ?Sized>(
    spec: &RadioNetworkSpec,
    rng: &mut R,
) -> Result<RadioNetwork, RadioError> {
    spec.validate()?;
    let (h, m, n) = (spec.hops, spec.nodes_per_hop, spec.n_channels);
    let mut net = RadioNetwork {
        spec: spec.clone(),
        rx: vec![vec![0; m]; h],
        tx: vec![vec![0; m]; h],
        rx_active: vec![vec![true; m]; h],
        tx_active: vec![vec![true; m]; h],
    };
    for hop in 0..h {
        for i in 0..m {
            net.rx[hop][i] = rng.gen_range(0..n);
            net.tx[hop][i] = rng.gen_range(0..n);
            if spec.mode == RadioMode::Timeslot {
                net.rx_active[hop][i] = draw_role(spec, rng) == Role::Receive;
                net.tx_active[hop][i] = draw_role(spec, rng) == Role::Transmit;
            }
        }
    }
    Ok(net)
}

impl RadioNetwork {
    /// Frequency-mode network from explicit tables (`[hop][node]`, channel indices).
    pub fn from_assignments(
        n_channels: usize,
        rx: Vec<Vec<usize>>,
        tx: Vec<Vec<usize>>,
    ) -> Result<Self, RadioError> {
        let hops = rx.len();
        let nodes = rx.first().map_or(0, Vec::len);
        let shape_err = |detail: String| RadioError::Shape { hops, nodes, detail };
        if tx.len() != hops {
            return Err(shape_err(format!("tx has {} hops", tx.len())));
        }
        for (hop, (r, t)) in rx.iter().zip(&tx).enumerate() {
            if r.len() != nodes || t.len() != nodes {
                return Err(shape_err(format!("hop {hop} has ragged rows")));
            }
            if let Some(c) = r.iter().chain(t).find(|&&c| c >= n_channels) {
                return Err(shape_err(format!("channel {c} out of range at hop {hop}")));
            }
        }
        Ok(RadioNetwork {
            spec: RadioNetworkSpec::new(n_channels, hops, nodes),
            rx_active: vec![vec![true; nodes]; hops],
            tx_active: vec![vec![true; nodes]; hops],
            rx,
            tx,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.spec.n_channels
    }

    pub fn hops(&self) -> usize {
        self.rx.len()
    }

    pub fn nodes_at(&self, hop: usize) -> usize {
        self.rx[hop].len()
    }

    /// Appends a frequency-mode relay to `hop`.
    pub fn add_node(&mut self, hop: usize, rx: usize, tx: usize) {
        self.rx[hop].push(rx);
        self.tx[hop].push(tx);
        self.rx_active[hop].push(true);
        self.tx_active[hop].push(true);
    }

    /// True when the relay can both hear and transmit, i.e. can carry flow.
    pub fn relays(&self, hop: usize, node: usize) -> bool {
        self.rx_active[hop][node] && self.tx_active[hop][node]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TrialDump::radio(self.clone())).expect("network serializes")
    }
}

/// Versioned JSON wrapper for fixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDump<T> {
    pub schema_version: u32,
    pub kind: String,
    pub network: T,
}

impl TrialDump<RadioNetwork> {
    pub fn radio(network: RadioNetwork) -> Self {
        TrialDump {
            schema_version: crate::harness::SCHEMA_VERSION,
            kind: "radio_network".to_string(),
            network,
        }
    }
}

impl TrialDump<crate::storage::DisseminationGraph> {
    pub fn storage(network: crate::storage::DisseminationGraph) -> Self {
        TrialDump {
            schema_version: crate::harness::SCHEMA_VERSION,
            kind: "dissemination_graph".to_string(),
            network,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowResult {
    pub value: usize,
    /// Per hop, `min(distinct rx channels, distinct tx channels)` over relaying nodes.
    pub per_hop_cut: Vec<usize>,
}

impl FlowResult {
    pub fn min_cut_bound(&self) -> usize {
        self.per_hop_cut.iter().copied().min().unwrap_or(usize::MAX)
    }
}

pub fn per_hop_cuts(net: &RadioNetwork) -> Vec<usize> {
    (0..net.hops())
        .map(|h| {
            let relaying: Vec<usize> = (0..net.nodes_at(h)).filter(|&i| net.relays(h, i)).collect();
            let rx: HashSet<usize> = relaying.iter().map(|&i| net.rx[h][i]).collect();
            let tx: HashSet<usize> = relaying.iter().map(|&i| net.tx[h][i]).collect();
            rx.len().min(tx.len())
        })
        .collect()
}

/// Max-flow of the layered channel/relay graph.
pub fn coding_throughput(net: &RadioNetwork) -> FlowResult {
    let n = net.n_channels();
    let h = net.hops();
    let ch_in = |layer: usize, c: usize| 2 + 2 * (layer * n + c);
    let relay_base = 2 + 2 * (h + 1) * n;
    let mut offsets = Vec::with_capacity(h);
    let mut total_nodes = 0;
    for hop in 0..h {
        offsets.push(total_nodes);
        total_nodes += net.nodes_at(hop);
    }
    let relay_in = |hop: usize, i: usize| relay_base + 2 * (offsets[hop] + i);
    let (source, sink) = (0, 1);
    let mut g = FlowNetwork::new(relay_base + 2 * total_nodes);
    for layer in 0..=h {
        for c in 0..n {
            g.add_edge(ch_in(layer, c), ch_in(layer, c) + 1, 1);
        }
    }
    for c in 0..n {
        g.add_edge(source, ch_in(0, c), 1);
        g.add_edge(ch_in(h, c) + 1, sink, 1);
    }
    for hop in 0..h {
        for i in 0..net.nodes_at(hop) {
            if !net.relays(hop, i) {
                continue;
            }
            let v = relay_in(hop, i);
            g.add_edge(ch_in(hop, net.rx[hop][i]) + 1, v, 1);
            g.add_edge(v, v + 1, 1);
            g.add_edge(v + 1, ch_in(hop + 1, net.tx[hop][i]), 1);
        }
    }
    FlowResult {
        value: g.max_flow(source, sink) as usize,
        per_hop_cut: per_hop_cuts(net),
    }
}

/// Blind forwarding with lowest-index collision resolution.
pub fn forwarding_throughput(net: &RadioNetwork) -> usize {
    forward(net, |contenders, _| contenders[0], &mut ())
}

/// Blind forwarding with an explicit collision rule.
pub fn forwarding_throughput_with<R: Rng + ?Sized>(
    net: &RadioNetwork,
    rule: CollisionRule,
    rng: &mut R,
) -> usize {
    match rule {
        CollisionRule::LowestIndex => forwarding_throughput(net),
        CollisionRule::Random => forward(
            net,
            |contenders, rng: &mut &mut R| contenders[rng.gen_range(0..contenders.len())],
            &mut &mut *rng,
        ),
    }
}

/// Packet `c` starts on channel `c`. `pick` chooses which contender's packet
/// occupies a contested transmit channel. Returns the number of distinct
/// packets that reach the destination.
fn forward<S>(net: &RadioNetwork, pick: impl Fn(&[usize], &mut S) -> usize, state: &mut S) -> usize {
    let n = net.n_channels();
    let mut carrying: Vec<Option<usize>> = (0..n).map(Some).collect();
    let mut contenders: Vec<Vec<usize>> = vec![Vec::new(); n];
    for hop in 0..net.hops() {
        for list in contenders.iter_mut() {
            list.clear();
        }
        for i in 0..net.nodes_at(hop) {
            if net.relays(hop, i) && carrying[net.rx[hop][i]].is_some() {
                contenders[net.tx[hop][i]].push(i);
            }
        }
        carrying = contenders
            .iter()
            .map(|list| {
                (!list.is_empty()).then(|| {
                    let winner = pick(list, state);
                    carrying[net.rx[hop][winner]].expect("contenders carry a packet")
                })
            })
            .collect();
    }
    carrying.into_iter().flatten().collect::<HashSet<_>>().len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioTrial {
    pub trial: u64,
    pub seed: u64,
    pub coding: usize,
    pub forwarding: usize,
    pub min_cut: usize,
    pub coding_over_n: f64,
}

pub fn run_trial(
    spec: &RadioNetworkSpec,
    rule: CollisionRule,
    trial: u64,
) -> Result<RadioTrial, RadioError> {
    let seed = rng::derive_seed(spec.seed, trial);
    let mut rng = rng::rng_from_seed(seed);
    let net = build_network(spec, &mut rng)?;
    let flow = coding_throughput(&net);
    let forwarding = forwarding_throughput_with(&net, rule, &mut rng);
    Ok(RadioTrial {
        trial,
        seed,
        coding: flow.value,
        forwarding,
        min_cut: flow.min_cut_bound().min(spec.n_channels),
        coding_over_n: flow.value as f64 / spec.n_channels as f64,
    })
}

pub fn run_trials(
    spec: &RadioNetworkSpec,
    rule: CollisionRule,
    trials: usize,
) -> Result<Vec<RadioTrial>, RadioError> {
    spec.validate()?;
    (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(spec, rule, t))
        .collect()
}

/// How a sweep derives one dimension from the channel count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleRule {
    /// Equal to `N`.
    Linear,
    Constant(usize),
}

impl ScaleRule {
    pub fn apply(self, n: usize) -> usize {
        match self {
            ScaleRule::Linear => n,
            ScaleRule::Constant(c) => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_channels: usize,
    pub hops: usize,
    pub nodes_per_hop: usize,
    pub trials: usize,
    pub mean_coding: f64,
    pub se_coding: f64,
    pub mean_forwarding: f64,
    pub se_forwarding: f64,
    pub coding_over_n: f64,
    pub se_coding_over_n: f64,
}

impl SweepRow {
    pub fn from_trials(spec: &RadioNetworkSpec, trials: &[RadioTrial]) -> Self {
        let coding: Vec<f64> = trials.iter().map(|t| t.coding as f64).collect();
        let forwarding: Vec<f64> = trials.iter().map(|t| t.forwarding as f64).collect();
        let ratio: Vec<f64> = trials.iter().map(|t| t.coding_over_n).collect();
        SweepRow {
            n_channels: spec.n_channels,
            hops: spec.hops,
            nodes_per_hop: spec.nodes_per_hop,
            trials: trials.len(),
            mean_coding: stats::mean(&coding),
            se_coding: stats::std_error(&coding),
            mean_forwarding: stats::mean(&forwarding),
            se_forwarding: stats::std_error(&forwarding),
            coding_over_n: stats::mean(&ratio),
            se_coding_over_n: stats::std_error(&ratio),
        }
    }
}

/// Monte Carlo means of both throughputs for each channel count. `base`
/// supplies mode and role probabilities; its size fields are replaced.
pub fn throughput_sweep(
    base: &RadioNetworkSpec,
    channel_counts: &[usize],
    hop_rule: ScaleRule,
    node_rule: ScaleRule,
    trials: usize,
    seed: u64,
) -> Result<Vec<SweepRow>, RadioError> {
    channel_counts
        .iter()
        .map(|&n| {
            let spec = RadioNetworkSpec {
                n_channels: n,
                hops: hop_rule.apply(n),
                nodes_per_hop: node_rule.apply(n),
                seed,
                ..base.clone()
            };
            let rows = run_trials(&spec, CollisionRule::LowestIndex, trials)?;
            Ok(SweepRow::from_trials(&spec, &rows))
        })
        .collect()
}
