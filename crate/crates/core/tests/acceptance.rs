//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails. Criteria run one after another so
//! the runtime limits measure a single criterion, not a crowded machine.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;

use meshcode::fountain::{self, FountainSpec};
use meshcode::harness::{self, PointSummary, RunOptions, RunResult, TrialRows};
use meshcode::radio::{self, CollisionRule, RadioNetworkSpec, SweepRow};
use meshcode::rng::rng_from_seed;
use meshcode::stats;
use meshcode::storage::{self, StorageCodeSpec, SuccessStats};
use meshcode::selftest;

const SEED: u64 = 20_061_004;

const STORAGE_MIN_RATE: f64 = 0.99;
const CONSTANT_DEGREE_MAX_RATE: f64 = 0.5;
const MONOTONE_SIGMAS: f64 = 2.0;
const FOUNTAIN_MIN_RATE: f64 = 0.95;
const FOUNTAIN_DEGREE_DRIFT: f64 = 0.10;
const THROUGHPUT_MIN_R2: f64 = 0.99;
const THROUGHPUT_MIN_SLOPE: f64 = 0.2;
const FORWARDING_SIGMAS: f64 = 3.0;
const FORWARDING_MAX: f64 = 10.0;
const RATIO_MAX_SE: f64 = 0.02;
const SWEEP_CHANNELS: [usize; 5] = [16, 32, 64, 128, 256];
const SWEEP_TRIALS: usize = 50;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    o.detail = format!("{} [{:.1?} of {:?}]", o.detail, elapsed, limit);
    if elapsed > limit {
        o.passed = false;
        o.detail.push_str(" over time limit");
    }
    o
}

fn storage_rate(spec: &StorageCodeSpec, trials: usize) -> SuccessStats {
    storage::estimate_success(spec, trials, spec.k).expect("valid storage spec")
}

fn rate_se(s: &SuccessStats) -> f64 {
    stats::proportion_std_error(s.rate, s.trials)
}

fn c1_field_and_matrix() -> Outcome {
    timed(Duration::from_secs(5), || {
        let report = selftest::run(SEED);
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        outcome(
            report.passed(),
            if failed.is_empty() {
                format!("{} checks passed", report.checks.len())
            } else {
                format!("failed: {}", failed.join(", "))
            },
        )
    })
}

fn c2_any_k_query() -> Outcome {
    timed(Duration::from_secs(60), || {
        let s = storage_rate(&StorageCodeSpec::new(50, 100).with_c(5.0).with_seed(SEED), 2000);
        outcome(
            s.rate >= STORAGE_MIN_RATE,
            format!("k=50 n=100 c=5: success {}/{} = {:.4} (need ≥ {STORAGE_MIN_RATE})", s.successes, s.trials, s.rate),
        )
    })
}

fn c3_log_degree_needed() -> Outcome {
    timed(Duration::from_secs(90), || {
        let base = StorageCodeSpec::new(50, 100).with_seed(SEED + 3);
        let fixed = storage_rate(&base.clone().with_degree(2), 2000);
        let by_c: Vec<(f64, SuccessStats)> = [1.0, 2.0, 3.0, 5.0]
            .into_iter()
            .map(|c| (c, storage_rate(&base.clone().with_c(c), 2000)))
            .collect();
        let monotone = by_c.windows(2).all(|w| {
            let slack = MONOTONE_SIGMAS * (rate_se(&w[0].1).powi(2) + rate_se(&w[1].1).powi(2)).sqrt();
            w[1].1.rate >= w[0].1.rate - slack
        });
        let curve: Vec<String> = by_c.iter().map(|(c, s)| format!("c={c}:{:.3}", s.rate)).collect();
        outcome(
            fixed.rate < CONSTANT_DEGREE_MAX_RATE && monotone,
            format!(
                "degree 2: {:.4} (need < {CONSTANT_DEGREE_MAX_RATE}); {} monotone={monotone}",
                fixed.rate,
                curve.join(" ")
            ),
        )
    })
}

fn c4_flow_consistency() -> Outcome {
    timed(Duration::from_secs(10), || {
        let spec = StorageCodeSpec::new(10, 30).with_seed(SEED + 4);
        let trials = storage::run_trials(&spec, 500, 10).expect("valid spec");
        let successes = trials.iter().filter(|t| t.success).count();
        let bad = trials.iter().filter(|t| t.success && !t.flow_decodable).count();
        outcome(
            bad == 0,
            format!("{successes} successes of 500, {bad} without a saturating flow"),
        )
    })
}

fn c5_fountain() -> Outcome {
    timed(Duration::from_secs(120), || {
        let spec = |k, n| {
            FountainSpec::new(k, n)
                .with_overhead(0.3, 0.05)
                .with_d_max(20)
                .with_seed(SEED + 5)
        };
        let main = fountain::estimate_fountain(&spec(500, 1000), 200).expect("valid spec");
        let small = fountain::estimate_fountain(&spec(125, 250), 200).expect("valid spec");
        let drift = (main.mean_prerouting_degree - small.mean_prerouting_degree).abs()
            / small.mean_prerouting_degree;
        outcome(
            main.rate_meeting_target >= FOUNTAIN_MIN_RATE && drift < FOUNTAIN_DEGREE_DRIFT,
            format!(
                "rate {:.3} (need ≥ {FOUNTAIN_MIN_RATE}), mean fraction {:.4}; degree {:.3} at n=250 vs {:.3} at n=1000, drift {:.1}%",
                main.rate_meeting_target,
                main.mean_fraction,
                small.mean_prerouting_degree,
                main.mean_prerouting_degree,
                100.0 * drift
            ),
        )
    })
}

fn c6_peel_vs_elimination() -> Outcome {
    timed(Duration::from_secs(10), || {
        let mut rng = rng_from_seed(SEED + 6);
        let mut bad_subset = 0;
        let mut bad_bytes = 0;
        let mut peeled = 0;
        let mut eliminable = 0;
        for _ in 0..1000 {
            let k = rng.gen_range(1..=12);
            let n = rng.gen_range(k + 1..=3 * k + 2);
            let spec = FountainSpec::new(k, n)
                .with_d_max(rng.gen_range(1..=k))
                .with_overhead(0.01, 1.0)
                .with_payload_len(4);
            let data = storage::random_data(&mut rng, k, 4);
            let packets = fountain::build_fountain(&spec, &data, &mut rng).expect("valid spec");
            let m = rng.gen_range(1..=n);
            let chosen = rand::seq::index::sample(&mut rng, n, m);
            let queried: Vec<_> = chosen.iter().map(|j| packets[j].clone()).collect();

            let peel = fountain::peel_decode(&queried, k);
            let oracle = common::gf2_recoverable(&queried, k);
            peeled += peel.recovered.len();
            eliminable += oracle.len();
            if !peel.recovered.keys().all(|i| oracle.contains(i)) {
                bad_subset += 1;
            }
            if peel.recovered.iter().any(|(&i, p)| *p != data[i]) {
                bad_bytes += 1;
            }
        }
        outcome(
            bad_subset == 0 && bad_bytes == 0,
            format!(
                "1000 instances: {peeled} peeled of {eliminable} eliminable, {bad_subset} subset violations, {bad_bytes} payload mismatches"
            ),
        )
    })
}

/// The Θ(N) sweep, run once through the harness and shared by criteria 7-10.
fn radio_sweep() -> (RunResult, Vec<SweepRow>) {
    let sweep: Vec<String> = SWEEP_CHANNELS.iter().map(|n| format!(r#"{{"n_channels":{n}}}"#)).collect();
    let text = format!(
        r#"{{"schema_version":1,"kind":"radio",
            "parameters":{{"n_channels":16,"hops":"linear","nodes_per_hop":"linear"}},
            "sweep":[{}],"trials":{SWEEP_TRIALS},"seed":{}}}"#,
        sweep.join(","),
        SEED + 7
    );
    let config = harness::validate(&text).expect("sweep config is valid");
    let result = harness::execute(&config, &RunOptions { workers: None, no_timing: true })
        .expect("sweep runs");
    let rows = result
        .summary
        .points
        .iter()
        .map(|p| match &p.summary {
            PointSummary::Radio(row) => row.clone(),
            _ => unreachable!("radio config"),
        })
        .collect();
    (result, rows)
}

fn c7_coding_linear(rows: &[SweepRow], elapsed: Duration) -> Outcome {
    let xs: Vec<f64> = rows.iter().map(|r| r.n_channels as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_coding).collect();
    let fit = stats::linear_fit(&xs, &ys);
    let curve: Vec<String> = rows.iter().map(|r| format!("{}:{:.2}", r.n_channels, r.mean_coding)).collect();
    let limit = Duration::from_secs(600);
    outcome(
        fit.r_squared >= THROUGHPUT_MIN_R2 && fit.slope >= THROUGHPUT_MIN_SLOPE && elapsed <= limit,
        format!(
            "coding {} slope {:.4} R² {:.5} (need ≥ {THROUGHPUT_MIN_SLOPE}, ≥ {THROUGHPUT_MIN_R2}) [{:.1?} of {:?}]",
            curve.join(" "),
            fit.slope,
            fit.r_squared,
            elapsed,
            limit
        ),
    )
}

fn c8_forwarding_flat(rows: &[SweepRow]) -> Outcome {
    let first = rows.first().expect("sweep has points");
    let last = rows.last().expect("sweep has points");
    let sigma = (first.se_forwarding.powi(2) + last.se_forwarding.powi(2)).sqrt();
    let flat = last.mean_forwarding <= first.mean_forwarding + FORWARDING_SIGMAS * sigma;
    let curve: Vec<String> = rows.iter().map(|r| format!("{}:{:.2}", r.n_channels, r.mean_forwarding)).collect();
    outcome(
        flat && last.mean_forwarding < FORWARDING_MAX,
        format!(
            "forwarding {} ; N={} exceeds N={} by {:.2} (allowed {:.2}), cap {FORWARDING_MAX}",
            curve.join(" "),
            last.n_channels,
            first.n_channels,
            last.mean_forwarding - first.mean_forwarding,
            FORWARDING_SIGMAS * sigma
        ),
    )
}

fn c9_ratio(rows: &[SweepRow]) -> Outcome {
    let row = rows.last().expect("sweep has points");
    outcome(
        row.se_coding_over_n < RATIO_MAX_SE,
        format!(
            "N={}: coding/N = {:.4} ± {:.4} (need se < {RATIO_MAX_SE}); 1/e = {:.4}",
            row.n_channels,
            row.coding_over_n,
            row.se_coding_over_n,
            (-1.0f64).exp()
        ),
    )
}

fn c10_max_flow(sweep: &RunResult) -> Outcome {
    timed(Duration::from_secs(30), || {
        let mut rng = rng_from_seed(SEED + 10);
        let mut instances = 0;
        let mut disagree = 0;
        let mut order = 0;
        for _ in 0..3000 {
            let n = rng.gen_range(1..=3);
            let h = rng.gen_range(1..=3);
            let m = rng.gen_range(1..=3);
            let mut spec = RadioNetworkSpec::new(n, h, m);
            if rng.gen_bool(0.5) {
                spec = spec.timeslot(0.4, 0.4, 0.2);
            }
            let net = radio::build_network(&spec, &mut rng).expect("valid spec");
            let coding = radio::coding_throughput(&net).value;
            instances += 1;
            if coding != common::brute_force_paths(&net) {
                disagree += 1;
            }
            let lowest = radio::forwarding_throughput(&net);
            let random = radio::forwarding_throughput_with(&net, CollisionRule::Random, &mut rng);
            if lowest > coding || random > coding {
                order += 1;
            }
        }
        let TrialRows::Radio(rows) = &sweep.rows else {
            unreachable!("radio sweep")
        };
        let sweep_order = rows.iter().filter(|r| r.forwarding > r.coding).count();
        outcome(
            disagree == 0 && order == 0 && sweep_order == 0,
            format!(
                "{instances} tiny instances, {disagree} disagree with brute force; forwarding > coding on {} of {} instances",
                order + sweep_order,
                instances + rows.len()
            ),
        )
    })
}

fn c11_determinism() -> Outcome {
    let configs = [
        r#"{"kind":"storage","parameters":{"k":50,"n":100,"c":5},"trials":2000,"seed":11}"#,
        r#"{"kind":"storage","parameters":{"k":10,"n":30},"sweep":[{"degree":2},{"c":1}],"trials":500,"seed":12}"#,
        r#"{"kind":"fountain","parameters":{"k":500,"n":1000,"epsilon":0.3,"delta":0.05,"d_max":20},"sweep":[{"k":125,"n":250}],"trials":40,"seed":13}"#,
        r#"{"kind":"radio","parameters":{"n_channels":16,"hops":"linear","nodes_per_hop":"linear"},"sweep":[{"n_channels":16},{"n_channels":32}],"trials":20,"seed":14}"#,
        r#"{"kind":"radio","parameters":{"n_channels":8,"hops":4,"mode":"timeslot","collision":"random"},"trials":50,"seed":15,"format":"json"}"#,
    ];
    let dir = tempfile::tempdir().expect("temp dir");
    let mut compared = 0;
    let mut differing = Vec::new();
    for (i, text) in configs.iter().enumerate() {
        let mut outputs = Vec::new();
        for workers in [1, 8] {
            let mut config = harness::validate(text).expect("acceptance config is valid");
            config.output_path = Some(dir.path().join(format!("c{i}_w{workers}.out")));
            let options = RunOptions { workers: Some(workers), no_timing: true };
            let (_, written) = harness::run(&config, &options).expect("run succeeds");
            outputs.push(
                written
                    .iter()
                    .map(|p| std::fs::read(p).expect("output readable"))
                    .collect::<Vec<_>>(),
            );
        }
        compared += outputs[0].len();
        if outputs[0] != outputs[1] {
            differing.push(i);
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} configs, {compared} files compared across 1 and 8 workers, differing configs {differing:?}", configs.len()),
    )
}

fn print(id: usize, o: &Outcome) {
    println!("[{}] C{id:<2} {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
}

fn main() {
    // Keep `cargo test --list` and filtered runs quiet.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }

    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut record = |id: usize, o: Outcome| {
        print(id, &o);
        results.push((id, o));
    };
    record(1, c1_field_and_matrix());
    record(2, c2_any_k_query());
    record(3, c3_log_degree_needed());
    record(4, c4_flow_consistency());
    record(5, c5_fountain());
    record(6, c6_peel_vs_elimination());

    let start = Instant::now();
    let (sweep, rows) = radio_sweep();
    let elapsed = start.elapsed();
    record(7, c7_coding_linear(&rows, elapsed));
    record(8, c8_forwarding_flat(&rows));
    record(9, c9_ratio(&rows));
    record(10, c10_max_flow(&sweep));
    record(11, c11_determinism());

    let failed: Vec<usize> = results.iter().filter(|(_, o)| !o.passed).map(|(id, _)| *id).collect();
    println!(
        "acceptance: {} passed, {} failed",
        results.len() - failed.len(),
        failed.len()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
