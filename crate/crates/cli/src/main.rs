use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use meshcode::harness::{self, ExperimentKind, OutputFormat, RunError, RunOptions};
use meshcode::selftest;

#[derive(Parser)]
#[command(name = "meshcode", version, about = "Storage-code, fountain and untuned-radio simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decentralized erasure-code storage trials.
    Storage(RunArgs),
    /// Distributed fountain-code trials.
    Fountain(RunArgs),
    /// Coding vs forwarding throughput of random multi-hop radio networks.
    Radio(RunArgs),
    /// Exhaustive field and matrix oracle checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per point; overrides the config.
    #[arg(long)]
    trials: Option<usize>,
    /// Output file; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json; overrides the config.
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Write zero wall times so output is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

fn run_experiment(kind: ExperimentKind, args: RunArgs) -> Result<(), RunError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| RunError::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut config = harness::validate_with_kind(&text, Some(kind)).map_err(RunError::Config)?;
    if let Some(seed) = args.seed {
        config = config.with_seed(seed);
    }
    if let Some(trials) = args.trials {
        config = config.with_trials(trials);
    }
    if let Some(out) = args.out {
        config.output_path = Some(out);
    }
    if let Some(format) = args.format {
        config.format = format;
    }
    let options = RunOptions {
        workers: args.workers,
        no_timing: args.no_timing,
    };
    let (result, written) = harness::run(&config, &options)?;
    for path in &written {
        eprintln!("wrote {}", path.display());
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&result.summary).expect("summary serializes")
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Selftest { seed } => {
            let report = selftest::run(seed);
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            println!("{} checks in {:.2?}", report.checks.len(), report.elapsed);
            return if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(4) };
        }
        Command::Storage(a) => (ExperimentKind::Storage, a),
        Command::Fountain(a) => (ExperimentKind::Fountain, a),
        Command::Radio(a) => (ExperimentKind::Radio, a),
    };
    match run_experiment(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
