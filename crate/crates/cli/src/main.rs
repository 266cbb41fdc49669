use clap::{Args, Parser, Subcommand};
use icl_ttc::config::{parse_config, ExperimentKind};
use icl_ttc::error::CliError;
use icl_ttc::runner;
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulation driver for test-time computing in in-context linear
/// regression: noisy gradient-descent decoders, path aggregation, exact
/// chain analysis, and accuracy extrapolation.
#[derive(Parser)]
#[command(name = "icl-ttc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Excess-risk sweep for Gaussian-coefficient tasks (GD baseline included).
    ContinuousRisk(RunArgs),
    /// Recovery-accuracy sweep for binary sparse tasks (greedy baseline included).
    BinaryAccuracy(RunArgs),
    /// Exact Markov-chain marginals, gaps, stationary mass, and greedy trajectory.
    MarkovExact(RunArgs),
    /// Measure a cheap accuracy table and extrapolate to held-out budgets.
    FitPredict(RunArgs),
    /// Run the cross-module invariant suite; failures exit with code 3.
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (sectioned key = value format).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to ICL_TTC_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match drive(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn drive(cli: Cli) -> Result<(), CliError> {
    let (expected, args) = match cli.command {
        Command::ContinuousRisk(a) => (ExperimentKind::ContinuousRisk, a),
        Command::BinaryAccuracy(a) => (ExperimentKind::BinaryAccuracy, a),
        Command::MarkovExact(a) => (ExperimentKind::MarkovExact, a),
        Command::FitPredict(a) => (ExperimentKind::FitPredict, a),
        Command::Validate(a) => (ExperimentKind::Validate, a),
    };

    let threads = match args.threads {
        Some(v) => Some(v),
        None => match std::env::var("ICL_TTC_THREADS") {
            Ok(s) => Some(s.parse::<usize>().map_err(|_| {
                CliError::Config(format!("ICL_TTC_THREADS must be an unsigned integer, got `{s}`"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(v) = threads {
        if v == 0 {
            return Err(CliError::Config("thread count must be >= 1".to_string()));
        }
        // Ignore a second initialization; the pool is process-global.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(v).build_global();
    }

    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", args.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.out = out.display().to_string();
    }
    if cfg.kind != expected {
        return Err(CliError::Config(format!(
            "config declares kind = {}, but the {} subcommand was invoked",
            cfg.kind.as_str(),
            expected.as_str()
        )));
    }

    let outcome = runner::run(&cfg)?;
    for (name, pass) in &outcome.checks {
        println!("invariant {}: {}", name, if *pass { "PASS" } else { "FAIL" });
    }
    println!(
        "wrote {} rows to {} (run id {})",
        outcome.rows,
        outcome.out_dir.join("results.csv").display(),
        outcome.run_id
    );
    let failed: Vec<&str> = outcome
        .checks
        .iter()
        .filter(|(_, pass)| !pass)
        .map(|(name, _)| name.as_str())
        .collect();
    if !failed.is_empty() {
        return Err(CliError::Validation(format!(
            "{} invariant(s) failed: {}",
            failed.len(),
            failed.join(", ")
        )));
    }
    Ok(())
}
