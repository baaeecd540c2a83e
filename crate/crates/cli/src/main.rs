use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use heatstat_cli::commands::{self, RunContext};
use heatstat_cli::config::ExperimentConfig;
use heatstat_cli::error::{CliError, Result};

#[derive(Parser)]
#[command(
    name = "heatstat",
    version,
    about = "Exact and sampled heat statistics for repeatedly measured quantum systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact heat distribution, characteristic function, and moments
    Exact(RunArgs),
    /// Monte Carlo trajectory sampling with exact cross-checks
    Sample(RunArgs),
    /// Mixing structure and large-count convergence profile
    Thermalize(RunArgs),
    /// Escape-probability scaling under rapid repeated measurements
    Zeno(RunArgs),
    /// Effective-temperature sweep of the three-level ensemble family
    Fig1(RunArgs),
    /// Cheap invariant audit of a configuration
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if absent
    #[arg(long)]
    out: PathBuf,
    /// Override the sampling seed from the config
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread count for sampling
    #[arg(long, env = "HEATSTAT_THREADS")]
    threads: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    let (name, args): (&'static str, &RunArgs) = match &cli.command {
        Command::Exact(a) => ("exact", a),
        Command::Sample(a) => ("sample", a),
        Command::Thermalize(a) => ("thermalize", a),
        Command::Zeno(a) => ("zeno", a),
        Command::Fig1(a) => ("fig1", a),
        Command::Validate(a) => ("validate", a),
    };
    match execute(name, args) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("{}", err.to_json());
            std::process::exit(err.exit_code());
        }
    }
}

fn execute(name: &'static str, args: &RunArgs) -> Result<()> {
    if let Some(threads) = args.threads {
        if threads == 0 {
            return Err(CliError::config("threads", "must be at least 1"));
        }
        // A second initialization in one process is harmless: the pool
        // is already running with the earlier setting.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let (config, config_sha256) = ExperimentConfig::load(&args.config)?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Io {
        message: format!("creating {}: {e}", args.out.display()),
    })?;
    let ctx = RunContext {
        out: args.out.clone(),
        config_sha256,
        seed_override: args.seed,
        command: name,
    };
    match name {
        "exact" => commands::exact(&config, &ctx),
        "sample" => commands::sample(&config, &ctx),
        "thermalize" => commands::thermalize(&config, &ctx),
        "zeno" => commands::zeno(&config, &ctx),
        "fig1" => commands::fig1(&config, &ctx),
        "validate" => commands::validate(&config, &ctx),
        _ => unreachable!("subcommands are exhaustive"),
    }
}
