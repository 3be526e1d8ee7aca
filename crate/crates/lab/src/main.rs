use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use meanfield_lab::config::MAX_CONFIG_SEED;
use meanfield_lab::{exit, execute, Command, ExperimentConfig, RunOptions};

/// Runs mean-field experiments described by a TOML config.
#[derive(Parser)]
#[command(name = "meanfield", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Particle trajectories and the scaling report of the graph.
    Simulate(Flags),
    /// Density snapshots of the fibered transport system.
    Solve(Flags),
    /// Tree observables, hierarchy norms and residuals.
    Observe(Flags),
    /// Hierarchical rearrangement and its shift modulus.
    Rearrange(Flags),
    /// Independence and mean-field gap sweeps.
    Convergence(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides the config's master seed (at most 2^63 - 1).
    #[arg(long, value_name = "U64", value_parser = clap::value_parser!(u64).range(..=MAX_CONFIG_SEED))]
    seed: Option<u64>,
    /// Output directory; `MEANFIELD_OUT` or the config's `out` otherwise.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG as u8 } else { 0 });
        }
    };
    let (cmd, flags) = match cli.command {
        Cmd::Simulate(f) => (Command::Simulate, f),
        Cmd::Solve(f) => (Command::Solve, f),
        Cmd::Observe(f) => (Command::Observe, f),
        Cmd::Rearrange(f) => (Command::Rearrange, f),
        Cmd::Convergence(f) => (Command::Convergence, f),
    };
    let cfg = match ExperimentConfig::from_path(&flags.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", flags.config.display());
            return ExitCode::from(exit::CONFIG as u8);
        }
    };
    let out = flags
        .out
        .or_else(|| std::env::var_os("MEANFIELD_OUT").map(PathBuf::from));
    let opts = RunOptions {
        seed: flags.seed,
        out,
        threads: flags.threads.map(usize::from),
        base_dir: flags.config.parent().map(PathBuf::from),
    };
    match execute(cmd, &cfg, &opts) {
        Ok(m) => {
            println!("{} finished: {} outputs", m.command, m.outputs.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
