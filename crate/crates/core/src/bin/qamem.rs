use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qamem::harness::{load_config, run_command, sha256_hex, Command, RunContext};

#[derive(Parser)]
#[command(name = "qamem", version, about = "Spectra, metastable phases, retrieval and capacity of an oscillator memory")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed; overrides the config's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: the config's sweep setting, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Liouvillian eigenvalues and steady state.
    Spectrum,
    /// Two-parameter sweep of the slow timescales.
    PhaseDiagram,
    /// Time evolution, full and restricted to the metastable manifold.
    Evolve,
    /// Monte Carlo pattern retrieval.
    Retrieval,
    /// Storage capacity curves.
    Capacity,
    /// Wigner functions on a phase-space grid.
    Wigner,
    /// Mean-field fixed points and their stability.
    FixedPoints,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Spectrum => Command::Spectrum,
            Cmd::PhaseDiagram => Command::PhaseDiagram,
            Cmd::Evolve => Command::Evolve,
            Cmd::Retrieval => Command::Retrieval,
            Cmd::Capacity => Command::Capacity,
            Cmd::Wigner => Command::Wigner,
            Cmd::FixedPoints => Command::FixedPoints,
        }
    }
}

fn run(cli: Cli) -> qamem::Result<()> {
    let (cfg, bytes) = match &cli.config {
        Some(path) => load_config(path)?,
        None => (Default::default(), b"{}".to_vec()),
    };
    let threads = cli
        .threads
        .or(cfg.sweep.as_ref().and_then(|s| s.threads))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(qamem::Error::Config("--threads must be ≥ 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| qamem::Error::Config(e.to_string()))?;
    let ctx = RunContext { out: cli.out, seed: cli.seed.or(cfg.seed).unwrap_or(0), threads, config_sha256: sha256_hex(&bytes) };
    let manifest = run_command(cli.command.into(), &cfg, &ctx)?;
    log::info!("{} finished in {:.2} s; outputs in {}", manifest.command, manifest.wall_time_s, ctx.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
