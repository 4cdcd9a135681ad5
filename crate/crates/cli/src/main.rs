//! `demuxforge <design|map|simulate|invert> --config <file> --out <dir>`
//!
//! Exit codes: 0 on pass, 2 for invalid configuration or missing input,
//! 3 when a verification check fails, 1 otherwise.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use demuxforge_core::protocols::Provenance;
use sha2::{Digest, Sha256};

use commands::{Context, Failure};
use config::RunConfig;

/// Environment variable capping the number of worker threads.
const THREADS_VAR: &str = "DEMUXFORGE_THREADS";

#[derive(Parser)]
#[command(name = "demuxforge", version, about = "Design, map and verify fast trap-splitting protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing); overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Map every N-th sample and interpolate the rest.
    #[arg(long, global = true)]
    stride: Option<usize>,
    /// Halve dt until the channel fidelities settle.
    #[arg(long, global = true)]
    verify_dt: bool,
    /// Also simulate the linear-ramp baseline.
    #[arg(long, global = true)]
    baseline: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Design the two-level control curve and check it.
    Design,
    /// Map the curve onto trap parameters.
    Map,
    /// Propagate both channels through the mapped schedule.
    Simulate,
    /// Run the three-stage population inversion.
    Invert,
}

fn setup(cli: &Cli) -> Result<Context, Failure> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Failure::Invalid(format!("{THREADS_VAR} = {v:?} is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Other(e.to_string()))?;
    }
    let path = cli.config.as_ref().ok_or_else(|| Failure::Invalid("--config is required".into()))?;
    let bytes = std::fs::read(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let config: RunConfig =
        serde_json::from_slice(&bytes).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    config.validate(cli.stride)?;
    let out = cli
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| Failure::Invalid("no output directory: pass --out or set output_dir".into()))?;
    std::fs::create_dir_all(&out).map_err(|e| Failure::Invalid(format!("{}: {e}", out.display())))?;
    let hash = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect::<String>();
    Ok(Context {
        config,
        out,
        stride: cli.stride,
        verify_dt: cli.verify_dt,
        baseline: cli.baseline,
        provenance: Provenance::new(Some(hash)),
    })
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let ctx = setup(cli)?;
    match cli.command {
        Command::Design => commands::design(&ctx),
        Command::Map => commands::map(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Invert => commands::invert(&ctx),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => {}
        Err(f) => {
            eprintln!("demuxforge: {f}");
            std::process::exit(f.exit_code());
        }
    }
}
