//! Batch front end for the Rabi zigzag chain pipelines.

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::RunConfig;
use crate::failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "rabi-zigzag", version, about = "Quantum Rabi zigzag chain: spectra, phase diagrams, currents and ED")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores); overrides `workers`.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Random seed for minimizer restarts; overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Bogoliubov bands on the momentum grid.
    Bands,
    /// Phase diagram over two parameter axes.
    Scan,
    /// Species and chain currents against J1/J2 for a list of fluxes.
    Currents,
    /// Critical exponents of the soft modes.
    Exponents,
    /// Exact diagonalization with a cutoff sweep.
    Ed,
    /// Locate the NP/MSR/FSR triple point.
    TriplePoint,
}

fn run(cli: &Cli) -> Result<Vec<String>, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Config("--config PATH is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(out) = &cli.out {
        cfg.set("out_dir", out.display().to_string());
    }
    if let Some(w) = cli.workers {
        cfg.set("workers", w.to_string());
    }
    if let Some(s) = cli.seed {
        cfg.set("seed", s.to_string());
    }
    let workers: usize = cfg.get("workers")?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| Failure::Resource(format!("thread pool: {e}")))?;

    let ctx = Context::new(cfg)?;
    let files = match cli.command {
        Command::Bands => commands::bands(&ctx),
        Command::Scan => commands::scan(&ctx),
        Command::Currents => commands::currents(&ctx),
        Command::Exponents => commands::exponents(&ctx),
        Command::Ed => commands::ed(&ctx),
        Command::TriplePoint => commands::triple_point(&ctx),
    }?;
    Ok(commands::relative(&files, &ctx.out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {f}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rabi-zigzag: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
