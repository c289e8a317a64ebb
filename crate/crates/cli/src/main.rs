use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};
use exdyn_cli::{execute, parse_config, ArithmeticMode};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ArithmeticFlag {
    Exact,
    Float,
}

/// Verify duality, reversibility and symmetry identities of exchange
/// models exactly, or simulate them on graphs.
#[derive(Parser, Debug)]
#[command(name = "exdyn", version)]
struct Args {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "EXDYN_JOBS")]
    jobs: Option<usize>,
    /// Overrides `arithmetic` in the config.
    #[arg(long, value_enum)]
    arithmetic: Option<ArithmeticFlag>,
}

fn main_inner(args: Args) -> Result<bool> {
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg = parse_config(&text).with_context(|| format!("in {}", args.config.display()))?;
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    match args.arithmetic {
        Some(ArithmeticFlag::Exact) => cfg.arithmetic = ArithmeticMode::Exact,
        Some(ArithmeticFlag::Float) if cfg.arithmetic == ArithmeticMode::Exact => {
            cfg.arithmetic = ArithmeticMode::Float { tolerance: 1e-12 }
        }
        _ => {}
    }
    let base = args.config.parent().unwrap_or(Path::new("."));
    let outcome = execute(&cfg, base)?;
    for line in &outcome.log {
        println!("{line}");
    }
    for file in &outcome.files {
        println!("wrote {}", file.display());
    }
    if !outcome.success {
        let failing = outcome.reports.iter().filter(|r| !r.passed()).count();
        eprintln!("{failing} check(s) failed; witnesses in {}", cfg.out.join("witnesses.json").display());
    }
    Ok(outcome.success)
}

fn main() -> ExitCode {
    match main_inner(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
