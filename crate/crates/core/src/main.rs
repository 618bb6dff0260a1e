use clap::{Parser, Subcommand};
use decouple_lab::cli::{self, RunOptions};
use decouple_lab::config::{ExperimentConfig, PointKind};
use std::path::PathBuf;
use std::process::ExitCode;

/// Numerical experiments for planar l2 decoupling with degenerate
/// curvature.
#[derive(Parser)]
#[command(name = "declab", version)]
struct Cli {
    /// Experiment config (JSON). Defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (default: all cores; DECOUPLE_LAB_WORKERS as fallback).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analyze the configured curve: vanishing orders, Hölder orders, r.
    CurveInfo,
    /// Decoupling ratios for constant g over the config's delta and p grids.
    Ratio,
    /// Extremizer scans of the decoupling constant across delta.
    Scan,
    /// Lower-bound scan for the osculating-parabola validity length.
    RescaleCheck,
    /// Weighted L^6 averages of exponential sums.
    Expsum {
        /// Curve spec as JSON, overriding the config curve.
        #[arg(long)]
        curve: Option<String>,
        /// Comma-separated point counts, e.g. 8,16,32.
        #[arg(long = "N")]
        n_values: Option<String>,
        /// Point placement: lattice, random, or perturbed.
        #[arg(long)]
        points: Option<String>,
        /// Ball radius; defaults to N^r from curve analysis.
        #[arg(long = "R")]
        radius: Option<f64>,
    },
    /// Quick end-to-end checks of the basic identities.
    Selftest,
}

fn load_config(path: &Option<PathBuf>) -> decouple_lab::Result<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let src = std::fs::read_to_string(p)?;
            ExperimentConfig::from_json(&src)
        }
    }
}

fn run(cli: Cli) -> decouple_lab::Result<()> {
    let mut cfg = load_config(&cli.config)?;
    let opts = RunOptions {
        out_dir: cli.out.clone(),
        workers: cli.workers,
        seed: cli.seed,
        quiet: cli.quiet,
    };
    let sub = match &cli.cmd {
        Cmd::CurveInfo => cli::Subcommand::CurveInfo,
        Cmd::Ratio => cli::Subcommand::Ratio,
        Cmd::Scan => cli::Subcommand::Scan,
        Cmd::RescaleCheck => cli::Subcommand::RescaleCheck,
        Cmd::Selftest => cli::Subcommand::Selftest,
        Cmd::Expsum {
            curve,
            n_values,
            points,
            radius,
        } => {
            if let Some(src) = curve {
                cfg.curve = serde_json::from_str(src)
                    .map_err(|e| decouple_lab::Error::Config(format!("--curve: {e}")))?;
            }
            if let Some(ns) = n_values {
                let parsed: std::result::Result<Vec<usize>, _> =
                    ns.split(',').map(|s| s.trim().parse()).collect();
                cfg.expsum.n_values =
                    parsed.map_err(|e| decouple_lab::Error::Config(format!("--N: {e}")))?;
            }
            if let Some(kind) = points {
                cfg.expsum.points = match kind.as_str() {
                    "lattice" => PointKind::Lattice,
                    "random" => PointKind::Random,
                    "perturbed" => PointKind::Perturbed,
                    other => {
                        return Err(decouple_lab::Error::Config(format!(
                            "--points must be lattice|random|perturbed, got {other}"
                        )))
                    }
                };
            }
            if radius.is_some() {
                cfg.expsum.radius = *radius;
            }
            cli::Subcommand::Expsum
        }
    };
    let paths = cli::run(sub, cfg, &opts)?;
    if !cli.quiet {
        for p in paths {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
