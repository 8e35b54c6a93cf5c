//! Command-line front end for the sweep engine.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 completed with low-confidence points present.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pjdet::sim::{self, ExperimentConfig};
use pjdet::{oracle, Error};

#[derive(Parser)]
#[command(name = "pjdet", version, about = "Large-MIMO detection Monte Carlo simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a Monte Carlo sweep and write results.csv / manifest.toml.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Also render a self-contained SVG chart.
        #[arg(long)]
        svg: bool,
    },
    /// Write analytic SER curves for the configured detectors.
    Theory {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-check every closed-form PEP against its Monte Carlo twin.
    Validate {
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 20260401)]
        seed: u64,
    },
    /// Run a short sweep and print the measured op-count table.
    Opcount {
        #[arg(long)]
        config: PathBuf,
        /// Trials per point used for the measurement.
        #[arg(long, default_value_t = 4)]
        trials: u64,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_LOW_CONFIDENCE: u8 = 4;

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::ConfigParse(_) | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.cmd {
        Cmd::Simulate {
            config,
            out,
            seed,
            workers,
            svg,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let (result, manifest) = sim::run_sweep_with_progress(&cfg, workers, |p| {
                eprintln!(
                    "point n={} snr={} dB {}: trials={} errors={} ser={:.3e}{}",
                    p.n_users,
                    p.snr_db,
                    p.detector,
                    p.trials,
                    p.symbol_errors,
                    p.ser(),
                    if p.low_confidence { " [low confidence]" } else { "" }
                );
            })?;
            let curves = sim::theory_curves(&cfg, cfg.theory.realizations)?;
            let files = sim::emit_results(
                &out,
                &result,
                &curves,
                &manifest,
                svg || cfg.output.svg,
            )?;
            eprintln!("wrote {}", files.csv.display());
            if result.points.iter().any(|p| p.low_confidence) {
                eprintln!("warning: low-confidence points present");
                return Ok(EXIT_LOW_CONFIDENCE);
            }
            Ok(0)
        }
        Cmd::Theory { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let realizations = if cfg.theory.realizations > 0 {
                cfg.theory.realizations
            } else {
                32
            };
            let curves = sim::theory_curves(&cfg, realizations)?;
            if curves.is_empty() {
                eprintln!("no closed-form curves apply to this config");
                return Ok(0);
            }
            std::fs::create_dir_all(&out)?;
            let rows = sim::output::theory_rows(&curves, cfg.channel.n, cfg.channel.m);
            let path = out.join("theory.csv");
            sim::write_csv(&path, &rows)?;
            eprintln!("wrote {}", path.display());
            Ok(0)
        }
        Cmd::Validate { trials, seed } => {
            let lines = oracle::validation_suite(trials, seed)?;
            let mut all_pass = true;
            for l in &lines {
                println!(
                    "[{}] {:<18} formula={:.5e} monte-carlo={:.5e} |dev|={:.2} sigma (trials={})",
                    if l.pass { "PASS" } else { "FAIL" },
                    l.name,
                    l.formula,
                    l.estimate,
                    l.deviation_sigmas,
                    l.trials
                );
                all_pass &= l.pass;
            }
            if all_pass {
                Ok(0)
            } else {
                Ok(EXIT_NUMERICAL)
            }
        }
        Cmd::Opcount { config, trials } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.trials.min_trials = trials;
            cfg.trials.max_trials = trials;
            cfg.trials.min_errors = 1;
            let (result, _) = sim::run_sweep(&cfg, None)?;
            print!("{}", sim::opcount_report(&cfg, &result));
            Ok(0)
        }
    }
}
