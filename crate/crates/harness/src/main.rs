// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use lpud_core::io::write_json;
use lpud_core::rir::RirDataset;
use lpud_harness::experiment::{run_experiment, trial_path, write_trial, PHASES};
use lpud_harness::metrics::to_db;
use lpud_harness::models::{simulate_dataset, Models};
use lpud_harness::trial::run_trial;
use lpud_harness::ExperimentConfig;

/// Subspace-projected adaptive system identification experiments.
#[derive(Parser)]
#[command(name = "lpud", version)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    config: PathBuf,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::from_path(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = &self.out_dir {
            cfg.output_dir = d.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the training responses into <out-dir>/dataset.
    SimulateRirs(Common),
    /// Learn the subspace models into <out-dir>/models.
    Learn {
        #[command(flatten)]
        common: Common,
        /// Use a stored training set instead of simulating one.
        #[arg(long)]
        dataset_dir: Option<PathBuf>,
    },
    /// Run a single trial and write its trace.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        /// SNR in dB; the first configured value by default.
        #[arg(long, allow_hyphen_values = true)]
        snr_db: Option<f64>,
        /// Use stored models instead of learning them.
        #[arg(long)]
        model_dir: Option<PathBuf>,
    },
    /// Run the full Monte Carlo sweep.
    Experiment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model_dir: Option<PathBuf>,
    },
    /// Print a preset configuration ("desk" or "full") as JSON.
    Preset { name: String },
}

fn models(cfg: &ExperimentConfig, dir: Option<&Path>) -> Result<Models> {
    match dir {
        Some(d) => {
            Models::load(cfg, d).with_context(|| format!("loading models from {}", d.display()))
        }
        None => Ok(Models::prepare(cfg)?),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match cli.command {
        Command::Preset { name } => {
            let cfg = ExperimentConfig::preset(&name)?;
            println!("{}", serde_json::to_string_pretty(&cfg)?);
        }
        Command::SimulateRirs(common) => {
            let cfg = common.load()?;
            let dir = cfg.output_dir.join("dataset");
            let dataset = simulate_dataset(&cfg)?;
            dataset.save(&dir)?;
            println!("{} responses written to {}", dataset.len(), dir.display());
        }
        Command::Learn {
            common,
            dataset_dir,
        } => {
            let cfg = common.load()?;
            let dataset = match dataset_dir {
                Some(d) => RirDataset::<f64>::load(&d)
                    .with_context(|| format!("loading training set from {}", d.display()))?,
                None => simulate_dataset(&cfg)?,
            };
            let models = Models::learn(&cfg, &dataset)?;
            let dir = cfg.output_dir.join("models");
            models.save(&dir)?;
            for (name, p) in [("local", &models.local), ("global", &models.global)] {
                if let Some(p) = p {
                    let dims: Vec<usize> = p.union.models.iter().map(|m| m.dim()).collect();
                    println!("{name}: {} models, dimensions {dims:?}", dims.len());
                }
            }
            println!("models written to {}", dir.display());
        }
        Command::Run {
            common,
            trial,
            snr_db,
            model_dir,
        } => {
            let cfg = common.load()?;
            let snr = snr_db.unwrap_or(cfg.snr_db[0]);
            let models = models(&cfg, model_dir.as_deref())?;
            let result = run_trial(&cfg, &models, trial, snr)?;
            let path = trial_path(&cfg.output_dir, snr, trial);
            let block_s = cfg.filter_length() as f64 / cfg.scenario.sample_rate;
            write_trial(&path, &result, block_s)?;
            println!("trial {trial} at {snr} dB, source {:.3?}", result.source);
            for run in &result.runs {
                for (k, phase) in PHASES.iter().enumerate() {
                    println!(
                        "  {:<8} {:<12} mismatch {:>7.2} dB  ERLE {:>6.2} dB",
                        run.algorithm.name(),
                        phase,
                        to_db(run.mismatch_avg[k]),
                        to_db(run.erle[k])
                    );
                }
            }
            println!("trace written to {}", path.display());
        }
        Command::Experiment { common, model_dir } => {
            let cfg = common.load()?;
            let models = models(&cfg, model_dir.as_deref())?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            write_json(&cfg.output_dir.join("config.json"), &cfg)?;
            let out = run_experiment(&cfg, &models, &cfg.output_dir)?;
            println!(
                "{:>7} {:<8} {:<12} {:>12} {:>10}",
                "snr_db", "alg", "phase", "mismatch_db", "erle_db"
            );
            for r in &out.summary {
                println!(
                    "{:>7} {:<8} {:<12} {:>12.2} {:>10.2}",
                    r.snr_db,
                    r.algorithm.name(),
                    r.phase,
                    r.mismatch_mean_db,
                    r.erle_mean_db
                );
            }
            println!(
                "{} files written to {}",
                out.files.len() + 1,
                cfg.output_dir.display()
            );
        }
    }
    Ok(())
}
