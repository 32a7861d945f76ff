//! Monte Carlo sweeps over SNR and trials, with CSV and plot-script output.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{Error, Result};
use crate::metrics::to_db;
use crate::models::Models;
use crate::trial::{run_trial, TrialResult};

pub const TRIAL_SCHEMA: &str = "lpud-trial-trace v1";
pub const TRIAL_SUMMARY_SCHEMA: &str = "lpud-trial-summary v1";
pub const MISMATCH_SCHEMA: &str = "lpud-aggregate-mismatch v1";
pub const SUMMARY_SCHEMA: &str = "lpud-aggregate-summary v1";

pub const PHASES: [&str; 2] = ["convergence", "steady_state"];

/// One row of the aggregate summary; statistics are taken over the trials'
/// decibel values.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub snr_db: f64,
    pub algorithm: Algorithm,
    pub phase: &'static str,
    pub trials: usize,
    pub erle_mean_db: f64,
    pub erle_std_db: f64,
    pub mismatch_mean_db: f64,
    pub mismatch_std_db: f64,
    pub oracle_erle_mean_db: f64,
    pub oracle_erle_std_db: f64,
}

/// Per-block mismatch statistics over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct MismatchRow {
    pub snr_db: f64,
    pub algorithm: Algorithm,
    pub block: usize,
    pub mean_db: f64,
    pub std_db: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    /// Ordered by SNR, then trial index.
    pub results: Vec<TrialResult>,
    pub mismatch: Vec<MismatchRow>,
    pub summary: Vec<SummaryRow>,
    pub files: Vec<PathBuf>,
}

impl ExperimentOutput {
    pub fn summary_row(&self, snr_db: f64, alg: Algorithm, phase: &str) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.snr_db == snr_db && r.algorithm == alg && r.phase == phase)
    }

    pub fn mismatch_row(&self, snr_db: f64, alg: Algorithm, block: usize) -> Option<&MismatchRow> {
        self.mismatch
            .iter()
            .find(|r| r.snr_db == snr_db && r.algorithm == alg && r.block == block)
    }
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn snr_label(snr_db: f64) -> String {
    if snr_db == f64::INFINITY {
        "inf".into()
    } else {
        format!("{snr_db}")
    }
}

fn create(path: &Path, schema: &str) -> Result<csv::Writer<File>> {
    let io = |source| Error::Output {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    let mut file = File::create(path).map_err(io)?;
    writeln!(file, "# schema: {schema}").map_err(io)?;
    Ok(csv::Writer::from_writer(file))
}

pub fn trial_path(out_dir: &Path, snr_db: f64, trial: usize) -> PathBuf {
    out_dir
        .join("trials")
        .join(format!("snr_{}_trial_{trial:03}.csv", snr_label(snr_db)))
}

/// Writes the per-block trace of one trial.
pub fn write_trial(path: &Path, result: &TrialResult, block_s: f64) -> Result<()> {
    let mut w = create(path, TRIAL_SCHEMA)?;
    let mut header = vec!["block".to_string(), "time_s".to_string()];
    for r in &result.runs {
        header.push(format!("{}_mismatch_db", r.algorithm));
        if r.algorithm != Algorithm::Baseline {
            header.push(format!("{}_selected", r.algorithm));
        }
    }
    w.write_record(&header)?;
    for m in 0..result.blocks() {
        let mut row = vec![(m + 1).to_string(), fmt((m + 1) as f64 * block_s)];
        for r in &result.runs {
            row.push(fmt(to_db(r.mismatch[m])));
            if r.algorithm != Algorithm::Baseline {
                row.push(r.selected[m].to_string());
            }
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| Error::Output {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

fn aggregate(
    cfg: &ExperimentConfig,
    results: &[TrialResult],
) -> (Vec<MismatchRow>, Vec<SummaryRow>) {
    let mut mismatch = Vec::new();
    let mut summary = Vec::new();
    let blocks = cfg.num_blocks();
    for &snr in &cfg.snr_db {
        let group: Vec<&TrialResult> = results.iter().filter(|r| r.snr_db == snr).collect();
        for &alg in &cfg.algorithms {
            let runs: Vec<_> = group.iter().filter_map(|r| r.run(alg)).collect();
            for m in 0..blocks {
                let values: Vec<f64> = runs.iter().map(|r| to_db(r.mismatch[m])).collect();
                let (mean_db, std_db) = mean_std(&values);
                mismatch.push(MismatchRow {
                    snr_db: snr,
                    algorithm: alg,
                    block: m + 1,
                    mean_db,
                    std_db,
                });
            }
            for (k, phase) in PHASES.iter().enumerate() {
                let erle: Vec<f64> = runs.iter().map(|r| to_db(r.erle[k])).collect();
                let mis: Vec<f64> = runs.iter().map(|r| to_db(r.mismatch_avg[k])).collect();
                let oracle: Vec<f64> = group.iter().map(|r| to_db(r.oracle_erle[k])).collect();
                let (erle_mean_db, erle_std_db) = mean_std(&erle);
                let (mismatch_mean_db, mismatch_std_db) = mean_std(&mis);
                let (oracle_erle_mean_db, oracle_erle_std_db) = mean_std(&oracle);
                summary.push(SummaryRow {
                    snr_db: snr,
                    algorithm: alg,
                    phase,
                    trials: runs.len(),
                    erle_mean_db,
                    erle_std_db,
                    mismatch_mean_db,
                    mismatch_std_db,
                    oracle_erle_mean_db,
                    oracle_erle_std_db,
                });
            }
        }
    }
    (mismatch, summary)
}

fn write_aggregates(
    out_dir: &Path,
    cfg: &ExperimentConfig,
    results: &[TrialResult],
    mismatch: &[MismatchRow],
    summary: &[SummaryRow],
) -> Result<Vec<PathBuf>> {
    let block_s = cfg.filter_length() as f64 / cfg.scenario.sample_rate;
    let mut files = Vec::new();

    let path = out_dir.join("trial_summary.csv");
    let mut w = create(&path, TRIAL_SUMMARY_SCHEMA)?;
    w.write_record([
        "snr_db",
        "trial",
        "algorithm",
        "phase",
        "erle_db",
        "mismatch_db",
        "oracle_erle_db",
        "source_x",
        "source_y",
        "source_z",
    ])?;
    for r in results {
        for run in &r.runs {
            for (k, phase) in PHASES.iter().enumerate() {
                w.write_record([
                    snr_label(r.snr_db),
                    r.trial.to_string(),
                    run.algorithm.to_string(),
                    phase.to_string(),
                    fmt(to_db(run.erle[k])),
                    fmt(to_db(run.mismatch_avg[k])),
                    fmt(to_db(r.oracle_erle[k])),
                    fmt(r.source[0]),
                    fmt(r.source[1]),
                    fmt(r.source[2]),
                ])?;
            }
        }
    }
    w.flush().map_err(|source| Error::Output {
        path: path.clone(),
        source,
    })?;
    files.push(path);

    let path = out_dir.join("aggregate_mismatch.csv");
    let mut w = create(&path, MISMATCH_SCHEMA)?;
    w.write_record([
        "snr_db",
        "algorithm",
        "block",
        "time_s",
        "mean_db",
        "std_db",
    ])?;
    for row in mismatch {
        w.write_record([
            snr_label(row.snr_db),
            row.algorithm.to_string(),
            row.block.to_string(),
            fmt(row.block as f64 * block_s),
            fmt(row.mean_db),
            fmt(row.std_db),
        ])?;
    }
    w.flush().map_err(|source| Error::Output {
        path: path.clone(),
        source,
    })?;
    files.push(path);

    let path = out_dir.join("aggregate_summary.csv");
    let mut w = create(&path, SUMMARY_SCHEMA)?;
    w.write_record([
        "snr_db",
        "algorithm",
        "phase",
        "trials",
        "erle_mean_db",
        "erle_std_db",
        "mismatch_mean_db",
        "mismatch_std_db",
        "oracle_erle_mean_db",
        "oracle_erle_std_db",
    ])?;
    for row in summary {
        w.write_record([
            snr_label(row.snr_db),
            row.algorithm.to_string(),
            row.phase.to_string(),
            row.trials.to_string(),
            fmt(row.erle_mean_db),
            fmt(row.erle_std_db),
            fmt(row.mismatch_mean_db),
            fmt(row.mismatch_std_db),
            fmt(row.oracle_erle_mean_db),
            fmt(row.oracle_erle_std_db),
        ])?;
    }
    w.flush().map_err(|source| Error::Output {
        path: path.clone(),
        source,
    })?;
    files.push(path);

    let path = out_dir.join("plot.py");
    fs::write(&path, PLOT_SCRIPT).map_err(|source| Error::Output {
        path: path.clone(),
        source,
    })?;
    files.push(path);
    Ok(files)
}

/// Runs `n_trials` trials at every SNR and writes all outputs to `out_dir`.
/// Each trial's trace is written as soon as it finishes.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    models: &Models,
    out_dir: &Path,
) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let block_s = cfg.filter_length() as f64 / cfg.scenario.sample_rate;
    let jobs: Vec<(f64, usize)> = cfg
        .snr_db
        .iter()
        .flat_map(|&s| (0..cfg.n_trials).map(move |t| (s, t)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(snr, t)| {
            let result = run_trial(cfg, models, t, snr)?;
            let path = trial_path(out_dir, snr, t);
            write_trial(&path, &result, block_s)?;
            log::info!("trial {t} at {snr} dB done");
            Ok(result)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mismatch, summary) = aggregate(cfg, &results);
    let mut files: Vec<PathBuf> = jobs
        .iter()
        .map(|&(s, t)| trial_path(out_dir, s, t))
        .collect();
    files.extend(write_aggregates(
        out_dir, cfg, &results, &mismatch, &summary,
    )?);
    Ok(ExperimentOutput {
        results,
        mismatch,
        summary,
        files,
    })
}

const PLOT_SCRIPT: &str = r##"#!/usr/bin/env python3
"""Renders the mismatch traces and the per-SNR summary next to this script."""
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

here = Path(__file__).resolve().parent
trace = pd.read_csv(here / "aggregate_mismatch.csv", comment="#")
summary = pd.read_csv(here / "aggregate_summary.csv", comment="#")

for snr, group in trace.groupby("snr_db"):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for alg, g in group.groupby("algorithm", sort=False):
        ax.plot(g["time_s"], g["mean_db"], label=alg)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("system mismatch [dB]")
    ax.set_title(f"SNR {snr} dB")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(here / f"mismatch_snr_{snr}.pdf")

fig, axes = plt.subplots(2, 2, figsize=(8, 6), sharex=True)
for row, metric in enumerate(["erle", "mismatch"]):
    for col, phase in enumerate(["convergence", "steady_state"]):
        ax = axes[row][col]
        sel = summary[summary["phase"] == phase]
        for alg, g in sel.groupby("algorithm", sort=False):
            ax.errorbar(g["snr_db"], g[f"{metric}_mean_db"], yerr=g[f"{metric}_std_db"],
                        marker="o", capsize=3, label=alg)
        if metric == "erle":
            g = sel.drop_duplicates("snr_db")
            ax.plot(g["snr_db"], g["oracle_erle_mean_db"], "k--", label="truncated truth")
        ax.set_title(f"{metric} ({phase.replace('_', ' ')})")
        ax.set_xlabel("SNR [dB]")
        ax.set_ylabel("[dB]")
        ax.grid(True, alpha=0.3)
axes[0][0].legend()
fig.tight_layout()
fig.savefig(here / "summary.pdf")
"##;
