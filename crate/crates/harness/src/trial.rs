//! One Monte Carlo trial: a fresh source position, excitation and noise,
//! identified by every configured algorithm on identical data.

use lpud_core::fdaf::{AdaptiveFilter, Fdaf};
use lpud_core::lpud::{Lpud, NoiseModel};
use lpud_core::rir::{sample_source_position, simulate_system, Point};
use lpud_core::seed::{purpose, sub_seed};
use lpud_core::signal::{
    apply_fir_stack, generate_excitation, BlockStream, FirStack, MultichannelSignal,
};
use serde::Serialize;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::Result;
use crate::metrics::{erle, halves, mismatch_average, system_mismatch};
use crate::models::Models;
use crate::observe::{simulate_observation, Observation};

/// Relative variance assumed by the evidence when the observation is noiseless.
const NOISELESS_VARIANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialSeeds {
    pub position: u64,
    pub excitation: u64,
    pub noise: u64,
}

impl TrialSeeds {
    /// Test positions come from their own stream, never the training one.
    pub fn derive(master: u64, trial: usize) -> Self {
        let t = trial as u64;
        Self {
            position: sub_seed(master, purpose::TEST_POSITION, t),
            excitation: sub_seed(master, purpose::EXCITATION, t),
            noise: sub_seed(master, purpose::NOISE, t),
        }
    }
}

/// Signals shared by all algorithms of a trial.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub source: Point,
    /// Complete simulated system.
    pub system: FirStack<f64>,
    /// Its first `L` taps, the target of identification.
    pub truth: FirStack<f64>,
    pub x: MultichannelSignal<f64>,
    pub observation: Observation<f64>,
}

impl TrialData {
    pub fn generate(cfg: &ExperimentConfig, seeds: &TrialSeeds, snr_db: f64) -> Result<Self> {
        let scenario = &cfg.scenario;
        let source = sample_source_position(&scenario.source_sector, seeds.position);
        let system = simulate_system::<f64>(scenario, &source)?;
        let truth = system.truncated(cfg.filter_length())?;
        let x = generate_excitation(
            &cfg.excitation,
            cfg.duration_s,
            scenario.sample_rate,
            seeds.excitation,
        )?;
        let observation = simulate_observation(&system, &x, snr_db, seeds.noise)?;
        Ok(Self {
            source,
            system,
            truth,
            x,
            observation,
        })
    }
}

/// Outcome of one algorithm in one trial. Metrics are linear; the two
/// entries of each pair are the convergence and steady-state halves.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmRun {
    pub algorithm: Algorithm,
    /// Mismatch after each block's update.
    pub mismatch: Vec<f64>,
    /// Selected model per block; empty for the baseline.
    pub selected: Vec<usize>,
    pub erle: [f64; 2],
    pub mismatch_avg: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub snr_db: f64,
    pub seeds: TrialSeeds,
    pub source: Point,
    pub noise_variance: f64,
    pub runs: Vec<AlgorithmRun>,
    /// ERLE of the truncated true system, per half.
    pub oracle_erle: [f64; 2],
}

impl TrialResult {
    pub fn run(&self, alg: Algorithm) -> Option<&AlgorithmRun> {
        self.runs.iter().find(|r| r.algorithm == alg)
    }

    pub fn blocks(&self) -> usize {
        self.runs.first().map_or(0, |r| r.mismatch.len())
    }
}

enum Engine {
    Plain(Fdaf<f64>),
    Projected(Box<Lpud<f64, Fdaf<f64>>>),
}

struct Identification {
    mismatch: Vec<f64>,
    selected: Vec<usize>,
    estimate: Vec<Vec<f64>>,
}

fn identify(
    alg: Algorithm,
    cfg: &ExperimentConfig,
    models: &Models,
    data: &TrialData,
) -> Result<Identification> {
    let dims = data.truth.dims();
    let l = dims.taps;
    let blocks = cfg.num_blocks();
    let fdaf = Fdaf::new(dims, cfg.filter)?;
    let fft = fdaf.fft().clone();
    let mut engine = match alg {
        Algorithm::Baseline => Engine::Plain(fdaf),
        Algorithm::Gpud | Algorithm::Lpud => {
            let p = models.get(alg)?;
            let power = data.observation.d.mean_power();
            let variance = cfg
                .model
                .noise_variance
                .unwrap_or(data.observation.noise_variance)
                .max(NOISELESS_VARIANCE * power);
            let noise = NoiseModel::isotropic(variance, dims.outputs)?;
            Engine::Projected(Box::new(Lpud::new(
                fdaf,
                p.union.clone(),
                p.bank.clone(),
                noise,
                cfg.model.evidence,
                cfg.model.forgetting,
            )?))
        }
    };
    let mut h = FirStack::zeros(dims);
    let mut stream = BlockStream::new(dims.inputs, l);
    let mut out = Identification {
        mismatch: Vec::with_capacity(blocks),
        selected: Vec::new(),
        estimate: vec![Vec::with_capacity(blocks * l); dims.outputs],
    };
    for m in 0..blocks {
        stream.advance(&data.x.block(m * l, l))?;
        let spectra = stream.spectra(&fft)?;
        let observed = data.observation.y.block(m * l, l);
        let estimate = match &mut engine {
            Engine::Plain(f) => {
                let update = f.step(&spectra, &observed, &h)?;
                h.add_scaled(1.0, &update.delta)?;
                update.estimate
            }
            Engine::Projected(lpud) => {
                let report = lpud.step(&mut h, &spectra, &observed)?;
                out.selected.push(report.selected);
                report.estimate
            }
        };
        for (acc, e) in out.estimate.iter_mut().zip(estimate) {
            acc.extend(e);
        }
        out.mismatch.push(system_mismatch(&data.truth, &h)?);
    }
    Ok(out)
}

fn sample_halves(blocks: usize, l: usize) -> [std::ops::Range<usize>; 2] {
    halves(blocks).map(|r| r.start * l..r.end * l)
}

/// Runs every configured algorithm on trial `trial` at `snr_db`.
pub fn run_trial(
    cfg: &ExperimentConfig,
    models: &Models,
    trial: usize,
    snr_db: f64,
) -> Result<TrialResult> {
    let seeds = TrialSeeds::derive(cfg.seed, trial);
    let data = TrialData::generate(cfg, &seeds, snr_db)?;
    run_trial_on(cfg, models, trial, snr_db, seeds, &data)
}

/// Runs every configured algorithm on prepared trial data.
pub fn run_trial_on(
    cfg: &ExperimentConfig,
    models: &Models,
    trial: usize,
    snr_db: f64,
    seeds: TrialSeeds,
    data: &TrialData,
) -> Result<TrialResult> {
    let blocks = cfg.num_blocks();
    let l = cfg.filter_length();
    let sample_ranges = sample_halves(blocks, l);
    let block_ranges = halves(blocks);
    let d = data.observation.d.channels();

    let mut runs = Vec::with_capacity(cfg.algorithms.len());
    for &alg in &cfg.algorithms {
        let id = identify(alg, cfg, models, data)?;
        let erle = [
            erle(d, &id.estimate, sample_ranges[0].clone())?,
            erle(d, &id.estimate, sample_ranges[1].clone())?,
        ];
        let mismatch_avg = [
            mismatch_average(&id.mismatch, block_ranges[0].clone())?,
            mismatch_average(&id.mismatch, block_ranges[1].clone())?,
        ];
        runs.push(AlgorithmRun {
            algorithm: alg,
            mismatch: id.mismatch,
            selected: id.selected,
            erle,
            mismatch_avg,
        });
    }

    let oracle = apply_fir_stack(&data.truth, &data.x)?;
    let oracle_erle = [
        erle(d, oracle.channels(), sample_ranges[0].clone())?,
        erle(d, oracle.channels(), sample_ranges[1].clone())?,
    ];
    Ok(TrialResult {
        trial,
        snr_db,
        seeds,
        source: data.source,
        noise_variance: data.observation.noise_variance,
        runs,
        oracle_erle,
    })
}
