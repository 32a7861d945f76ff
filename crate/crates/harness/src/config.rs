use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use lpud_core::fdaf::FdafParams;
use lpud_core::lpud::{EvidenceForm, DEFAULT_FORGETTING};
use lpud_core::rir::RoomScenario;
use lpud_core::signal::Excitation;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identification algorithms compared in a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// The unconstrained frequency-domain adaptive filter.
    Baseline,
    /// Updates projected onto one global affine subspace.
    Gpud,
    /// Updates projected onto the best of several local affine subspaces.
    Lpud,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Baseline, Algorithm::Gpud, Algorithm::Lpud];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Baseline => "baseline",
            Algorithm::Gpud => "gpud",
            Algorithm::Lpud => "lpud",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Training set drawn from the scenario's source sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetParams {
    /// Number of simulated source positions G.
    pub num_samples: usize,
    /// Adaptive filter length L; training responses are cut to this length.
    pub filter_length: usize,
}

fn default_forgetting() -> f64 {
    DEFAULT_FORGETTING
}

fn default_kmeans_iters() -> usize {
    100
}

/// Subspace union and evidence settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Number of local models I.
    pub clusters: usize,
    /// Dimension D_i of every local model.
    pub local_dim: usize,
    /// Dimension of the single global model.
    pub global_dim: usize,
    /// Eigenfilters K_i used in the evidence.
    pub eigenfilters: usize,
    /// Evidence averaging factor λ.
    #[serde(default = "default_forgetting")]
    pub forgetting: f64,
    #[serde(default = "default_kmeans_iters")]
    pub kmeans_max_iters: usize,
    #[serde(default)]
    pub evidence: EvidenceForm,
    /// Evidence noise variance; the true per-trial variance when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
}

/// Everything that determines an experiment's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: RoomScenario,
    pub dataset: DatasetParams,
    pub model: ModelParams,
    pub filter: FdafParams,
    pub excitation: Excitation,
    pub duration_s: f64,
    pub snr_db: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub n_trials: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Laptop-sized setup: 1024-tap rooms, 512-tap filters, 500 training
    /// responses, 8 local models of dimension 20, 10 trials of 10 s noise.
    pub fn desk() -> Self {
        Self {
            scenario: RoomScenario::reference(1024),
            dataset: DatasetParams {
                num_samples: 500,
                filter_length: 512,
            },
            model: ModelParams {
                clusters: 8,
                local_dim: 20,
                global_dim: 55,
                eigenfilters: 5,
                forgetting: DEFAULT_FORGETTING,
                kmeans_max_iters: default_kmeans_iters(),
                evidence: EvidenceForm::Full,
                noise_variance: None,
            },
            filter: FdafParams::default(),
            excitation: Excitation::Wgn {},
            duration_s: 10.0,
            snr_db: vec![-5.0],
            algorithms: Algorithm::ALL.to_vec(),
            n_trials: 10,
            seed: 1,
            output_dir: PathBuf::from("out/desk"),
        }
    }

    /// Published-scale setup: 4096-tap rooms, 1024-tap filters, 5000
    /// training responses, 40 local models of dimension 50 and a global
    /// model of dimension 550, 50 trials.
    pub fn full() -> Self {
        Self {
            scenario: RoomScenario::reference(4096),
            dataset: DatasetParams {
                num_samples: 5000,
                filter_length: 1024,
            },
            model: ModelParams {
                clusters: 40,
                local_dim: 50,
                global_dim: 550,
                eigenfilters: 5,
                forgetting: DEFAULT_FORGETTING,
                kmeans_max_iters: default_kmeans_iters(),
                evidence: EvidenceForm::Full,
                noise_variance: None,
            },
            filter: FdafParams::default(),
            excitation: Excitation::Wgn {},
            duration_s: 10.0,
            snr_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            algorithms: Algorithm::ALL.to_vec(),
            n_trials: 50,
            seed: 1,
            output_dir: PathBuf::from("out/full"),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "full" => Ok(Self::full()),
            _ => Err(Error::Config(format!(
                "unknown preset {name:?}, expected \"desk\" or \"full\""
            ))),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn filter_length(&self) -> usize {
        self.dataset.filter_length
    }

    pub fn num_samples(&self) -> usize {
        (self.duration_s * self.scenario.sample_rate).round() as usize
    }

    /// Number of complete blocks M processed per trial.
    pub fn num_blocks(&self) -> usize {
        self.num_samples() / self.filter_length()
    }

    pub fn uses(&self, alg: Algorithm) -> bool {
        self.algorithms.contains(&alg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.filter.validate()?;
        let l = self.dataset.filter_length;
        if l == 0 || l > self.scenario.rir_length {
            return Err(Error::Config(format!(
                "filter length {l} must lie in 1..={}",
                self.scenario.rir_length
            )));
        }
        if self.dataset.num_samples == 0 {
            return Err(Error::Config(
                "the training set needs at least one sample".into(),
            ));
        }
        if !(self.duration_s > 0.0) || self.num_blocks() < 2 {
            return Err(Error::Config(format!(
                "{} s at {} Hz is shorter than two blocks of {l}",
                self.duration_s, self.scenario.sample_rate
            )));
        }
        if self.num_samples() < self.scenario.rir_length {
            return Err(Error::Config(format!(
                "the excitation must be at least {} samples long",
                self.scenario.rir_length
            )));
        }
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be at least 1".into()));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| s.is_nan()) {
            return Err(Error::Config(
                "snr_db needs at least one numeric value".into(),
            ));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithm selected".into()));
        }
        let mut seen = HashSet::new();
        if !self.algorithms.iter().all(|a| seen.insert(*a)) {
            return Err(Error::Config("algorithms must not repeat".into()));
        }
        let m = &self.model;
        if self.uses(Algorithm::Lpud) && (m.clusters == 0 || m.local_dim == 0) {
            return Err(Error::Config(
                "local models need I >= 1 and D_i >= 1".into(),
            ));
        }
        if self.uses(Algorithm::Gpud) && m.global_dim == 0 {
            return Err(Error::Config(
                "the global model needs a positive dimension".into(),
            ));
        }
        let projected = self.uses(Algorithm::Lpud) || self.uses(Algorithm::Gpud);
        if projected {
            let dim = match (self.uses(Algorithm::Lpud), self.uses(Algorithm::Gpud)) {
                (true, true) => m.local_dim.min(m.global_dim),
                (true, false) => m.local_dim,
                _ => m.global_dim,
            };
            if m.eigenfilters > dim {
                return Err(Error::Config(format!(
                    "{} eigenfilters exceed the subspace dimension {dim}",
                    m.eigenfilters
                )));
            }
        }
        if !(m.forgetting > 0.0 && m.forgetting < 1.0) {
            return Err(Error::Config(format!(
                "evidence forgetting factor must lie in (0, 1), got {}",
                m.forgetting
            )));
        }
        if let Some(v) = m.noise_variance {
            if !(v > 0.0) {
                return Err(Error::Config(format!(
                    "noise variance must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}
