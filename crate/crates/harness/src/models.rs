//! Training data and learned subspace unions for the projected algorithms.

use std::path::Path;
use std::sync::Arc;

use lpud_core::lpud::EigenfilterBank;
use lpud_core::rir::{generate_dataset, RirDataset};
use lpud_core::seed::{purpose, sub_seed};
use lpud_core::subspace::{learn_union, SubspaceUnion, UnionConfig};

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{Error, Result};

const LOCAL_DIR: &str = "local";
const GLOBAL_DIR: &str = "global";

/// A union together with the eigenfilters its evidence needs.
#[derive(Debug, Clone)]
pub struct Projector {
    pub union: Arc<SubspaceUnion<f64>>,
    pub bank: Arc<EigenfilterBank<f64>>,
}

impl Projector {
    /// Uses `eigenfilters` per model, or the model dimension when a small
    /// cluster left it lower.
    pub fn new(union: SubspaceUnion<f64>, eigenfilters: usize) -> Result<Self> {
        let counts: Vec<usize> = union
            .models
            .iter()
            .map(|m| eigenfilters.min(m.dim()))
            .collect();
        let bank = EigenfilterBank::with_counts(&union, &counts)?;
        Ok(Self {
            union: Arc::new(union),
            bank: Arc::new(bank),
        })
    }
}

/// Models required by the configured algorithms.
#[derive(Debug, Clone, Default)]
pub struct Models {
    pub local: Option<Projector>,
    pub global: Option<Projector>,
}

pub fn dataset_seed(cfg: &ExperimentConfig) -> u64 {
    sub_seed(cfg.seed, purpose::DATASET, 0)
}

/// Simulates the training responses described by `cfg`.
pub fn simulate_dataset(cfg: &ExperimentConfig) -> Result<RirDataset<f64>> {
    Ok(generate_dataset(
        &cfg.scenario,
        cfg.dataset.num_samples,
        cfg.dataset.filter_length,
        dataset_seed(cfg),
    )?)
}

fn union_config(cfg: &ExperimentConfig, clusters: usize, dim: usize, index: u64) -> UnionConfig {
    UnionConfig {
        clusters,
        dim,
        max_iters: cfg.model.kmeans_max_iters,
        seed: sub_seed(cfg.seed, purpose::CLUSTERING, index),
        clamp_dim: true,
    }
}

impl Models {
    /// Learns the local and global unions for whichever of them `cfg` uses.
    pub fn learn(cfg: &ExperimentConfig, dataset: &RirDataset<f64>) -> Result<Self> {
        if dataset.dims.taps != cfg.filter_length() || dataset.scenario != cfg.scenario {
            return Err(Error::Config(
                "the training set was simulated for a different scenario or filter length".into(),
            ));
        }
        let m = &cfg.model;
        let local = if cfg.uses(Algorithm::Lpud) {
            let union = learn_union(dataset, &union_config(cfg, m.clusters, m.local_dim, 0))?;
            Some(Projector::new(union, m.eigenfilters)?)
        } else {
            None
        };
        let global = if cfg.uses(Algorithm::Gpud) {
            let union = learn_union(dataset, &union_config(cfg, 1, m.global_dim, 1))?;
            Some(Projector::new(union, m.eigenfilters)?)
        } else {
            None
        };
        for p in local.iter().chain(&global) {
            for (i, model) in p.union.models.iter().enumerate() {
                log::debug!(
                    "model {i}: {} training responses, dimension {}",
                    model.cluster_size,
                    model.dim()
                );
            }
        }
        Ok(Self { local, global })
    }

    /// Simulates the training set and learns the models in one go.
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self> {
        let dataset = simulate_dataset(cfg)?;
        Self::learn(cfg, &dataset)
    }

    pub fn get(&self, alg: Algorithm) -> Result<&Projector> {
        let p = match alg {
            Algorithm::Lpud => self.local.as_ref(),
            Algorithm::Gpud => self.global.as_ref(),
            Algorithm::Baseline => None,
        };
        p.ok_or_else(|| Error::Config(format!("no subspace model available for {alg}")))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        if let Some(p) = &self.local {
            p.union.save(&dir.join(LOCAL_DIR))?;
        }
        if let Some(p) = &self.global {
            p.union.save(&dir.join(GLOBAL_DIR))?;
        }
        Ok(())
    }

    /// Loads the unions `cfg` needs from a directory written by [`save`].
    ///
    /// [`save`]: Models::save
    pub fn load(cfg: &ExperimentConfig, dir: &Path) -> Result<Self> {
        let load = |name: &str, alg: Algorithm| -> Result<Option<Projector>> {
            if !cfg.uses(alg) {
                return Ok(None);
            }
            let union = SubspaceUnion::<f64>::load(&dir.join(name))?;
            if union.dims.taps != cfg.filter_length()
                || union.dims.outputs != cfg.scenario.num_mics()
            {
                return Err(Error::Config(format!(
                    "stored {alg} model has shape {:?}",
                    union.dims
                )));
            }
            Projector::new(union, cfg.model.eigenfilters).map(Some)
        };
        Ok(Self {
            local: load(LOCAL_DIR, Algorithm::Lpud)?,
            global: load(GLOBAL_DIR, Algorithm::Gpud)?,
        })
    }
}
