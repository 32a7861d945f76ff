use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::kmeans_cluster;
use super::model::{fit_local_model, AffineSubspaceModel};
use crate::error::{Error, Result};
use crate::io::{check_format, read_f64, read_json, write_f64, write_json};
use crate::rir::RirDataset;
use crate::scalar::Real;
use crate::signal::{FirDims, FirStack};

const FORMAT: (&str, u32) = ("lpud-subspace-union", 1);

/// Learning parameters for [`learn_union`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnionConfig {
    /// Number of clusters I.
    pub clusters: usize,
    /// Subspace dimension requested for every cluster.
    pub dim: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Lower each cluster's dimension to `min(G_i - 1, R)` instead of
    /// failing when a cluster is too small.
    #[serde(default)]
    pub clamp_dim: bool,
}

impl UnionConfig {
    pub fn new(clusters: usize, dim: usize, seed: u64) -> Self {
        Self {
            clusters,
            dim,
            max_iters: 100,
            seed,
            clamp_dim: true,
        }
    }
}

/// I affine subspaces sharing one parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceUnion<T> {
    pub dims: FirDims,
    pub models: Vec<AffineSubspaceModel<T>>,
    /// Training cluster index per sample.
    pub assignments: Vec<usize>,
    pub seed: u64,
    pub kmeans_iterations: usize,
}

/// Clusters the dataset and fits one local model per cluster.
pub fn learn_union<T: Real>(
    dataset: &RirDataset<T>,
    cfg: &UnionConfig,
) -> Result<SubspaceUnion<T>> {
    learn_union_from_samples(&dataset.samples, cfg)
}

pub fn learn_union_from_samples<T: Real>(
    samples: &[FirStack<T>],
    cfg: &UnionConfig,
) -> Result<SubspaceUnion<T>> {
    let dims = samples
        .first()
        .ok_or_else(|| Error::InsufficientData("empty training set".into()))?
        .dims();
    if samples.iter().any(|s| s.dims() != dims) {
        return Err(Error::Config("training samples differ in shape".into()));
    }
    let clustering = kmeans_cluster(samples, cfg.clusters, cfg.seed, cfg.max_iters)?;
    let models = (0..cfg.clusters)
        .into_par_iter()
        .map(|i| {
            let members: Vec<&[T]> = clustering
                .members(i)
                .into_iter()
                .map(|g| samples[g].as_slice())
                .collect();
            let dim = if cfg.clamp_dim {
                cfg.dim.min(members.len().saturating_sub(1)).min(dims.len())
            } else {
                cfg.dim
            };
            if members.len() == 1 && cfg.clamp_dim {
                // A point cluster is a zero-dimensional affine subspace.
                return AffineSubspaceModel::new(members[0].to_vec(), Vec::new(), Vec::new(), 1);
            }
            fit_local_model(&members, dim)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SubspaceUnion {
        dims,
        models,
        assignments: clustering.assignments,
        seed: cfg.seed,
        kmeans_iterations: clustering.iterations,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelEntry {
    dim: usize,
    cluster_size: usize,
    offset_file: String,
    basis_file: String,
    eigenvalues_file: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    version: u32,
    num_models: usize,
    param_dim: usize,
    inputs: usize,
    taps: usize,
    outputs: usize,
    seed: u64,
    kmeans_iterations: usize,
    models: Vec<ModelEntry>,
    assignments: Vec<usize>,
}

impl<T: Real> SubspaceUnion<T> {
    pub fn num_models(&self) -> usize {
        self.models.len()
    }

    pub fn param_dim(&self) -> usize {
        self.dims.len()
    }

    /// Writes `manifest.json` plus, per model, the offset (R values), the
    /// basis (D columns of R values) and the eigenvalues as raw
    /// little-endian float64 files.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut entries = Vec::with_capacity(self.models.len());
        for (i, m) in self.models.iter().enumerate() {
            let e = ModelEntry {
                dim: m.dim(),
                cluster_size: m.cluster_size,
                offset_file: format!("model_{i:03}_offset.f64"),
                basis_file: format!("model_{i:03}_basis.f64"),
                eigenvalues_file: format!("model_{i:03}_eigenvalues.f64"),
            };
            write_f64(&dir.join(&e.offset_file), m.offset.iter().copied())?;
            write_f64(&dir.join(&e.basis_file), m.basis.iter().flatten().copied())?;
            write_f64(
                &dir.join(&e.eigenvalues_file),
                m.eigenvalues.iter().copied(),
            )?;
            entries.push(e);
        }
        write_json(
            &dir.join("manifest.json"),
            &Manifest {
                format: FORMAT.0.into(),
                version: FORMAT.1,
                num_models: self.models.len(),
                param_dim: self.dims.len(),
                inputs: self.dims.inputs,
                taps: self.dims.taps,
                outputs: self.dims.outputs,
                seed: self.seed,
                kmeans_iterations: self.kmeans_iterations,
                models: entries,
                assignments: self.assignments.clone(),
            },
        )
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let m: Manifest = read_json(&path)?;
        check_format(&path, &m.format, m.version, FORMAT)?;
        let dims = FirDims::new(m.inputs, m.taps, m.outputs)?;
        let r = dims.len();
        if r != m.param_dim || m.models.len() != m.num_models {
            return Err(Error::Store {
                path,
                reason: "inconsistent manifest".into(),
            });
        }
        let models = m
            .models
            .iter()
            .map(|e| {
                let offset = read_f64(&dir.join(&e.offset_file), r)?;
                let flat = read_f64::<T>(&dir.join(&e.basis_file), r * e.dim)?;
                let basis = flat.chunks_exact(r.max(1)).map(<[T]>::to_vec).collect();
                let eigenvalues = read_f64(&dir.join(&e.eigenvalues_file), e.dim)?;
                AffineSubspaceModel::new(offset, basis, eigenvalues, e.cluster_size)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            dims,
            models,
            assignments: m.assignments,
            seed: m.seed,
            kmeans_iterations: m.kmeans_iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, sq_dist};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn stacks(rows: Vec<Vec<f64>>, taps: usize) -> Vec<FirStack<f64>> {
        let q = rows[0].len() / taps;
        let dims = FirDims::new(1, taps, q).unwrap();
        rows.into_iter()
            .map(|r| FirStack::from_vec(dims, r).unwrap())
            .collect()
    }

    /// Two blobs in R⁸ separated by 100× their spread, first half blob A.
    fn two_blobs(per_blob: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = crate::seed::rng(seed);
        let mut rows = Vec::new();
        for center in [0.0, 100.0] {
            for _ in 0..per_blob {
                rows.push(
                    (0..8)
                        .map(|k| {
                            let c = if k % 2 == 0 { center } else { -center };
                            c + rng.sample::<f64, _>(StandardNormal)
                        })
                        .collect(),
                );
            }
        }
        rows
    }

    #[test]
    fn full_rank_hull_reconstructs_training_samples() {
        let mut rng = crate::seed::rng(3);
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..16).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let samples = stacks(rows, 8);
        let u = learn_union_from_samples(&samples, &UnionConfig::new(1, 5, 0)).unwrap();
        for s in &samples {
            let p = u.models[0].project(s.as_slice()).unwrap();
            assert!(sq_dist(&p, s.as_slice()).sqrt() < 1e-8);
        }
    }

    #[test]
    fn blob_means_and_reconstruction_dominance() {
        let rows = two_blobs(30, 8);
        let mean_a: Vec<f64> = (0..8)
            .map(|k| rows[..30].iter().map(|r| r[k]).sum::<f64>() / 30.0)
            .collect();
        let mean_b: Vec<f64> = (0..8)
            .map(|k| rows[30..].iter().map(|r| r[k]).sum::<f64>() / 30.0)
            .collect();
        let samples = stacks(rows, 4);
        let u = learn_union_from_samples(&samples, &UnionConfig::new(2, 3, 5)).unwrap();
        let a = u.assignments[0];
        let b = 1 - a;
        assert!(u.assignments[..30].iter().all(|&x| x == a));
        assert!(u.assignments[30..].iter().all(|&x| x == b));
        for (got, want) in [
            (&u.models[a].offset, &mean_a),
            (&u.models[b].offset, &mean_b),
        ] {
            for (x, y) in got.iter().zip(want) {
                assert!((x - y).abs() < 1e-6);
            }
        }
        for (g, s) in samples.iter().enumerate() {
            let own = u.assignments[g];
            let r_own = u.models[own].residual_norm(s.as_slice()).unwrap();
            let r_other = u.models[1 - own].residual_norm(s.as_slice()).unwrap();
            assert!(r_own <= r_other);
        }
    }

    #[test]
    fn global_model_equals_single_fit() {
        let rows = two_blobs(10, 2);
        let samples = stacks(rows.clone(), 4);
        let u = learn_union_from_samples(&samples, &UnionConfig::new(1, 4, 9)).unwrap();
        let direct = fit_local_model(&rows, 4).unwrap();
        assert_eq!(u.models[0], direct);
        assert!(u.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn dimension_clamp() {
        let rows = two_blobs(3, 1);
        let samples = stacks(rows, 4);
        let mut cfg = UnionConfig::new(2, 6, 1);
        let u = learn_union_from_samples(&samples, &cfg).unwrap();
        assert!(u.models.iter().all(|m| m.dim() == 2));
        cfg.clamp_dim = false;
        assert!(matches!(
            learn_union_from_samples(&samples, &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let samples = stacks(two_blobs(12, 4), 2);
        let u = learn_union_from_samples(&samples, &UnionConfig::new(3, 4, 2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        u.save(dir.path()).unwrap();
        let back = SubspaceUnion::<f64>::load(dir.path()).unwrap();
        assert_eq!(back, u);
        fs::write(dir.path().join("model_001_basis.f64"), [0u8; 16]).unwrap();
        assert!(matches!(
            SubspaceUnion::<f64>::load(dir.path()),
            Err(Error::Store { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn projector_properties(seed in 0u64..1000, dim in 1usize..6) {
            let mut rng = crate::seed::rng(seed);
            let rows: Vec<Vec<f64>> = (0..12)
                .map(|_| (0..32).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let m = fit_local_model(&rows, dim).unwrap();
            for i in 0..dim {
                for j in 0..dim {
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((dot(&m.basis[i], &m.basis[j]) - want).abs() <= 1e-10);
                }
            }
            prop_assert!(m.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            let v: Vec<f64> = (0..32).map(|_| rng.random_range(-3.0..3.0)).collect();
            let p = m.project(&v).unwrap();
            let pp = m.project(&p).unwrap();
            prop_assert!(sq_dist(&p, &pp).sqrt() <= 1e-10);
            let resid: Vec<f64> = v.iter().zip(&p).map(|(a, b)| a - b).collect();
            for b in &m.basis {
                prop_assert!(dot(b, &resid).abs() <= 1e-10);
            }
            let u = m.project_update(&v).unwrap();
            let uu = m.project_update(&u).unwrap();
            prop_assert!(sq_dist(&u, &uu).sqrt() <= 1e-12);
        }
    }
}
