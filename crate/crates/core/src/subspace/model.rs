use crate::error::{ensure_len, Error, Result};
use crate::linalg::{axpy, dot};
use crate::scalar::Real;

use super::pca::{left_singular, normalize_sign, orthonormal_completion};

/// One affine subspace `{ offset + basis · β }` with the prior variances
/// along its basis directions.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspaceModel<T> {
    /// Cluster mean.
    pub offset: Vec<T>,
    /// Orthonormal columns, each of length R, ordered by eigenvalue.
    pub basis: Vec<Vec<T>>,
    /// Sample-covariance eigenvalues, descending.
    pub eigenvalues: Vec<T>,
    pub cluster_size: usize,
}

impl<T: Real> AffineSubspaceModel<T> {
    pub fn new(
        offset: Vec<T>,
        basis: Vec<Vec<T>>,
        eigenvalues: Vec<T>,
        cluster_size: usize,
    ) -> Result<Self> {
        let r = offset.len();
        ensure_len("eigenvalue count", basis.len(), eigenvalues.len())?;
        for b in &basis {
            ensure_len("basis column", r, b.len())?;
        }
        if eigenvalues.iter().any(|&d| !(d >= T::zero()))
            || eigenvalues.windows(2).any(|w| w[0] < w[1])
        {
            return Err(Error::Config(
                "eigenvalues must be nonnegative and descending".into(),
            ));
        }
        Ok(Self {
            offset,
            basis,
            eigenvalues,
            cluster_size,
        })
    }

    /// Parameter-space dimension R.
    #[inline]
    pub fn ambient_dim(&self) -> usize {
        self.offset.len()
    }

    /// Subspace dimension D.
    #[inline]
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Orthogonal projection of `h` onto the affine subspace,
    /// `offset + V Vᵀ (h − offset)`.
    pub fn project(&self, h: &[T]) -> Result<Vec<T>> {
        ensure_len("projection input", self.ambient_dim(), h.len())?;
        let centered: Vec<T> = h.iter().zip(&self.offset).map(|(&a, &b)| a - b).collect();
        let mut out = self.offset.clone();
        for v in &self.basis {
            axpy(dot(v, &centered), v, &mut out);
        }
        Ok(out)
    }

    /// Linear projection `V Vᵀ Δ` onto the direction space (no offset).
    pub fn project_update(&self, delta: &[T]) -> Result<Vec<T>> {
        ensure_len("projection input", self.ambient_dim(), delta.len())?;
        let mut out = vec![T::zero(); delta.len()];
        for v in &self.basis {
            axpy(dot(v, delta), v, &mut out);
        }
        Ok(out)
    }

    /// Euclidean distance from `h` to the affine subspace.
    pub fn residual_norm(&self, h: &[T]) -> Result<T> {
        let p = self.project(h)?;
        Ok(p.iter()
            .zip(h)
            .fold(T::zero(), |a, (&x, &y)| a + (x - y) * (x - y))
            .sqrt())
    }
}

/// Fits mean and leading principal directions of a cluster.
///
/// The basis comes from the thin SVD of the centered data; eigenvalues are
/// `σ² / (G − 1)`. Directions with zero variance are filled with an
/// orthonormal completion so the basis always has `dim` columns.
pub fn fit_local_model<T: Real, S: AsRef<[T]>>(
    samples: &[S],
    dim: usize,
) -> Result<AffineSubspaceModel<T>> {
    let g = samples.len();
    if g < 2 {
        return Err(Error::InsufficientData(format!(
            "a cluster needs at least two samples, got {g}"
        )));
    }
    let r = samples[0].as_ref().len();
    if samples.iter().any(|s| s.as_ref().len() != r) {
        return Err(Error::Config("samples differ in dimension".into()));
    }
    if dim > (g - 1).min(r) {
        return Err(Error::Config(format!(
            "subspace dimension {dim} exceeds min(G - 1, R) = {}",
            (g - 1).min(r)
        )));
    }
    // Shifted accumulation keeps the mean of identical samples exact.
    let first = samples[0].as_ref();
    let inv_g = T::one() / T::of_usize(g);
    let mut offset = first.to_vec();
    let mut shift = vec![T::zero(); r];
    for s in samples {
        for ((acc, &v), &f) in shift.iter_mut().zip(s.as_ref()).zip(first) {
            *acc = *acc + (v - f);
        }
    }
    for (o, s) in offset.iter_mut().zip(&shift) {
        *o = *o + *s * inv_g;
    }

    let scale = samples
        .iter()
        .map(|s| dot(s.as_ref(), s.as_ref()).sqrt())
        .fold(T::zero(), T::max);
    let zero_tol = scale * T::epsilon() * T::of_usize(64 * g);
    let centered: Vec<Vec<T>> = samples
        .iter()
        .map(|s| {
            s.as_ref()
                .iter()
                .zip(&offset)
                .map(|(&a, &b)| a - b)
                .collect()
        })
        .collect();
    let (mut basis, sv) = left_singular(centered, zero_tol);
    basis.truncate(dim);
    let denom = T::of_usize(g - 1);
    let mut eigenvalues: Vec<T> = sv.iter().take(dim).map(|&s| s * s / denom).collect();
    eigenvalues.resize(dim, T::zero());
    orthonormal_completion(&mut basis, dim, r);
    for v in &mut basis {
        normalize_sign(v);
    }
    AffineSubspaceModel::new(offset, basis, eigenvalues, g)
}
