use rayon::prelude::*;

use crate::error::{ensure_len, Error, Result};
use crate::scalar::Real;
use crate::signal::{stack_spectra, BlockFft, Complex, FirDims, FirStack};
use crate::subspace::SubspaceUnion;

type PairSpectra<T> = Vec<Vec<Complex<T>>>;

/// Frequency-domain offsets and scaled leading eigenvectors of every model,
/// each reshaped into a MIMO FIR and transformed once.
#[derive(Debug, Clone)]
pub struct EigenfilterBank<T: Real> {
    dims: FirDims,
    fft: BlockFft<T>,
    offsets: Vec<PairSpectra<T>>,
    eigenfilters: Vec<Vec<PairSpectra<T>>>,
}

impl<T: Real> EigenfilterBank<T> {
    /// Uses the `k` dominant eigenfilters of every model.
    pub fn new(union: &SubspaceUnion<T>, k: usize) -> Result<Self> {
        Self::with_counts(union, &vec![k; union.num_models()])
    }

    /// Uses `counts[i]` eigenfilters for model `i`.
    pub fn with_counts(union: &SubspaceUnion<T>, counts: &[usize]) -> Result<Self> {
        ensure_len("eigenfilter counts", union.num_models(), counts.len())?;
        let dims = union.dims;
        for (i, (m, &k)) in union.models.iter().zip(counts).enumerate() {
            if k > m.dim() {
                return Err(Error::Config(format!(
                    "model {i} has dimension {} but {k} eigenfilters were requested",
                    m.dim()
                )));
            }
        }
        let fft = BlockFft::new(dims.taps)?;
        let built = union
            .models
            .par_iter()
            .zip(counts)
            .map(|(m, &k)| {
                let offset = stack_spectra(&fft, &FirStack::from_vec(dims, m.offset.clone())?)?;
                let eig = m.basis[..k]
                    .iter()
                    .zip(&m.eigenvalues)
                    .map(|(v, &d)| {
                        let s = d.sqrt();
                        let scaled = v.iter().map(|&x| x * s).collect();
                        stack_spectra(&fft, &FirStack::from_vec(dims, scaled)?)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((offset, eig))
            })
            .collect::<Result<Vec<_>>>()?;
        let (offsets, eigenfilters) = built.into_iter().unzip();
        Ok(Self {
            dims,
            fft,
            offsets,
            eigenfilters,
        })
    }

    pub fn dims(&self) -> FirDims {
        self.dims
    }

    pub fn fft(&self) -> &BlockFft<T> {
        &self.fft
    }

    pub fn num_models(&self) -> usize {
        self.offsets.len()
    }

    /// Spectra of the offset filters of model `i`, ordered `p * Q + q`.
    pub fn offset(&self, i: usize) -> &[Vec<Complex<T>>] {
        &self.offsets[i]
    }

    /// Eigenfilter spectra of model `i`, one entry per eigenfilter.
    pub fn eigenfilters(&self, i: usize) -> &[PairSpectra<T>] {
        &self.eigenfilters[i]
    }
}
