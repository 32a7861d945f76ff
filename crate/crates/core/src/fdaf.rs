//! Frequency-domain adaptive filtering with recursive PSD normalization and
//! dynamic regularization.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::scalar::Real;
use crate::signal::{BlockFft, BlockSpectra, Complex, FirDims, FirStack};

/// Lower bound on every power-spectrum bin.
pub const PSD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdafParams {
    /// Step size μ in (0, 1]; zero freezes the filter.
    pub step_size: f64,
    /// PSD averaging factor ν in [0, 1).
    pub psd_smoothing: f64,
    /// Peak of the dynamic regularization δ_max.
    pub reg_max: f64,
    /// Relative power scale δ_0 at which the regularization decays.
    pub reg_scale: f64,
}

impl Default for FdafParams {
    fn default() -> Self {
        Self {
            step_size: 1.0,
            psd_smoothing: 0.9,
            reg_max: 1.0,
            reg_scale: 1.0,
        }
    }
}

impl FdafParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.step_size) {
            return Err(Error::Parameter(format!(
                "step size must lie in [0, 1], got {}",
                self.step_size
            )));
        }
        if !(0.0..1.0).contains(&self.psd_smoothing) {
            return Err(Error::Parameter(format!(
                "PSD smoothing must lie in [0, 1), got {}",
                self.psd_smoothing
            )));
        }
        if !(self.reg_max >= 0.0) || !(self.reg_scale > 0.0) {
            return Err(Error::Parameter(format!(
                "regularization needs reg_max >= 0 and reg_scale > 0, got {} and {}",
                self.reg_max, self.reg_scale
            )));
        }
        Ok(())
    }
}

/// Result of one adaptation step.
#[derive(Debug, Clone)]
pub struct FilterUpdate<T> {
    /// Coefficient update Δh, to be added by the caller.
    pub delta: FirStack<T>,
    /// A priori output estimate, `Q` channels of `L` samples.
    pub estimate: Vec<Vec<T>>,
    /// A priori error `y − ŷ`.
    pub error: Vec<Vec<T>>,
}

/// A block-online estimator that proposes coefficient updates but does not
/// own the coefficients.
pub trait AdaptiveFilter<T: Real> {
    fn dims(&self) -> FirDims;

    fn fft(&self) -> &BlockFft<T>;

    /// Computes the output of `current` for the block, compares it with
    /// `observed` and returns the resulting update.
    fn step(
        &mut self,
        spectra: &BlockSpectra<T>,
        observed: &[Vec<T>],
        current: &FirStack<T>,
    ) -> Result<FilterUpdate<T>>;
}

/// Overlap-save FDAF with gradient constraint.
#[derive(Debug, Clone)]
pub struct Fdaf<T: Real> {
    dims: FirDims,
    params: FdafParams,
    fft: BlockFft<T>,
    /// Per input, `2L` bins.
    psd: Vec<Vec<T>>,
    blocks: usize,
}

impl<T: Real> Fdaf<T> {
    pub fn new(dims: FirDims, params: FdafParams) -> Result<Self> {
        params.validate()?;
        let fft = BlockFft::new(dims.taps)?;
        let psd = vec![vec![T::of(PSD_FLOOR); fft.size()]; dims.inputs];
        Ok(Self {
            dims,
            params,
            fft,
            psd,
            blocks: 0,
        })
    }

    pub fn params(&self) -> &FdafParams {
        &self.params
    }

    pub fn psd(&self, p: usize) -> &[T] {
        &self.psd[p]
    }

    /// Blocks processed so far.
    pub fn blocks(&self) -> usize {
        self.blocks
    }

    fn update_psd(&mut self, spectra: &BlockSpectra<T>) {
        let nu = T::of(self.params.psd_smoothing);
        let floor = T::of(PSD_FLOOR);
        let first = self.blocks == 0;
        for (p, s) in self.psd.iter_mut().enumerate() {
            let x = spectra.channel(p);
            if first {
                // A single periodogram is too noisy to normalize by; start
                // every bin from the block's average power.
                let mean = x.iter().map(|v| v.norm_sqr()).sum::<T>() / T::of_usize(x.len());
                s.iter_mut().for_each(|v| *v = mean.max(floor));
                continue;
            }
            for (sv, xv) in s.iter_mut().zip(x) {
                *sv = (nu * *sv + (T::one() - nu) * xv.norm_sqr()).max(floor);
            }
        }
    }

    /// Per-bin normalizer `1 / (S + δ)` for input `p`.
    fn normalizer(&self, p: usize) -> Vec<T> {
        let s = &self.psd[p];
        let floor = T::of(PSD_FLOOR);
        let mean = (s.iter().copied().sum::<T>() / T::of_usize(s.len())).max(floor);
        let reg_max = T::of(self.params.reg_max);
        let reg_scale = T::of(self.params.reg_scale);
        s.iter()
            .map(|&sv| {
                let delta = reg_max * (-sv / (reg_scale * mean)).exp();
                T::one() / (sv + delta)
            })
            .collect()
    }
}

impl<T: Real> AdaptiveFilter<T> for Fdaf<T> {
    fn dims(&self) -> FirDims {
        self.dims
    }

    fn fft(&self) -> &BlockFft<T> {
        &self.fft
    }

    fn step(
        &mut self,
        spectra: &BlockSpectra<T>,
        observed: &[Vec<T>],
        current: &FirStack<T>,
    ) -> Result<FilterUpdate<T>> {
        let d = self.dims;
        if current.dims() != d {
            return Err(Error::Config(format!(
                "filter shape {:?} does not match adaptive filter {d:?}",
                current.dims()
            )));
        }
        ensure_len("input spectra", d.inputs, spectra.num_channels())?;
        ensure_len("observed channels", d.outputs, observed.len())?;
        let l = d.taps;
        let filters = crate::signal::stack_spectra(&self.fft, current)?;
        let estimate = spectra.filter(&self.fft, &filters, d.outputs)?;
        let mut error = Vec::with_capacity(d.outputs);
        let mut error_spectra = Vec::with_capacity(d.outputs);
        for (y, yhat) in observed.iter().zip(&estimate) {
            ensure_len("observed block", l, y.len())?;
            let e: Vec<T> = y.iter().zip(yhat).map(|(&a, &b)| a - b).collect();
            let mut padded = vec![T::zero(); 2 * l];
            padded[l..].copy_from_slice(&e);
            error_spectra.push(self.fft.forward(&padded)?);
            error.push(e);
        }

        self.update_psd(spectra);
        self.blocks += 1;
        let mu = T::of(self.params.step_size);
        let mut delta = FirStack::zeros(d);
        for p in 0..d.inputs {
            let norm = self.normalizer(p);
            let x = spectra.channel(p);
            for (q, e) in error_spectra.iter().enumerate() {
                let grad: Vec<Complex<T>> = x
                    .iter()
                    .zip(e)
                    .zip(&norm)
                    .map(|((xv, ev), &w)| xv.conj() * ev * w)
                    .collect();
                // Gradient constraint: keep the causal first L taps.
                let mut taps = self.fft.inverse_real(grad)?;
                taps.truncate(l);
                taps.iter_mut().for_each(|v| *v = *v * mu);
                delta.set_taps(p, q, &taps)?;
            }
        }
        Ok(FilterUpdate {
            delta,
            estimate,
            error,
        })
    }
}
