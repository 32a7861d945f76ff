use serde::{Deserialize, Serialize};

use super::EigenfilterBank;
use crate::error::{ensure_len, Error, Result};
use crate::linalg::spd_logdet_quad;
use crate::scalar::Real;
use crate::signal::BlockSpectra;

/// Which per-sample covariance the evidence uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceForm {
    /// Full `Q×Q` covariance.
    #[default]
    Full,
    /// Diagonal of the covariance only, channels treated independently.
    Diagonal,
}

/// Observation noise covariance, `Q×Q` symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel<T> {
    outputs: usize,
    covariance: Vec<T>,
}

impl<T: Real> NoiseModel<T> {
    /// Row-major `Q×Q` covariance.
    pub fn new(outputs: usize, covariance: Vec<T>) -> Result<Self> {
        ensure_len("noise covariance", outputs * outputs, covariance.len())?;
        for i in 0..outputs {
            for j in 0..i {
                if covariance[i * outputs + j] != covariance[j * outputs + i] {
                    return Err(Error::Config("noise covariance is not symmetric".into()));
                }
            }
        }
        if outputs > 0 {
            spd_logdet_quad(&covariance, &vec![T::zero(); outputs], outputs)
                .map_err(|_| Error::Config("noise covariance is not positive definite".into()))?;
        }
        Ok(Self {
            outputs,
            covariance,
        })
    }

    /// `variance · I_Q`.
    pub fn isotropic(variance: T, outputs: usize) -> Result<Self> {
        let mut c = vec![T::zero(); outputs * outputs];
        for q in 0..outputs {
            c[q * outputs + q] = variance;
        }
        Self::new(outputs, c)
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn covariance(&self) -> &[T] {
        &self.covariance
    }
}

struct BlockTerms<T> {
    /// `Q` channels of `L` residuals `y − X̃ᵀh̄`.
    residual: Vec<Vec<T>>,
    /// `K` outputs of `Q` channels of `L` samples.
    eigen: Vec<Vec<Vec<T>>>,
}

fn block_terms<T: Real>(
    bank: &EigenfilterBank<T>,
    model: usize,
    spectra: &BlockSpectra<T>,
    observed: &[Vec<T>],
    noise: &NoiseModel<T>,
) -> Result<BlockTerms<T>> {
    let d = bank.dims();
    ensure_len("noise outputs", d.outputs, noise.outputs())?;
    ensure_len("observed channels", d.outputs, observed.len())?;
    ensure_len("input spectra", d.inputs, spectra.num_channels())?;
    if model >= bank.num_models() {
        return Err(Error::Config(format!(
            "model index {model} out of range for {} models",
            bank.num_models()
        )));
    }
    let fft = bank.fft();
    let mean = spectra.filter(fft, bank.offset(model), d.outputs)?;
    let residual = observed
        .iter()
        .zip(mean)
        .map(|(y, m)| {
            ensure_len("observed block", d.taps, y.len())?;
            Ok(y.iter().zip(m).map(|(&a, b)| a - b).collect())
        })
        .collect::<Result<_>>()?;
    let eigen = bank
        .eigenfilters(model)
        .iter()
        .map(|f| spectra.filter(fft, f, d.outputs))
        .collect::<Result<_>>()?;
    Ok(BlockTerms { residual, eigen })
}

/// Block log-evidence of model `model`, up to a model-independent constant.
///
/// Each sample contributes `−½ (log det R(n) + ēᵀ(n) R(n)⁻¹ ē(n))` with
/// `R(n) = Σ_noise + Σ_r y̌_r(n) y̌_r(n)ᵀ`, where `y̌_r` is the output of the
/// r-th eigenfilter and `ē(n)` the residual after the offset filter.
pub fn block_log_evidence<T: Real>(
    bank: &EigenfilterBank<T>,
    model: usize,
    spectra: &BlockSpectra<T>,
    observed: &[Vec<T>],
    noise: &NoiseModel<T>,
) -> Result<T> {
    let t = block_terms(bank, model, spectra, observed, noise)?;
    let q = noise.outputs();
    let half = T::of(0.5);
    let mut r = vec![T::zero(); q * q];
    let mut e = vec![T::zero(); q];
    let mut total = T::zero();
    for n in 0..bank.dims().taps {
        r.copy_from_slice(noise.covariance());
        for y in &t.eigen {
            for a in 0..q {
                for b in 0..q {
                    r[a * q + b] = r[a * q + b] + y[a][n] * y[b][n];
                }
            }
        }
        for (ev, res) in e.iter_mut().zip(&t.residual) {
            *ev = res[n];
        }
        let (logdet, quad) = spd_logdet_quad(&r, &e, q)?;
        total = total - half * (logdet + quad);
    }
    Ok(total)
}

/// Channel-decoupled variant of [`block_log_evidence`] that keeps only the
/// diagonal `r_q(n)` of each per-sample covariance:
/// `−½ Σ_q (log r_q(n) + ē_q(n)² / r_q(n))`.
pub fn block_log_evidence_diag<T: Real>(
    bank: &EigenfilterBank<T>,
    model: usize,
    spectra: &BlockSpectra<T>,
    observed: &[Vec<T>],
    noise: &NoiseModel<T>,
) -> Result<T> {
    let t = block_terms(bank, model, spectra, observed, noise)?;
    let q = noise.outputs();
    let half = T::of(0.5);
    let mut total = T::zero();
    for c in 0..q {
        let base = noise.covariance()[c * q + c];
        for n in 0..bank.dims().taps {
            let r = t.eigen.iter().fold(base, |acc, y| acc + y[c][n] * y[c][n]);
            if !(r > T::zero()) {
                return Err(Error::Numerical("evidence variance is not positive".into()));
            }
            let e = t.residual[c][n];
            total = total - half * (r.ln() + e * e / r);
        }
    }
    Ok(total)
}

impl EvidenceForm {
    pub fn evaluate<T: Real>(
        self,
        bank: &EigenfilterBank<T>,
        model: usize,
        spectra: &BlockSpectra<T>,
        observed: &[Vec<T>],
        noise: &NoiseModel<T>,
    ) -> Result<T> {
        match self {
            EvidenceForm::Full => block_log_evidence(bank, model, spectra, observed, noise),
            EvidenceForm::Diagonal => {
                block_log_evidence_diag(bank, model, spectra, observed, noise)
            }
        }
    }
}
