use std::path::PathBuf;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{read_wav_mono, MultichannelSignal};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed;

/// Gated amplitude envelope: `on_s` seconds at full level, then `off_s`
/// seconds of silence, repeating from t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modulation {
    pub on_s: f64,
    pub off_s: f64,
}

impl Default for Modulation {
    fn default() -> Self {
        Self {
            on_s: 0.5,
            off_s: 0.5,
        }
    }
}

impl Modulation {
    fn gain(&self, t: f64) -> f64 {
        let period = self.on_s + self.off_s;
        if t.rem_euclid(period) < self.on_s {
            1.0
        } else {
            0.0
        }
    }
}

/// Source signal model for the single loudspeaker input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Excitation {
    /// Zero-mean, unit-variance white Gaussian noise.
    Wgn {},
    /// Unit-variance first-order autoregressive noise, optionally gated.
    Ar1 {
        pole: f64,
        #[serde(default)]
        modulation: Option<Modulation>,
    },
    /// Mono 16-bit PCM or 32-bit float WAV file at the scenario rate.
    Wav { path: PathBuf },
}

impl Excitation {
    /// Colored, gated noise standing in for speech.
    pub fn speech_proxy() -> Self {
        Excitation::Ar1 {
            pole: 0.9,
            modulation: Some(Modulation::default()),
        }
    }
}

fn white<T: Real>(n: usize, seed: u64) -> Vec<T> {
    let mut rng = seed::rng(seed);
    (0..n)
        .map(|_| T::of(StandardNormal.sample(&mut rng)))
        .collect()
}

/// Generates `duration_s` seconds of single-channel excitation.
pub fn generate_excitation<T: Real>(
    kind: &Excitation,
    duration_s: f64,
    sample_rate: f64,
    seed: u64,
) -> Result<MultichannelSignal<T>> {
    if !(duration_s > 0.0) {
        return Err(Error::Parameter(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    if !(sample_rate > 0.0) {
        return Err(Error::Parameter(format!(
            "sample rate must be positive, got {sample_rate}"
        )));
    }
    let n = (duration_s * sample_rate).round() as usize;
    let samples = match kind {
        Excitation::Wgn {} => white(n, seed),
        Excitation::Ar1 { pole, modulation } => {
            if !(pole.abs() < 1.0) {
                return Err(Error::Parameter(format!(
                    "AR(1) pole must lie in (-1, 1), got {pole}"
                )));
            }
            let a = T::of(*pole);
            let g = T::of((1.0 - pole * pole).sqrt());
            let mut x = white::<T>(n, seed);
            let mut prev = T::zero();
            for v in &mut x {
                prev = a * prev + g * *v;
                *v = prev;
            }
            if let Some(m) = modulation {
                if !(m.on_s > 0.0 && m.off_s >= 0.0) {
                    return Err(Error::Parameter(format!("invalid modulation {m:?}")));
                }
                for (i, v) in x.iter_mut().enumerate() {
                    *v = *v * T::of(m.gain(i as f64 / sample_rate));
                }
            }
            x
        }
        Excitation::Wav { path } => {
            let (rate, mut data) = read_wav_mono::<T>(path)?;
            if rate != sample_rate {
                return Err(Error::Ingestion {
                    path: path.clone(),
                    reason: format!("sample rate {rate} Hz does not match {sample_rate} Hz"),
                });
            }
            if data.len() < n {
                return Err(Error::Ingestion {
                    path: path.clone(),
                    reason: format!("{} samples available, {n} required", data.len()),
                });
            }
            data.truncate(n);
            data
        }
    };
    MultichannelSignal::new(vec![samples], sample_rate)
}
