//! Noisy microphone observations of a known system.

use lpud_core::seed;
use lpud_core::signal::{apply_fir_stack, FirStack, MultichannelSignal};
use lpud_core::Real;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Observation<T> {
    /// Noisy microphone signals.
    pub y: MultichannelSignal<T>,
    /// Noiseless source image at the microphones.
    pub d: MultichannelSignal<T>,
    /// Variance of the additive noise in every channel.
    pub noise_variance: f64,
}

/// Filters `x` through the complete `truth` and adds white Gaussian noise
/// whose variance puts the mean power of `d` at `snr_db` above it. An
/// infinite SNR yields `y == d`.
pub fn simulate_observation<T: Real>(
    truth: &FirStack<T>,
    x: &MultichannelSignal<T>,
    snr_db: f64,
    seed: u64,
) -> Result<Observation<T>> {
    if snr_db.is_nan() {
        return Err(Error::Config("SNR is NaN".into()));
    }
    let w = truth.dims().taps;
    if x.len() < w {
        return Err(Error::Config(format!(
            "excitation has {} samples, the system {w} taps",
            x.len()
        )));
    }
    let d = apply_fir_stack(truth, x)?;
    let power = d.mean_power();
    if !(power > 0.0) {
        return Err(Error::Config(
            "the noiseless observation is silent, SNR is undefined".into(),
        ));
    }
    let variance = if snr_db == f64::INFINITY {
        0.0
    } else {
        power / 10f64.powf(snr_db / 10.0)
    };
    let sigma = variance.sqrt();
    let mut rng = seed::rng(seed);
    let channels = d
        .channels()
        .iter()
        .map(|c| {
            c.iter()
                .map(|&v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    if sigma > 0.0 {
                        v + T::of(sigma * z)
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();
    let y = MultichannelSignal::new(channels, x.sample_rate())?;
    Ok(Observation {
        y,
        d,
        noise_variance: variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use lpud_core::signal::{generate_excitation, Excitation, FirDims};

    fn system(taps: usize) -> FirStack<f64> {
        let mut rng = seed::rng(3);
        let dims = FirDims::new(1, taps, 2).unwrap();
        let coeffs = (0..dims.len())
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * (-(i as f64) / 40.0).exp()
            })
            .collect();
        FirStack::from_vec(dims, coeffs).unwrap()
    }

    fn input(n: usize) -> MultichannelSignal<f64> {
        generate_excitation(&Excitation::Wgn {}, n as f64 / 8000.0, 8000.0, 11).unwrap()
    }

    #[test]
    fn infinite_snr_is_noiseless() {
        let obs = simulate_observation(&system(32), &input(4000), f64::INFINITY, 1).unwrap();
        assert_eq!(obs.y, obs.d);
        assert_eq!(obs.noise_variance, 0.0);
    }

    #[test]
    fn empirical_snr() {
        let obs = simulate_observation(&system(32), &input(100_000), 0.0, 5).unwrap();
        let (mut s, mut n) = (0.0, 0.0);
        for (yc, dc) in obs.y.channels().iter().zip(obs.d.channels()) {
            for (&y, &d) in yc.iter().zip(dc) {
                s += d * d;
                n += (y - d) * (y - d);
            }
        }
        let snr = 10.0 * (s / n).log10();
        assert!(snr.abs() <= 0.2, "{snr}");
    }

    #[test]
    fn reproducible() {
        let a = simulate_observation(&system(16), &input(2000), -5.0, 9).unwrap();
        let b = simulate_observation(&system(16), &input(2000), -5.0, 9).unwrap();
        assert_eq!(a.y, b.y);
        let c = simulate_observation(&system(16), &input(2000), -5.0, 10).unwrap();
        assert_ne!(a.y, c.y);
    }

    #[test]
    fn silent_output_is_rejected() {
        let silent = FirStack::<f64>::zeros(FirDims::new(1, 16, 2).unwrap());
        assert!(matches!(
            simulate_observation(&silent, &input(2000), 0.0, 1),
            Err(Error::Config(_))
        ));
        assert!(simulate_observation(&system(64), &input(32), 0.0, 1).is_err());
    }
}
