//! Overlap-save block convolution with a transform size of twice the block.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{ensure_len, Error, Result};
use crate::scalar::Real;

/// Forward/inverse transforms of size `2L` for blocks of `L` samples.
#[derive(Clone)]
pub struct BlockFft<T: Real> {
    block_len: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for BlockFft<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlockFft")
            .field("block_len", &self.block_len)
            .finish()
    }
}

impl<T: Real> BlockFft<T> {
    pub fn new(block_len: usize) -> Result<Self> {
        if block_len == 0 {
            return Err(Error::Config("block length must be positive".into()));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            block_len,
            forward: planner.plan_fft_forward(2 * block_len),
            inverse: planner.plan_fft_inverse(2 * block_len),
        })
    }

    #[inline]
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Transform length `2L`.
    #[inline]
    pub fn size(&self) -> usize {
        2 * self.block_len
    }

    /// Unnormalized DFT of a real `2L`-sample window.
    pub fn forward(&self, window: &[T]) -> Result<Vec<Complex<T>>> {
        ensure_len("transform window", self.size(), window.len())?;
        let mut buf: Vec<Complex<T>> = window.iter().map(|&x| Complex::new(x, T::zero())).collect();
        self.forward.process(&mut buf);
        Ok(buf)
    }

    /// DFT of an FIR of at most `L` taps, zero-padded to `2L`.
    pub fn fir_spectrum(&self, taps: &[T]) -> Result<Vec<Complex<T>>> {
        if taps.len() > self.block_len {
            return Err(Error::dim("FIR taps", self.block_len, taps.len()));
        }
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.size()];
        for (b, &t) in buf.iter_mut().zip(taps) {
            b.re = t;
        }
        self.forward.process(&mut buf);
        Ok(buf)
    }

    /// Real part of the normalized inverse DFT.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex<T>>) -> Result<Vec<T>> {
        ensure_len("spectrum", self.size(), spectrum.len())?;
        self.inverse.process(&mut spectrum);
        let scale = T::one() / T::of_usize(self.size());
        Ok(spectrum.into_iter().map(|c| c.re * scale).collect())
    }

    /// Last `L` samples of the circular convolution held in `spectrum`, i.e.
    /// the alias-free part of an overlap-save block.
    pub fn valid_block(&self, spectrum: Vec<Complex<T>>) -> Result<Vec<T>> {
        let mut full = self.inverse_real(spectrum)?;
        Ok(full.split_off(self.block_len))
    }

    /// Overlap-save output for a pre-transformed input window.
    pub fn convolve_spectra(&self, input: &[Complex<T>], fir: &[Complex<T>]) -> Result<Vec<T>> {
        ensure_len("input spectrum", self.size(), input.len())?;
        ensure_len("FIR spectrum", self.size(), fir.len())?;
        let prod = input.iter().zip(fir).map(|(a, b)| a * b).collect();
        self.valid_block(prod)
    }
}

/// Filters a `2L`-sample history with an `L`-tap FIR given in the frequency
/// domain and returns the `L` newest output samples.
pub fn overlap_save_convolve<T: Real>(
    fft: &BlockFft<T>,
    history: &[T],
    fir: &[Complex<T>],
) -> Result<Vec<T>> {
    let x = fft.forward(history)?;
    fft.convolve_spectra(&x, fir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// y(n) = Σ_k h[k] x[n-k] over the window, reporting the newest L outputs.
    fn direct(history: &[f64], taps: &[f64]) -> Vec<f64> {
        let l = history.len() / 2;
        (l..2 * l)
            .map(|n| {
                taps.iter()
                    .enumerate()
                    .map(|(k, &h)| h * history[n - k])
                    .sum()
            })
            .collect()
    }

    #[test]
    fn identity_filter_returns_newest_block() {
        let fft = BlockFft::<f64>::new(8).unwrap();
        let hist: Vec<f64> = (0..16).map(|i| i as f64 * 0.5 - 3.0).collect();
        let mut delta = vec![0.0; 8];
        delta[0] = 1.0;
        let out = overlap_save_convolve(&fft, &hist, &fft.fir_spectrum(&delta).unwrap()).unwrap();
        for (a, b) in out.iter().zip(&hist[8..]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_history_gives_zero_output() {
        let fft = BlockFft::<f64>::new(16).unwrap();
        let taps: Vec<f64> = (0..16).map(|i| (i as f64).sin()).collect();
        let out =
            overlap_save_convolve(&fft, &[0.0; 32], &fft.fir_spectrum(&taps).unwrap()).unwrap();
        assert!(out.iter().all(|&y| y == 0.0));
    }

    #[test]
    fn rejects_wrong_history_length() {
        let fft = BlockFft::<f64>::new(8).unwrap();
        let spectrum = fft.fir_spectrum(&[1.0]).unwrap();
        assert!(matches!(
            overlap_save_convolve(&fft, &[0.0; 15], &spectrum),
            Err(Error::Dimension { .. })
        ));
        assert!(fft.fir_spectrum(&[0.0; 9]).is_err());
    }

    #[test]
    fn matches_direct_convolution() {
        let mut rng = crate::seed::rng(11);
        for &l in &[8usize, 64, 512] {
            let fft = BlockFft::<f64>::new(l).unwrap();
            for _ in 0..200 {
                let hist: Vec<f64> = (0..2 * l).map(|_| rng.random_range(-1.0..1.0)).collect();
                let taps: Vec<f64> = (0..l).map(|_| rng.random_range(-1.0..1.0)).collect();
                let got =
                    overlap_save_convolve(&fft, &hist, &fft.fir_spectrum(&taps).unwrap()).unwrap();
                let want = direct(&hist, &taps);
                let err = got
                    .iter()
                    .zip(&want)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(err <= 1e-10, "L={l}: deviation {err:e}");
            }
        }
    }

    #[test]
    fn single_precision_agrees_loosely() {
        let mut rng = crate::seed::rng(5);
        let fft = BlockFft::<f32>::new(32).unwrap();
        let hist: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let taps: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h32: Vec<f32> = hist.iter().map(|&x| x as f32).collect();
        let t32: Vec<f32> = taps.iter().map(|&x| x as f32).collect();
        let got = overlap_save_convolve(&fft, &h32, &fft.fir_spectrum(&t32).unwrap()).unwrap();
        for (a, b) in got.iter().zip(direct(&hist, &taps)) {
            assert!((*a as f64 - b).abs() < 1e-4);
        }
    }
}
