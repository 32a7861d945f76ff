//! Multichannel buffers, block streaming and FIR filtering.

mod excitation;
mod fft;
mod fir;
mod wav;

pub use excitation::{generate_excitation, Excitation, Modulation};
pub use fft::{overlap_save_convolve, BlockFft};
pub use fir::{unvec_fir, vec_fir, FirDims, FirStack};
pub use rustfft::num_complex::Complex;
pub use wav::read_wav_mono;

use crate::error::{ensure_len, Error, Result};
use crate::scalar::Real;

/// Equal-length sample sequences sharing one sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelSignal<T> {
    channels: Vec<Vec<T>>,
    sample_rate: f64,
}

impl<T: Real> MultichannelSignal<T> {
    pub fn new(channels: Vec<Vec<T>>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0) {
            return Err(Error::Parameter(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if let Some(first) = channels.first() {
            for c in &channels {
                ensure_len("channel length", first.len(), c.len())?;
            }
        }
        Ok(Self {
            channels,
            sample_rate,
        })
    }

    pub fn zeros(num_channels: usize, len: usize, sample_rate: f64) -> Result<Self> {
        Self::new(vec![vec![T::zero(); len]; num_channels], sample_rate)
    }

    #[inline]
    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    #[inline]
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    #[inline]
    pub fn channel(&self, c: usize) -> &[T] {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[Vec<T>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<T>> {
        self.channels
    }

    /// Samples `[start, start + len)` of every channel.
    pub fn block(&self, start: usize, len: usize) -> Vec<Vec<T>> {
        self.channels
            .iter()
            .map(|c| c[start..start + len].to_vec())
            .collect()
    }

    /// Keeps the first `len` samples of every channel.
    pub fn truncate(&mut self, len: usize) {
        for c in &mut self.channels {
            c.truncate(len);
        }
    }

    /// Mean power over all channels and samples.
    pub fn mean_power(&self) -> f64 {
        let n = self.num_channels() * self.len();
        if n == 0 {
            return 0.0;
        }
        let total: f64 = self
            .channels
            .iter()
            .flatten()
            .map(|&x| {
                let v = x.to_f64_lossy();
                v * v
            })
            .sum();
        total / n as f64
    }
}

/// Sliding `2L`-sample input windows for block processing.
///
/// Before the first block the window is all zeros; every [`advance`] shifts
/// out the oldest `L` samples per channel.
///
/// [`advance`]: BlockStream::advance
#[derive(Debug, Clone)]
pub struct BlockStream<T> {
    block_len: usize,
    history: Vec<Vec<T>>,
    blocks_seen: usize,
}

impl<T: Real> BlockStream<T> {
    pub fn new(num_channels: usize, block_len: usize) -> Self {
        Self {
            block_len,
            history: vec![vec![T::zero(); 2 * block_len]; num_channels],
            blocks_seen: 0,
        }
    }

    #[inline]
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Number of blocks pushed so far (the index `m` of the current block,
    /// counting from one).
    #[inline]
    pub fn block_index(&self) -> usize {
        self.blocks_seen
    }

    pub fn num_channels(&self) -> usize {
        self.history.len()
    }

    /// The `2L`-sample window of channel `c`, oldest sample first.
    pub fn history(&self, c: usize) -> &[T] {
        &self.history[c]
    }

    pub fn advance<S: AsRef<[T]>>(&mut self, block: &[S]) -> Result<()> {
        ensure_len("block channels", self.history.len(), block.len())?;
        for (h, b) in self.history.iter_mut().zip(block) {
            let b = b.as_ref();
            ensure_len("block length", self.block_len, b.len())?;
            h.copy_within(self.block_len.., 0);
            h[self.block_len..].copy_from_slice(b);
        }
        self.blocks_seen += 1;
        Ok(())
    }

    /// Transforms every channel's window once; the result is shared by all
    /// filters that consume this block.
    pub fn spectra(&self, fft: &BlockFft<T>) -> Result<BlockSpectra<T>> {
        ensure_len("transform block length", self.block_len, fft.block_len())?;
        let channels = self
            .history
            .iter()
            .map(|h| fft.forward(h))
            .collect::<Result<_>>()?;
        Ok(BlockSpectra { channels })
    }
}

/// Per-input spectra of the current `2L`-sample windows.
#[derive(Debug, Clone)]
pub struct BlockSpectra<T> {
    channels: Vec<Vec<Complex<T>>>,
}

impl<T: Real> BlockSpectra<T> {
    pub fn channel(&self, p: usize) -> &[Complex<T>] {
        &self.channels[p]
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Outputs of a MIMO filter for this block: `Q` channels of `L` samples,
    /// with `filter[p * Q + q]` the spectrum of the (p, q) filter.
    pub fn filter(
        &self,
        fft: &BlockFft<T>,
        filter: &[Vec<Complex<T>>],
        outputs: usize,
    ) -> Result<Vec<Vec<T>>> {
        let inputs = self.channels.len();
        ensure_len("filter pairs", inputs * outputs, filter.len())?;
        (0..outputs)
            .map(|q| {
                let mut acc = vec![Complex::new(T::zero(), T::zero()); fft.size()];
                for (p, x) in self.channels.iter().enumerate() {
                    for ((a, &xv), &hv) in acc.iter_mut().zip(x).zip(&filter[p * outputs + q]) {
                        *a = *a + xv * hv;
                    }
                }
                fft.valid_block(acc)
            })
            .collect()
    }
}

/// Spectra of every (p, q) filter of a stack, ordered `p * Q + q`.
pub fn stack_spectra<T: Real>(
    fft: &BlockFft<T>,
    fir: &FirStack<T>,
) -> Result<Vec<Vec<Complex<T>>>> {
    let d = fir.dims();
    ensure_len("transform block length", d.taps, fft.block_len())?;
    let mut out = Vec::with_capacity(d.pairs());
    for p in 0..d.inputs {
        for q in 0..d.outputs {
            out.push(fft.fir_spectrum(&fir.taps(p, q))?);
        }
    }
    Ok(out)
}

/// Runs a MIMO FIR over a whole signal from zero initial state, block by
/// block with overlap-save. The output has as many samples as the input.
pub fn apply_fir_stack<T: Real>(
    fir: &FirStack<T>,
    x: &MultichannelSignal<T>,
) -> Result<MultichannelSignal<T>> {
    let d = fir.dims();
    ensure_len("input channels", d.inputs, x.num_channels())?;
    let l = d.taps;
    let fft = BlockFft::new(l)?;
    let spectra = stack_spectra(&fft, fir)?;
    let n = x.len();
    let mut out = vec![Vec::with_capacity(n + l); d.outputs];
    let mut stream = BlockStream::new(d.inputs, l);
    let mut block = vec![vec![T::zero(); l]; d.inputs];
    let mut start = 0;
    while start < n {
        let take = l.min(n - start);
        for (b, c) in block.iter_mut().zip(x.channels()) {
            b[..take].copy_from_slice(&c[start..start + take]);
            b[take..].iter_mut().for_each(|v| *v = T::zero());
        }
        stream.advance(&block)?;
        let y = stream.spectra(&fft)?.filter(&fft, &spectra, d.outputs)?;
        for (o, yq) in out.iter_mut().zip(y) {
            o.extend_from_slice(&yq[..take]);
        }
        start += take;
    }
    MultichannelSignal::new(out, x.sample_rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn signal_invariants() {
        assert!(MultichannelSignal::new(vec![vec![0.0f64; 3], vec![0.0; 4]], 8000.0).is_err());
        assert!(MultichannelSignal::new(vec![vec![0.0f64; 3]], 0.0).is_err());
        let s = MultichannelSignal::new(vec![vec![1.0f64, -1.0]], 8000.0).unwrap();
        assert_eq!(s.mean_power(), 1.0);
    }

    #[test]
    fn stream_keeps_two_blocks() {
        let mut s = BlockStream::<f64>::new(1, 2);
        assert_eq!(s.history(0), &[0.0; 4]);
        s.advance(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(s.history(0), &[0.0, 0.0, 1.0, 2.0]);
        s.advance(&[vec![3.0, 4.0]]).unwrap();
        assert_eq!(s.history(0), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.block_index(), 2);
        assert!(s.advance(&[vec![0.0; 3]]).is_err());
    }

    #[test]
    fn pass_through_routing() {
        let x = MultichannelSignal::new(vec![(0..37).map(|i| i as f64).collect()], 8000.0).unwrap();
        let mut h = vec![0.0; 4];
        h[0] = 1.0;
        let fir = FirStack::from_filters(4, &[vec![h]]).unwrap();
        let y = apply_fir_stack(&fir, &x).unwrap();
        for (a, b) in y.channel(0).iter().zip(x.channel(0)) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn delay_filters() {
        let x = MultichannelSignal::new(vec![(0..20).map(|i| (i as f64).cos()).collect()], 8000.0)
            .unwrap();
        let fir = FirStack::from_filters(8, &[vec![vec![1.0], vec![0.0, 1.0]]]).unwrap();
        let y = apply_fir_stack(&fir, &x).unwrap();
        assert_eq!(y.num_channels(), 2);
        for n in 0..20 {
            assert!((y.channel(0)[n] - x.channel(0)[n]).abs() < 1e-10);
            let delayed = if n == 0 { 0.0 } else { x.channel(0)[n - 1] };
            assert!((y.channel(1)[n] - delayed).abs() < 1e-10);
        }
    }

    #[test]
    fn channel_count_mismatch() {
        let x = MultichannelSignal::<f64>::zeros(2, 10, 8000.0).unwrap();
        let fir = FirStack::zeros(FirDims::new(1, 4, 1).unwrap());
        assert!(matches!(
            apply_fir_stack(&fir, &x),
            Err(Error::Dimension { .. })
        ));
    }

    /// Per-sample evaluation of ŷ(n) = Hᵀx(n) with an explicit regressor.
    #[test]
    fn matches_per_sample_model() {
        let mut rng = crate::seed::rng(3);
        let d = FirDims::new(2, 6, 3).unwrap();
        let coeffs = (0..d.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fir = FirStack::from_vec(d, coeffs).unwrap();
        let n = 41;
        let chans: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let x = MultichannelSignal::new(chans.clone(), 8000.0).unwrap();
        let y = apply_fir_stack(&fir, &x).unwrap();
        for t in 0..n {
            let mut reg = Vec::with_capacity(12);
            for c in &chans {
                for l in 0..6 {
                    reg.push(if t >= l { c[t - l] } else { 0.0 });
                }
            }
            let want = fir.kron_apply(&reg).unwrap();
            for q in 0..3 {
                assert!((y.channel(q)[t] - want[q]).abs() <= 1e-10);
            }
        }
    }
}
