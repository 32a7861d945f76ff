use std::path::Path;

use hound::{SampleFormat, WavReader};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Reads a mono WAV file holding 16-bit PCM or 32-bit float samples.
///
/// Returns the sample rate and the samples scaled to [-1, 1). No resampling
/// or channel mixing is performed.
pub fn read_wav_mono<T: Real>(path: &Path) -> Result<(f64, Vec<T>)> {
    let fail = |reason: String| Error::Ingestion {
        path: path.to_path_buf(),
        reason,
    };
    let reader = WavReader::open(path).map_err(|e| fail(e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(fail(format!(
            "expected mono, found {} channels",
            spec.channels
        )));
    }
    let samples = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| T::of(f64::from(v) / 32768.0)))
            .collect::<Result<Vec<_>, _>>(),
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| T::of(f64::from(v))))
            .collect::<Result<Vec<_>, _>>(),
        (fmt, bits) => {
            return Err(fail(format!(
                "unsupported sample format {fmt:?}/{bits} bit"
            )));
        }
    }
    .map_err(|e| fail(e.to_string()))?;
    Ok((f64::from(spec.sample_rate), samples))
}
