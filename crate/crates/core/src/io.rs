//! Raw little-endian `f64` arrays and JSON manifests.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn write_f64<T: Real>(path: &Path, values: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for v in values {
        w.write_all(&v.to_f64_lossy().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_f64<T: Real>(path: &Path, expected: usize) -> Result<Vec<T>> {
    let bytes = fs::read(path)?;
    if bytes.len() != 8 * expected {
        return Err(Error::Store {
            path: path.to_path_buf(),
            reason: format!(
                "expected {expected} float64 values, found {} bytes",
                bytes.len()
            ),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
        .collect())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<D: DeserializeOwned>(path: &Path) -> Result<D> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Store {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Fails unless a manifest declares the expected format tag and version.
pub(crate) fn check_format(
    path: &Path,
    format: &str,
    version: u32,
    want: (&str, u32),
) -> Result<()> {
    if format != want.0 || version != want.1 {
        return Err(Error::Store {
            path: path.to_path_buf(),
            reason: format!(
                "unsupported format {format} v{version}, expected {} v{}",
                want.0, want.1
            ),
        });
    }
    Ok(())
}
