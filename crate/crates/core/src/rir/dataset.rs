use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample_source_position, simulate_rir_prefix, Point, RoomScenario};
use crate::error::{Error, Result};
use crate::io::{check_format, read_f64, read_json, write_f64, write_json};
use crate::scalar::Real;
use crate::seed::{purpose, sub_seed};
use crate::signal::{FirDims, FirStack};

const FORMAT: (&str, u32) = ("lpud-rir-dataset", 1);
const SAMPLES_FILE: &str = "samples.f64";
const POSITIONS_FILE: &str = "positions.f64";

/// Training responses truncated to the adaptive filter length.
#[derive(Debug, Clone, PartialEq)]
pub struct RirDataset<T> {
    pub scenario: RoomScenario,
    pub dims: FirDims,
    pub seed: u64,
    pub samples: Vec<FirStack<T>>,
    pub source_positions: Vec<Point>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    version: u32,
    scenario: RoomScenario,
    dims: FirDims,
    num_samples: usize,
    seed: u64,
    samples_file: String,
    positions_file: String,
}

/// Simulates `num_samples` source positions drawn from the scenario's sector
/// and keeps the first `taps` taps of every microphone response.
pub fn generate_dataset<T: Real>(
    scenario: &RoomScenario,
    num_samples: usize,
    taps: usize,
    seed: u64,
) -> Result<RirDataset<T>> {
    scenario.validate()?;
    if taps == 0 || taps > scenario.rir_length {
        return Err(Error::Config(format!(
            "filter length {taps} must lie in 1..={}",
            scenario.rir_length
        )));
    }
    if num_samples == 0 {
        return Err(Error::Config("dataset needs at least one sample".into()));
    }
    let dims = FirDims::new(1, taps, scenario.num_mics())?;
    let positions: Vec<Point> = (0..num_samples as u64)
        .map(|g| {
            sample_source_position(
                &scenario.source_sector,
                sub_seed(seed, purpose::TRAINING_POSITION, g),
            )
        })
        .collect();
    let samples = positions
        .par_iter()
        .map(|src| {
            let filters = scenario
                .mic_positions
                .iter()
                .map(|mic| {
                    simulate_rir_prefix(scenario, src, mic, taps)
                        .map(|h| h.into_iter().map(T::of).collect())
                })
                .collect::<Result<Vec<Vec<T>>>>()?;
            FirStack::from_filters(taps, &[filters])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RirDataset {
        scenario: scenario.clone(),
        dims,
        seed,
        samples,
        source_positions: positions,
    })
}

impl<T: Real> RirDataset<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Writes `manifest.json`, the `G×R` sample matrix and the `G×3` source
    /// positions (row-major little-endian float64) into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_f64(
            &dir.join(SAMPLES_FILE),
            self.samples
                .iter()
                .flat_map(|s| s.as_slice().iter().copied()),
        )?;
        write_f64(
            &dir.join(POSITIONS_FILE),
            self.source_positions.iter().flatten().copied(),
        )?;
        write_json(
            &dir.join("manifest.json"),
            &Manifest {
                format: FORMAT.0.into(),
                version: FORMAT.1,
                scenario: self.scenario.clone(),
                dims: self.dims,
                num_samples: self.samples.len(),
                seed: self.seed,
                samples_file: SAMPLES_FILE.into(),
                positions_file: POSITIONS_FILE.into(),
            },
        )
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let m: Manifest = read_json(&path)?;
        check_format(&path, &m.format, m.version, FORMAT)?;
        let r = m.dims.len();
        let flat = read_f64::<T>(&dir.join(&m.samples_file), m.num_samples * r)?;
        let samples = flat
            .chunks_exact(r)
            .map(|c| FirStack::from_vec(m.dims, c.to_vec()))
            .collect::<Result<_>>()?;
        let pos = read_f64::<f64>(&dir.join(&m.positions_file), m.num_samples * 3)?;
        let source_positions = pos.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Ok(Self {
            scenario: m.scenario,
            dims: m.dims,
            seed: m.seed,
            samples,
            source_positions,
        })
    }
}
