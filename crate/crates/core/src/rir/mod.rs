//! Image-source room simulation and training-set generation.

mod dataset;
mod image;

pub use dataset::{generate_dataset, RirDataset};
pub use image::{reflection_coefficient, simulate_rir, simulate_rir_prefix, simulate_system};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub type Point = [f64; 3];

/// How many wall reflections the image expansion includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "OrderRepr", into = "OrderRepr")]
pub enum ReflectionOrder {
    /// Every image whose arrival falls inside the simulated length.
    Auto,
    Fixed(u32),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OrderRepr {
    Name(String),
    Order(u32),
}

impl TryFrom<OrderRepr> for ReflectionOrder {
    type Error = String;
    fn try_from(r: OrderRepr) -> Result<Self, String> {
        match r {
            OrderRepr::Name(s) if s == "auto" => Ok(ReflectionOrder::Auto),
            OrderRepr::Name(s) => Err(format!("unknown reflection order {s:?}")),
            OrderRepr::Order(n) => Ok(ReflectionOrder::Fixed(n)),
        }
    }
}

impl From<ReflectionOrder> for OrderRepr {
    fn from(o: ReflectionOrder) -> Self {
        match o {
            ReflectionOrder::Auto => OrderRepr::Name("auto".into()),
            ReflectionOrder::Fixed(n) => OrderRepr::Order(n),
        }
    }
}

/// Portion of a sphere from which sources are drawn. Angles in degrees;
/// azimuth is measured in the x-y plane from +x, elevation from that plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSector {
    pub center: Point,
    pub radius: f64,
    pub azimuth_deg: [f64; 2],
    pub elevation_deg: [f64; 2],
}

impl SourceSector {
    pub fn position(&self, azimuth_deg: f64, elevation_deg: f64) -> Point {
        let (az, el) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
        [
            self.center[0] + self.radius * el.cos() * az.cos(),
            self.center[1] + self.radius * el.cos() * az.sin(),
            self.center[2] + self.radius * el.sin(),
        ]
    }

    fn validate(&self) -> Result<()> {
        let ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if !(self.radius > 0.0) || !ok(self.azimuth_deg) || !ok(self.elevation_deg) {
            return Err(Error::Config(format!("invalid source sector {self:?}")));
        }
        Ok(())
    }
}

/// Draws a source uniformly in azimuth and elevation at the sector radius.
pub fn sample_source_position(sector: &SourceSector, seed: u64) -> Point {
    let mut rng = seed::rng(seed);
    let [a0, a1] = sector.azimuth_deg;
    let [e0, e1] = sector.elevation_deg;
    let az = rng.random_range(a0..=a1);
    let el = rng.random_range(e0..=e1);
    sector.position(az, el)
}

fn default_sound_speed() -> f64 {
    343.0
}

/// Shoebox room, microphone array and source region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomScenario {
    /// Room extent in meters.
    pub room_dims: Point,
    /// Reverberation time in seconds.
    pub t60: f64,
    pub sample_rate: f64,
    pub mic_positions: Vec<Point>,
    pub source_sector: SourceSector,
    /// Simulated impulse response length in taps.
    pub rir_length: usize,
    pub max_reflection_order: ReflectionOrder,
    #[serde(default = "default_sound_speed")]
    pub sound_speed: f64,
    /// Replaces the wall reflection coefficient derived from `t60`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflection_override: Option<f64>,
}

impl RoomScenario {
    /// 6 × 5 × 3.5 m room, T60 = 0.3 s at 8 kHz, two microphones 10 cm
    /// apart centered at (3, 2, 1.5) m, sources on a 1.3 m sphere sector
    /// around the array center.
    pub fn reference(rir_length: usize) -> Self {
        let center = [3.0, 2.0, 1.5];
        Self {
            room_dims: [6.0, 5.0, 3.5],
            t60: 0.3,
            sample_rate: 8000.0,
            mic_positions: vec![[2.95, 2.0, 1.5], [3.05, 2.0, 1.5]],
            source_sector: SourceSector {
                center,
                radius: 1.3,
                azimuth_deg: [30.0, 150.0],
                elevation_deg: [-5.0, 50.0],
            },
            rir_length,
            max_reflection_order: ReflectionOrder::Auto,
            sound_speed: default_sound_speed(),
            reflection_override: None,
        }
    }

    pub fn num_mics(&self) -> usize {
        self.mic_positions.len()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.iter()
            .zip(&self.room_dims)
            .all(|(&x, &d)| x > 0.0 && x < d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.room_dims.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Config(format!(
                "room dimensions {:?}",
                self.room_dims
            )));
        }
        if !(self.t60 > 0.0) || !(self.sample_rate > 0.0) || !(self.sound_speed > 0.0) {
            return Err(Error::Config(
                "t60, sample rate and sound speed must be positive".into(),
            ));
        }
        if self.rir_length == 0 {
            return Err(Error::Config("RIR length must be positive".into()));
        }
        if self.mic_positions.is_empty() {
            return Err(Error::Config("at least one microphone is required".into()));
        }
        for m in &self.mic_positions {
            if !self.contains(m) {
                return Err(Error::Geometry(format!(
                    "microphone {m:?} is outside the room"
                )));
            }
        }
        if let Some(b) = self.reflection_override {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::Config(format!(
                    "reflection coefficient {b} not in [0, 1]"
                )));
            }
        }
        self.source_sector.validate()
    }
}
