//! Block-online acoustic system identification with update denoising by
//! projection onto a learned union of affine subspaces.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fdaf;
pub mod io;
pub mod linalg;
pub mod lpud;
pub mod rir;
pub mod scalar;
pub mod seed;
pub mod signal;
pub mod subspace;

pub use error::{Error, Result};
pub use scalar::Real;

pub use fdaf::{AdaptiveFilter, Fdaf, FdafParams, FilterUpdate};
pub use lpud::{EigenfilterBank, EvidenceForm, EvidenceTracker, Lpud, NoiseModel, StepReport};
pub use rir::{RirDataset, RoomScenario};
pub use signal::{FirDims, FirStack, MultichannelSignal};
pub use subspace::{AffineSubspaceModel, SubspaceUnion, UnionConfig};

pub type FirStackF32 = FirStack<f32>;
pub type FirStackF64 = FirStack<f64>;
pub type SignalF32 = MultichannelSignal<f32>;
pub type SignalF64 = MultichannelSignal<f64>;
pub type SubspaceUnionF32 = SubspaceUnion<f32>;
pub type SubspaceUnionF64 = SubspaceUnion<f64>;
pub type FdafF32 = Fdaf<f32>;
pub type FdafF64 = Fdaf<f64>;
pub type LpudF32 = Lpud<f32, Fdaf<f32>>;
pub type LpudF64 = Lpud<f64, Fdaf<f64>>;
