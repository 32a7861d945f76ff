//! Evidence-driven selection among the learned subspaces and the projected
//! update loop around a base adaptive filter.

mod bank;
mod engine;
mod evidence;
mod tracker;

pub use bank::EigenfilterBank;
pub use engine::{Lpud, StepReport};
pub use evidence::{block_log_evidence, block_log_evidence_diag, EvidenceForm, NoiseModel};
pub use tracker::{EvidenceTracker, DEFAULT_FORGETTING};
