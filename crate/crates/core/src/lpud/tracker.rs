use crate::error::{ensure_len, Error, Result};
use crate::scalar::Real;

/// Forgetting factor used when none is configured.
pub const DEFAULT_FORGETTING: f64 = 0.99;

/// Recursive average of per-model block log-evidences and the resulting
/// model choice.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceTracker<T> {
    forgetting: T,
    estimates: Vec<T>,
    initialized: bool,
    selected: Option<usize>,
}

impl<T: Real> EvidenceTracker<T> {
    pub fn new(num_models: usize, forgetting: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&forgetting) {
            return Err(Error::Parameter(format!(
                "forgetting factor must lie in [0, 1], got {forgetting}"
            )));
        }
        if num_models == 0 {
            return Err(Error::Config("tracker needs at least one model".into()));
        }
        Ok(Self {
            forgetting: T::of(forgetting),
            estimates: vec![T::zero(); num_models],
            initialized: false,
            selected: None,
        })
    }

    pub fn estimates(&self) -> &[T] {
        &self.estimates
    }

    /// Current best model; `None` before the first update.
    pub fn selected(&self) -> Option<usize> {
        self.selected
    }

    /// Folds in one block of log-evidences and returns the new selection.
    /// The first block initializes the averages directly.
    pub fn update(&mut self, block: &[T]) -> Result<usize> {
        ensure_len("model evidences", self.estimates.len(), block.len())?;
        if self.initialized {
            let lambda = self.forgetting;
            for (e, &v) in self.estimates.iter_mut().zip(block) {
                *e = lambda * *e + (T::one() - lambda) * v;
            }
        } else {
            self.estimates.copy_from_slice(block);
            self.initialized = true;
        }
        let mut best = 0;
        for (i, &e) in self.estimates.iter().enumerate() {
            if e > self.estimates[best] {
                best = i;
            }
        }
        self.selected = Some(best);
        Ok(best)
    }
}
