//! Deterministic next-token models.
//!
//! Both backends implement [`Stepper`]: given a source sentence and a target
//! prefix they return a full log-probability vector over the vocabulary.

mod hash;
mod lattice;

pub use hash::{fnv1a64, splitmix64, unit_interval, HashModel, HashModelSpec, SplitMix64};
pub use lattice::{random_lattice, TrieLattice};

use crate::error::Result;
use crate::types::{TokenId, Vocab};

/// Output of one model step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    /// One entry per vocabulary id; impossible tokens carry
    /// [`NEG_SENTINEL`](crate::types::NEG_SENTINEL).
    pub logprobs: Vec<f64>,
    /// Optional attention row over source positions, summing to 1.
    pub attn: Option<Vec<f64>>,
}

/// Next-token distribution given the source and the target prefix.
///
/// Implementations must be deterministic and safe to call from several
/// threads at once.
pub trait Stepper: Sync {
    fn vocab(&self) -> Vocab;

    fn step(&self, source: &[TokenId], prefix: &[TokenId]) -> Result<StepOutput>;
}

impl<S: Stepper + ?Sized> Stepper for &S {
    fn vocab(&self) -> Vocab {
        (**self).vocab()
    }

    fn step(&self, source: &[TokenId], prefix: &[TokenId]) -> Result<StepOutput> {
        (**self).step(source, prefix)
    }
}
