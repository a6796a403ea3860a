//! Beam-search decoding with length-aware rescoring and optimal stopping.
//!
//! The decoder is model-agnostic: anything implementing [`model::Stepper`]
//! can drive it. Two deterministic backends ship with the crate, a
//! hash-driven synthetic model and a finite trie lattice for exhaustive
//! checks. Finished candidates are rescored by one of seven methods
//! ([`ScoringMethod`]) and the search ends under one of four stopping rules
//! ([`Stopping`]), including rules that stop early without changing the
//! result.
//!
//! ```
//! use beamcurse::model::{HashModel, HashModelSpec};
//! use beamcurse::{decode, DecodeConfig, ScoringMethod, SentenceContext, Stopping, Vocab};
//!
//! let model = HashModel::new(HashModelSpec::new(7, Vocab::with_size(50)?))?;
//! let source = vec![4, 9, 12, 30];
//! let cfg = DecodeConfig::new(10, Stopping::Optimal);
//! let mut ctx = SentenceContext::new(source.clone(), 16.0, cfg.max_len(source.len()))?;
//! let result = decode(&model, &mut ctx, &cfg, &ScoringMethod::BpNorm)?;
//! assert!(result.best.is_finished());
//! # Ok::<(), beamcurse::Error>(())
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod corpus;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod model;
pub mod predict;
pub mod scoring;
pub mod stopping;
pub mod sweep;
pub mod types;

pub use decoder::{decode, decode_greedy, exhaustive_best, expand_beam, DecodeResult};
pub use error::{Error, Result};
pub use predict::{fit_ratio, RatioPredictor};
pub use types::{
    Beam, DecodeConfig, Hypothesis, ScoringMethod, SentenceContext, Stopping, TokenId, Vocab,
    NEG_SENTINEL,
};
