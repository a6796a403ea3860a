use thiserror::Error;

/// Errors produced by the decoding engine, model backends and evaluation code.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A prefix was requested that does not exist in a lattice.
    #[error("prefix {0:?} is not a path in the lattice")]
    Path(Vec<u32>),

    /// Input did not match the expected file schema.
    #[error("format error: {0}")]
    Format(String),

    /// Input parsed but breaks a model invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// Every candidate extension of the beam was impossible.
    #[error("dead end at step {step}: no candidate with finite log-probability")]
    DeadEnd { step: usize },

    /// Exhaustive enumeration would exceed its size guard.
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),

    /// An oracle predictor had no entry for a source sentence.
    #[error("no oracle length for source {0:?}")]
    Lookup(Vec<u32>),

    /// Incompatible or missing command-line options.
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
