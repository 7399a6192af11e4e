//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value or file failed validation.
    #[error("invalid config: {0}")]
    Config(String),

    /// The simulation produced or was fed a non-finite value.
    #[error("simulation diverged: {0}")]
    Diverged(String),

    /// Environment lifecycle misuse (step before reset, step after done, bad action).
    #[error("environment: {0}")]
    Env(String),

    /// A reply or frame violated the wire protocol.
    #[error("link protocol violation: {0}")]
    Protocol(String),

    /// The peer stopped answering within the retry budget.
    #[error("link lost: no reply after {attempts} attempts")]
    LostLink { attempts: u32 },

    /// Training-loop failure (non-finite loss, bad batch).
    #[error("training: {0}")]
    Train(String),

    /// Evaluation harness failure.
    #[error("evaluation: {0}")]
    Eval(String),

    /// A vector or parameter block had the wrong dimensions.
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
