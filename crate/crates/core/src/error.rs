use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("text is empty")]
    EmptyText,

    #[error("unknown character {ch:?} at position {position}")]
    UnknownCharacter { position: usize, ch: char },

    #[error("index {index} at position {position} is out of range for vocabulary of size {vocab_size}")]
    IndexOutOfRange {
        position: usize,
        index: usize,
        vocab_size: usize,
    },

    #[error("text contains reserved marker character {0:?}")]
    MarkerCollision(char),

    #[error("charset needs at least 2 distinct characters, got {0}")]
    CharsetTooSmall(usize),

    #[error("numerical divergence: {0}")]
    NumericalDivergence(String),

    #[error("plaintext digest does not match")]
    DigestMismatch,

    #[error("key generation failed after {attempts} attempt(s)")]
    KeyGenFailed { attempts: u32 },

    #[error("corrupt key: {0}")]
    CorruptKey(String),

    #[error("unsupported key format version {0}")]
    UnsupportedVersion(u32),

    #[error("failed to spawn interpreter: {0}")]
    SpawnError(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}
