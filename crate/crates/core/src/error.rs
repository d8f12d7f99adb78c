use std::io;

use thiserror::Error;

use crate::types::Key;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("invalid range [{lo}, {hi})")]
    InvalidRange { lo: Key, hi: Key },

    #[error("key {key} outside universe [0, {universe})")]
    KeyOutOfUniverse { key: Key, universe: u64 },

    #[error("value of {len} bytes exceeds the fixed value width of {max} bytes")]
    ValueTooLong { len: usize, max: usize },

    #[error("range of {len} keys exceeds the expansion limit of {limit}")]
    ExpansionTooLarge { len: u64, limit: u64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("corrupt file {file}: {reason}")]
    Corrupt { file: String, reason: String },

    #[error("trace line {line}: {reason}")]
    Trace { line: usize, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn corrupt(file: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Corrupt {
        file: file.into(),
        reason: reason.into(),
    }
}
