use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("token `{token}` appears in more than one gender pair (line {line})")]
    DuplicatePairToken { token: String, line: usize },

    #[error("no gender pairs survive vocabulary filtering")]
    NoGenderPairs,

    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    TokenOutOfRange { id: usize, vocab_size: usize },

    #[error("seed sequence is empty")]
    EmptySeed,

    #[error("embedding file line {line}: expected {expected} values, found {found}")]
    EmbeddingDim {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("gender direction has zero norm")]
    DegenerateDirection,

    #[error("bad checkpoint magic bytes")]
    CheckpointMagic,

    #[error("unsupported checkpoint version {0}")]
    CheckpointVersion(u8),

    #[error("checkpoint truncated while reading {0}")]
    CheckpointTruncated(&'static str),

    #[error("checkpoint shape mismatch: {0}")]
    CheckpointShape(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("corpus of {len} tokens is too small for batch_size {batch_size} x seq_len {seq_len}")]
    CorpusTooSmall {
        len: usize,
        batch_size: usize,
        seq_len: usize,
    },

    #[error("template tokens missing from vocabulary: {}", .0.join(", "))]
    TemplateOutOfVocab(Vec<String>),

    #[error("undefined metric {metric}: {reason}")]
    UndefinedMetric {
        metric: &'static str,
        reason: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn undefined(metric: &'static str, reason: impl Into<String>) -> Self {
        Error::UndefinedMetric {
            metric,
            reason: reason.into(),
        }
    }
}
