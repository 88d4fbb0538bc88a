use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Manifest {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("unreadable audio {path}: {msg}")]
    Audio { path: PathBuf, msg: String },
    #[error("corpus '{0}' has a single speaker and cannot be split")]
    SingleSpeaker(String),
    #[error("cannot split empty record list")]
    EmptyCorpus,
    #[error("sub-pool '{pool}' has no records on side {side} for split {split}")]
    EmptyPool {
        pool: String,
        side: char,
        split: String,
    },
    #[error("unvoiced utterance: only {0} voiced frames")]
    Unvoiced(usize),
    #[error("no speech detected")]
    NoSpeech,
    #[error("no countable syllables in {0:?}")]
    NoSyllables(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("Sabine absorption {alpha:.3} >= 1 is not realizable for room {room}")]
    Unrealizable { alpha: f64, room: String },
    #[error("decay range not reached: {0}")]
    DecayRange(String),
    #[error("silent interference")]
    SilentInterference,
    #[error("indistinguishable pair: no eligible relative cue")]
    Indistinguishable,
    #[error("plan/geometry mismatch: {0}")]
    Mismatch(String),
    #[error("unknown cue kind '{0}'")]
    UnknownCue(String),
    #[error("config: {0}")]
    Config(String),
    #[error("rephrase endpoint: {0}")]
    Rephrase(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
