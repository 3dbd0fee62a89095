use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: column {column} ({name}): {message}", file.display())]
    Field {
        file: PathBuf,
        line: u64,
        column: usize,
        name: String,
        message: String,
    },

    #[error("{}: {message}", file.display())]
    Format { file: PathBuf, message: String },

    #[error("{}:{line}: unknown port `{port}`", file.display())]
    UnknownPortInFile { file: PathBuf, line: u64, port: String },

    #[error("unknown port `{0}`")]
    UnknownPort(String),

    #[error("unknown vessel class `{0}`")]
    UnknownVesselClass(String),

    #[error("vessel class index {0} out of range")]
    VesselClassIndex(usize),

    #[error("no distance entry for leg {from} -> {to}")]
    MissingDistance { from: String, to: String },

    #[error("invalid service: {0}")]
    InvalidService(String),

    #[error("invalid rotation: {0}")]
    InvalidRotation(String),

    #[error("vessel class `{0}` has zero design speed")]
    ZeroSpeed(String),

    #[error("episode already finished")]
    EpisodeDone,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown state_id {0}")]
    UnknownState(u64),

    #[error("schedule json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
