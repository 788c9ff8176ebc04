use std::path::PathBuf;

use thiserror::Error;

use crate::time::UtcTime;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One rejected line of an input file.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} outside table span [{start}, {end}]")]
    OutOfRange { t: UtcTime, start: UtcTime, end: UtcTime },
    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{}: {} malformed line(s): {}", path.display(), errors.len(), join_lines(errors))]
    Parse { path: PathBuf, errors: Vec<LineError> },
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn join_lines(errors: &[LineError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl Error {
    /// True for errors caused by the numbers rather than by the inputs' syntax.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::OutOfRange { .. } | Error::Degenerate(_) | Error::InsufficientData(_) | Error::InvalidInput(_)
        )
    }
}
