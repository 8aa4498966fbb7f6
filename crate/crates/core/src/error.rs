use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("unsupported format tag {found:?} (expected {expected:?})")]
    FormatVersion { expected: String, found: String },

    /// A data row failed validation. `row` is 1-based and counts the header.
    #[error("{file}: row {row}: {message}")]
    Row { file: String, row: usize, message: String },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no bid curves for zone {zone:?} at timestep {timestep}")]
    MissingCurves { zone: String, timestep: i64 },

    #[error("unknown zone {0:?}")]
    UnknownZone(String),

    #[error("supply and demand curves do not intersect in their overlapping volume range")]
    NoIntersection,

    #[error("cost model requires alpha > 0 (got {0})")]
    NonPositiveAlpha(f64),

    #[error("no cost model for zone {0:?}")]
    MissingCostModel(String),

    #[error("no value for profile {profile:?} at timestep {timestep}")]
    MissingProfile { profile: String, timestep: i64 },

    #[error("no price for zone {0:?}")]
    MissingZonePrice(String),

    #[error("infeasible bounds on {0}")]
    InfeasibleBounds(String),

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("no time step converged")]
    EmptyRun,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn row(file: impl Into<String>, row: usize, message: impl Into<String>) -> Self {
        Error::Row { file: file.into(), row, message: message.into() }
    }
}
