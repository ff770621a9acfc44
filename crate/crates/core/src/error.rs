use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure class, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCategory {
    Io,
    Parse,
    Schema,
    Degenerate,
    UpstreamMissing,
    Parameter,
    Numerical,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Io => "io",
            ErrorCategory::Parse => "parse",
            ErrorCategory::Schema => "schema",
            ErrorCategory::Degenerate => "degenerate",
            ErrorCategory::UpstreamMissing => "upstream-missing",
            ErrorCategory::Parameter => "parameter",
            ErrorCategory::Numerical => "numerical",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data: need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("time axis is empty")]
    EmptyAxis,

    #[error("mode {mode} out of range 1..={available}")]
    ModeOutOfRange { mode: usize, available: usize },

    #[error("no complete locations remain for the EOF matrix")]
    EmptyMatrix,

    #[error("unknown measure '{0}' (expected sep, fim or fsc)")]
    UnknownMeasure(String),

    #[error("unknown region '{0}'")]
    UnknownRegion(String),

    #[error("unknown location {0}")]
    UnknownLocation(String),

    #[error("bad parameters: {0}")]
    BadParameters(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("need at least 2 points on or after the start date, got {0}")]
    InsufficientPoints(usize),

    #[error("abscissa is constant")]
    DegenerateAbscissa,

    #[error("{path}: parse error: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("{path}: schema error: {msg}")]
    Schema { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } => ErrorCategory::Io,
            Error::Parse { .. } => ErrorCategory::Parse,
            Error::Schema { .. } => ErrorCategory::Schema,
            Error::InsufficientData { .. }
            | Error::DegenerateSample(_)
            | Error::DegenerateSeries(_)
            | Error::EmptyMatrix
            | Error::EmptyAxis
            | Error::InsufficientPoints(_)
            | Error::DegenerateAbscissa => ErrorCategory::Degenerate,
            Error::QuadratureFailure(_) | Error::NumericalFailure(_) => ErrorCategory::Numerical,
            Error::ModeOutOfRange { .. }
            | Error::UnknownMeasure(_)
            | Error::UnknownRegion(_)
            | Error::UnknownLocation(_)
            | Error::BadParameters(_)
            | Error::InvalidInput(_) => ErrorCategory::Parameter,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn schema(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
