use std::path::PathBuf;

use thiserror::Error;

use crate::data::YearMonth;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numerical => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("duplicate row for unit {unit} at {month}")]
    DuplicateKey { unit: String, month: YearMonth },

    #[error("line {line}: unparseable date {value:?} (expected YYYY-MM)")]
    BadDate { line: usize, value: String },

    #[error("line {line}: non-numeric value {value:?} in column {column}")]
    NonNumeric {
        line: usize,
        column: String,
        value: String,
    },

    #[error("calendar gap for unit {unit}: {missing} absent between {before} and {after}")]
    CalendarGap {
        unit: String,
        missing: YearMonth,
        before: YearMonth,
        after: YearMonth,
    },

    #[error("missing value in column {column} for unit {unit} at {month}")]
    MissingValue {
        column: String,
        unit: String,
        month: YearMonth,
    },

    #[error("missing column {0}")]
    MissingColumn(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("degenerate range (max == min) for {slot}")]
    DegenerateRange { slot: String },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("stage `{stage}` failed: {source}\n  resume with: {resume}")]
    Stage {
        stage: String,
        resume: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::DegenerateRange { .. }
            | Error::DegenerateFit(_)
            | Error::Numerical(_)
            | Error::NonConvergence(_) => ErrorKind::Numerical,
            Error::Stage { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }

    /// Prefixes the message of string-carrying variants, keeping the kind.
    pub fn context(self, what: &str) -> Self {
        match self {
            Error::Data(m) => Error::Data(format!("{what}: {m}")),
            Error::DegenerateFit(m) => Error::DegenerateFit(format!("{what}: {m}")),
            Error::Numerical(m) => Error::Numerical(format!("{what}: {m}")),
            Error::NonConvergence(m) => Error::NonConvergence(format!("{what}: {m}")),
            Error::Config(m) => Error::Config(format!("{what}: {m}")),
            other => other,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind().exit_code()
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
