use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation precondition (shape, symmetry, sign of a parameter).
    #[error("contract violation in {op}: {msg}")]
    Contract { op: &'static str, msg: String },

    #[error("insufficient spectrum: requested {requested} eigenpairs, only {available} available")]
    InsufficientSpectrum { requested: usize, available: usize },

    #[error("invalid neighbor count k={k} for {n} samples (need 1 <= k <= n-1)")]
    InvalidK { k: usize, n: usize },

    #[error("degenerate local geometry at sample {sample}: {msg}")]
    DegenerateGeometry { sample: usize, msg: String },

    #[error("degenerate similarity graph: row {row} has zero sum")]
    DegenerateGraph { row: usize },

    #[error("degenerate update: {0}")]
    DegenerateUpdate(String),

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("view {view} has {rows} rows, expected {expected}")]
    Alignment {
        view: String,
        rows: usize,
        expected: usize,
    },

    #[error("parse error in {} at row {row}, column {col}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        col: usize,
        msg: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Wraps an inner error with the location it surfaced from (view, iteration, ...).
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn contract(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Contract {
            op,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Strips any `Context` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) trait ResultExt<T> {
    fn context(self, ctx: impl FnOnce() -> String) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context(self, ctx: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| Error::Context {
            context: ctx(),
            source: Box::new(source),
        })
    }
}
