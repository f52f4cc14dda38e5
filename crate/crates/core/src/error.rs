use std::path::PathBuf;

use thiserror::Error;

use crate::graph::GraphError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite angle {0}")]
    NonFinite(f64),

    #[error(transparent)]
    Graph(#[from] GraphError),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("estimated {estimate} operations exceeds budget {budget}")]
    Budget { estimate: u128, budget: u128 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("policy has no decision for state {state:?} at t={t:?}")]
    PolicyCoverage { state: Vec<usize>, t: Option<usize> },

    #[error("{0}")]
    Config(String),

    #[error("property check failed: {0}")]
    Property(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Budget { .. } => 3,
            Error::Numerical(_) => 4,
            Error::Property(_) => 5,
            Error::Io { .. } => 1,
            _ => 2,
        }
    }

    /// Stable machine-parsable prefix for one-line error reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonFinite(_) => "E_DOMAIN",
            Error::Graph(_) => "E_GRAPH",
            Error::Dimension { .. } => "E_DIMENSION",
            Error::Budget { .. } => "E_BUDGET",
            Error::Numerical(_) => "E_NUMERICAL",
            Error::PolicyCoverage { .. } => "E_POLICY",
            Error::Config(_) => "E_CONFIG",
            Error::Property(_) => "E_PROPERTY",
            Error::Io { .. } => "E_IO",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
