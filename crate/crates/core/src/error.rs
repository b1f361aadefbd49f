use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh invariant violated: {0}")]
    Invariant(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("conflicting constraint on dof {dof}: {first} vs {second}")]
    Constraint { dof: usize, first: f64, second: f64 },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("nonlinear solver stagnated; residual history {history:?}")]
    NonlinearStagnation { history: Vec<f64> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("interpolation error: {0}")]
    Interpolation(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("scoring error: {0}")]
    Scoring(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
