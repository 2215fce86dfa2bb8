use std::fmt;

use thiserror::Error;

/// Which model density produced a bad value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Density {
    Transition,
    Observation,
    Proposal,
    Resampling,
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Density::Transition => "transition density",
            Density::Observation => "observation density",
            Density::Proposal => "proposal density",
            Density::Resampling => "resampling weight",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite state at t={t} for theta={theta:?}")]
    NonFiniteState { t: usize, theta: Vec<f64> },

    #[error("all importance weights vanished at t={t}")]
    WeightDegeneracy { t: usize },

    #[error("{density} returned {value} at t={t}, particle {particle}")]
    BadDensity {
        density: Density,
        value: f64,
        t: usize,
        particle: usize,
    },

    #[error("dataset has no state trajectory")]
    MissingTrajectory,

    #[error("empty sample pool")]
    EmptyPool,

    #[error("{samples} pooled samples is fewer than {bins} histogram bins")]
    InsufficientSamples { samples: usize, bins: usize },

    #[error("objective is -inf at the initial point")]
    InfeasibleStart,

    #[error("objective returned NaN at {0:?}")]
    ObjectiveNaN(Vec<f64>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no run completed: {0}")]
    NoCompletedRun(String),

    #[error("malformed archive: {0}")]
    Archive(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Re-tags a degeneracy error with the filter step it happened at.
    pub(crate) fn at_step(self, t: usize) -> Self {
        match self {
            Error::WeightDegeneracy { .. } => Error::WeightDegeneracy { t },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
