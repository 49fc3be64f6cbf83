use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension for {what}: {dim}")]
    InvalidDimension { what: &'static str, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schedule infeasible: coin pulse t_H = {t_h} ns does not fit in step period t_p = {t_p} ns")]
    ScheduleInfeasible { t_h: f64, t_p: f64 },

    #[error("negative propagation time {0} ns")]
    NegativeTime(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("propagation failed in segment {segment}: {source}")]
    Propagation {
        segment: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("phase grid of {m} points cannot resolve a Fock space of dimension {fock_dim}")]
    Resolution { m: usize, fock_dim: usize },

    #[error("flat phase distribution (sharpness {sharpness:e}); Holevo deviation is unbounded")]
    FlatDistribution { sharpness: f64 },

    #[error("fit domain: {0}")]
    FitDomain(String),

    #[error("ensemble size {0} outside 1..=4")]
    EnsembleSize(usize),

    #[error("configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
