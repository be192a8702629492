use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (relative skew {skew:e})")]
    NotSymmetric { skew: f64 },
    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },
    #[error("divisor must be at least 1")]
    ZeroDivisor,
    #[error("projection columns are not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("trade-off weight {0} outside [0, 1]")]
    WeightOutOfRange(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("line {line}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumeric {
        line: usize,
        column: String,
        value: String,
    },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("sensitive column must hold exactly 2 distinct values, found {0}")]
    GroupCount(usize),
    #[error("group `{0}` has no rows")]
    EmptyGroup(String),
    #[error("table has no feature columns")]
    NoFeatures,
    #[error("malformed report: {0}")]
    Report(String),
}

/// Coarse classification used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. }
            | Error::Csv(_)
            | Error::MissingColumn(_)
            | Error::NonNumeric { .. }
            | Error::RaggedRow { .. }
            | Error::GroupCount(_)
            | Error::EmptyGroup(_)
            | Error::NoFeatures
            | Error::Report(_) => ErrorKind::Data,
            _ => ErrorKind::Numeric,
        }
    }
}
