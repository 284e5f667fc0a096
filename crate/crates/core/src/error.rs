//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column '{0}' not found in input file")]
    MissingColumn(String),

    #[error("fewer than 2 usable rows remain after filtering ({kept} kept, {dropped} dropped)")]
    EmptyAfterFiltering { kept: usize, dropped: usize },

    #[error("could not parse input file: {0}")]
    UnparseableFile(String),

    #[error("index {index} out of range for sample of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),

    #[error("degenerate bandwidth: sample has no spread")]
    DegenerateBandwidth,

    #[error("no analytic influence function for {0}")]
    NoAnalyticForm(&'static str),

    #[error("too few distinct values to place knots")]
    TooFewDistinctValues,

    #[error("singular spline design even after dropping basis terms")]
    SingularDesign,

    #[error("design matrix is rank deficient")]
    RankDeficientDesign,

    #[error("effect report does not match the supplied specification: {0}")]
    SpecMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("replication {rep} (stream {stream}) failed: {source}")]
    ReplicationFailed {
        rep: usize,
        stream: u64,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
