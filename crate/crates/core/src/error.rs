use thiserror::Error;

/// Errors produced anywhere in the selection pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("non-finite value encountered in {context}")]
    NotFinite { context: &'static str },

    #[error(
        "within-class covariance is singular (pivot {pivot} = {value:e} below threshold {threshold:e}); \
         the projected dimension may exceed the effective sample rank"
    )]
    SingularWithinCovariance {
        pivot: usize,
        value: f64,
        threshold: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("row {row} has {found} fields, expected {expected}")]
    InconsistentWidth {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("label {label} at row {row} is outside 0..={k}")]
    LabelOutOfRange { row: usize, label: usize, k: usize },

    #[error("column {column} has zero variance")]
    ZeroVarianceColumn { column: usize },

    #[error("no labeled observations available")]
    NoLabeledData,

    #[error("label vectors differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("every projection in group {group} failed: {last}")]
    GroupFailed { group: usize, last: Box<Error> },

    #[error("all {starts} EM runs failed: {last}")]
    AllRunsFailed { starts: usize, last: Box<Error> },

    #[error("i/o error: {0}")]
    Io(String),
}

/// Broad failure category, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidConfig(_) | Error::InvalidDimension(_) => ErrorKind::Config,
            Error::Parse { .. }
            | Error::InconsistentWidth { .. }
            | Error::LabelOutOfRange { .. }
            | Error::ZeroVarianceColumn { .. }
            | Error::LengthMismatch { .. }
            | Error::NoLabeledData
            | Error::Io(_) => ErrorKind::Data,
            Error::NotSymmetric { .. }
            | Error::NotFinite { .. }
            | Error::SingularWithinCovariance { .. }
            | Error::DimensionMismatch { .. }
            | Error::GroupFailed { .. }
            | Error::AllRunsFailed { .. } => ErrorKind::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
