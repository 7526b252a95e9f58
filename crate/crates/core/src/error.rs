//! Error type shared across the toolkit.
//!
//! Every fallible operation returns [`Result`]. Variants are grouped by the
//! stage that raises them: file loading, input validation, and the numeric
//! failure modes of the individual tests.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("cannot parse {value:?} as a number ({path}, data row {row}, column {column:?})")]
    ParseCell {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("non-finite value in {path} (data row {row}, column {column:?})")]
    NonFiniteCell {
        path: PathBuf,
        row: usize,
        column: String,
    },

    #[error("header mismatch at position {position}: {left:?} vs {right:?}")]
    HeaderMismatch {
        position: usize,
        left: String,
        right: String,
    },

    #[error("row count mismatch: first sample has {rows_x} rows, second has {rows_y}")]
    RowCountMismatch { rows_x: usize, rows_y: usize },

    #[error("feature name at position {position} is empty")]
    EmptyFeatureName { position: usize },

    #[error("duplicate feature name {name:?}")]
    DuplicateFeatureName { name: String },

    #[error("non-finite value in sample {sample} (row {row}, column {column})")]
    NonFinite {
        sample: &'static str,
        row: usize,
        column: usize,
    },

    #[error("dimension mismatch: {left} vs {right} ({context})")]
    DimensionMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },

    #[error("empty input: {context}")]
    EmptyInput { context: &'static str },

    #[error("invalid argument: {message}")]
    InvalidArgument { message: String },

    #[error("feature {index} ({name:?}) is constant across both samples; cannot standardize")]
    DegenerateFeature { index: usize, name: String },

    #[error("all differences are zero; the test statistic is undefined")]
    AllZeroDifferences,

    #[error("exact mode supports at most {cap} nonzero differences, got {n}")]
    ExactModeCap { n: usize, cap: usize },

    #[error("exact mode cannot handle tied absolute differences")]
    TiesInExactMode,

    #[error("matrix is numerically singular (pivot {pivot:.3e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error(
        "sample covariance of the differences is singular ({pairs} pairs, {features} features); \
         the T-squared statistic requires more pairs than features"
    )]
    SingularCovariance { pairs: usize, features: usize },

    #[error("pair at row {row} is degenerate: the two points coincide")]
    DegeneratePair { row: usize },

    #[error("need at least 2 non-degenerate pairs, found {found}")]
    InsufficientPairs { found: usize },

    #[error("scoring rule has a zero coefficient vector")]
    DegenerateRule,

    #[error("special function did not converge: {context}")]
    NoConvergence { context: &'static str },
}

impl Error {
    /// True for errors caused by unusable input (files, shapes, parameters),
    /// as opposed to a method failing on valid input.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Csv { .. }
                | Error::ParseCell { .. }
                | Error::NonFiniteCell { .. }
                | Error::HeaderMismatch { .. }
                | Error::RowCountMismatch { .. }
                | Error::EmptyFeatureName { .. }
                | Error::DuplicateFeatureName { .. }
                | Error::NonFinite { .. }
                | Error::DimensionMismatch { .. }
                | Error::EmptyInput { .. }
                | Error::InvalidArgument { .. }
        )
    }
}
