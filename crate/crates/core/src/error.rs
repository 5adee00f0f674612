//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch between {lhs_rows}x{lhs_cols} and {rhs_rows}x{rhs_cols}")]
    ShapeMismatch {
        op: &'static str,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },

    #[error("{op}: produced a non-finite value")]
    NonFinite { op: &'static str },

    /// A caller broke an API contract (e.g. backward on a non-scalar loss).
    #[error("{0}")]
    Contract(String),

    #[error("input CSV is missing required columns: {}", missing.join(", "))]
    MissingColumns { missing: Vec<String> },

    #[error("{0}")]
    EmptyInput(String),

    #[error("no coordinates found for stations: {}", stations.join(", "))]
    MissingCoordinates { stations: Vec<String> },

    #[error("training diverged at epoch {epoch}, batch {batch}: {details}")]
    TrainingDiverged {
        epoch: usize,
        batch: usize,
        details: String,
    },

    #[error("{0}")]
    InvalidConfig(String),

    #[error("station mismatch: {0}")]
    StationMismatch(String),

    #[error("unsupported artifact: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the error is caused by user input (bad files, bad config)
    /// rather than a broken internal invariant. CLI exit codes key off this.
    pub fn is_user_error(&self) -> bool {
        !matches!(
            self,
            Error::ShapeMismatch { .. } | Error::NonFinite { .. } | Error::Contract(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
