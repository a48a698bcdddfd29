use std::path::PathBuf;

use crate::io::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed counts: runs sum to {actual}, expected {expected} (height*width)")]
    MalformedCounts { expected: u64, actual: u64 },

    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    #[error("dimension mismatch: {left:?} vs {right:?} (height, width)")]
    DimensionMismatch { left: (u32, u32), right: (u32, u32) },

    #[error("cost matrix is empty ({rows}x{cols})")]
    EmptyCostMatrix { rows: usize, cols: usize },

    #[error("cost matrix has {len} entries, expected {rows}x{cols}")]
    CostShape { rows: usize, cols: usize, len: usize },

    #[error("cost entry ({row}, {col}) = {value} is not a finite non-negative number")]
    InvalidCost { row: usize, col: usize, value: f64 },

    #[error("exhaustive assignment limited to min(rows, cols) <= {limit}, got {size}")]
    AssignmentTooLarge { size: usize, limit: usize },

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("class mismatch: `{left}` vs `{right}`")]
    ClassMismatch { left: String, right: String },

    #[error("duplicate track id {track_id} for class `{class}` in frame {frame_id}")]
    DuplicateTrackId {
        class: String,
        track_id: u64,
        frame_id: u64,
    },

    #[error("thing segment of class `{class}` in frame {frame_id} has no track id")]
    MissingTrackId { class: String, frame_id: u64 },

    #[error("duplicate frame id {0}")]
    DuplicateFrameId(u64),

    #[error("multi-label input in frame {frame_id}: `{first}` overlaps `{second}`; flatten first")]
    MultiLabelInput {
        frame_id: u64,
        first: String,
        second: String,
    },

    #[error("prediction matching is not unique for class `{class}` in frame {frame_id}")]
    AmbiguousMatch { class: String, frame_id: u64 },

    #[error("invalid temporal window: {0}")]
    InvalidWindow(String),

    #[error("taxonomy: {0}")]
    Taxonomy(#[from] TaxonomyError),

    #[error("{} validation error(s)", .0.len())]
    Validation(Vec<Violation>),

    #[error("infeasible synthetic parameters: {0}")]
    InfeasibleParams(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("{path}: schema error: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Internal(String),
}

impl Error {
    /// Errors caused by bad inputs or configuration, as opposed to bugs or I/O.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Internal(_))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedCounts { .. } => "malformed-counts",
            Error::InvalidCounts(_) => "invalid-counts",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::EmptyCostMatrix { .. } => "empty-matrix",
            Error::CostShape { .. } | Error::InvalidCost { .. } => "invalid-cost",
            Error::AssignmentTooLarge { .. } => "size-limit",
            Error::UnknownClass(_) => "unknown-class",
            Error::ClassMismatch { .. } => "class-mismatch",
            Error::DuplicateTrackId { .. } => "duplicate-track-id",
            Error::MissingTrackId { .. } => "missing-track-id",
            Error::DuplicateFrameId(_) => "duplicate-frame-id",
            Error::MultiLabelInput { .. } => "multi-label-input",
            Error::AmbiguousMatch { .. } => "ambiguous-match",
            Error::InvalidWindow(_) => "invalid-window",
            Error::Taxonomy(e) => e.kind(),
            Error::Validation(_) => "validation",
            Error::InfeasibleParams(_) => "infeasible-params",
            Error::InvalidParams(_) => "invalid-params",
            Error::Schema { .. } => "schema",
            Error::Io { .. } => "io",
            Error::Internal(_) => "internal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaxonomyError {
    #[error("duplicate class name `{0}`")]
    DuplicateName(String),
    #[error("duplicate class id {0}")]
    DuplicateId(u32),
    #[error("class `{name}` has bad kind `{value}` (expected thing|stuff)")]
    BadKind { name: String, value: String },
    #[error("class `{name}` has bad split `{value}` (expected known|unknown)")]
    BadSplit { name: String, value: String },
    #[error("alias `{alias}` points at unknown class `{target}`")]
    UnknownAliasTarget { alias: String, target: String },
    #[error("taxonomy needs at least one thing and one stuff class")]
    MissingKind,
}

impl TaxonomyError {
    pub fn kind(&self) -> &'static str {
        match self {
            TaxonomyError::DuplicateName(_) => "duplicate-name",
            TaxonomyError::DuplicateId(_) => "duplicate-id",
            TaxonomyError::BadKind { .. } => "bad-kind",
            TaxonomyError::BadSplit { .. } => "bad-split",
            TaxonomyError::UnknownAliasTarget { .. } => "unknown-alias-target",
            TaxonomyError::MissingKind => "missing-kind",
        }
    }
}
