//! Error type shared by every module of the crate.

use crate::metric::PointId;
use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong while maintaining a clustering.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An insertion named a point that is already active (or was active
    /// before: point identifiers are never recycled).
    #[error("point {0} is already present in the stream")]
    DuplicateInsert(PointId),
    /// A deletion named a point that is not currently active.
    #[error("point {0} is not active")]
    DeleteOfInactive(PointId),
    /// A query named a point the structure has never seen.
    #[error("unknown point {0}")]
    UnknownPoint(PointId),
    /// No threshold of the configured ladder admits a solution; the ladder
    /// does not reach the largest distance of the input.
    #[error("no scale of the ladder yields at most k centers (is r_max too small?)")]
    Infeasible,
    /// The requested hash family does not apply to the metric.
    #[error("unsupported hash family: {0}")]
    UnsupportedKind(String),
    /// The radius is outside the range in which the hash family is sensitive.
    #[error("radius {r} is outside the admissible range (at most {max}) of the hash family")]
    RadiusOutOfRange {
        /// Requested radius.
        r: f64,
        /// Largest admissible radius.
        max: f64,
    },
    /// A clustering-tree node was asked to hold more than `Bk` points.
    #[error("tree node capacity exceeded")]
    CapacityExceeded,
    /// A consistent metric was requested while closed vertices exist.
    #[error("operation {0} is not clean (closed vertices exist)")]
    NotCleanOperation(u64),
    /// An algorithm exceeded its amortized distance-query budget, or a
    /// brute-force oracle was asked for an instance beyond its caps.
    #[error("budget exceeded: used {used}, allowed {allowed}")]
    BudgetExceeded {
        /// Amount consumed.
        used: f64,
        /// Amount permitted.
        allowed: f64,
    },
    /// Configuration values that cannot work together.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// Malformed stream input.
    #[error("parse error on line {line}: {msg}")]
    Parse {
        /// One-based line number.
        line: usize,
        /// What went wrong.
        msg: String,
    },
}
