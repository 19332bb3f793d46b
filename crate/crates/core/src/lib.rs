//! Fully dynamic metric clustering.
//!
//! This crate maintains approximate clusterings of a point set that changes
//! through insertions and deletions, while counting every distance
//! evaluation it performs:
//!
//! * [`kcenter`]: randomized `(2+ε)`-approximate k-center, built from one
//!   top-`(k+1)` lexicographically-first maximal independent set
//!   ([`lfmis`]) per distance threshold.
//! * [`lsh`]: the same engine driven by locality-sensitive hashing, so that
//!   neighbor searches touch only colliding buckets.
//! * [`tree`]: a deterministic clustering tree that stays correct against
//!   adaptive adversaries.
//! * [`sum_radii`]: a primal-dual bi-criteria algorithm for k-sum-of-radii
//!   and k-sum-of-diameters, re-solved offline to `k` clusters.
//! * [`adversary`]: executable lower-bound constructions, namely a metric-adaptive
//!   adversary and a planted hard-instance generator.
//! * [`oracle`]: brute-force ground truth used by the test suites.
//!
//! All algorithms talk to the data through the [`Metric`] trait, which
//! counts queries; [`DistanceOracle`] is the standard implementation for
//! coordinate, set and matrix data.

pub mod adversary;
pub mod error;
pub mod kcenter;
pub mod lfmis;
pub mod lsh;
pub mod metric;
pub mod oracle;
pub mod sum_radii;
pub mod tree;

pub use error::{Error, Result};

pub use lfmis::{LfmisInstance, Rank};

pub use metric::{ActiveSet, DistanceOracle, Metric, MetricKind, PointId, ScaleLadder, StreamStats, UpdateOp};

pub use adversary::{
    AdversaryMetric, AdversaryState, AnchorStrategy, BudgetFn, DiameterReporter, GauntletAlgorithm, GauntletConfig,
    GauntletReport, Label, MetricSpec, PlantedInstance,
};
pub use kcenter::{KCenterConfig, KCenterEngine, KCenterSolution, RestartConfig};
pub use lsh::{HashFamilyKind, LshConfig, LshFamily, LshIndex, LshKCenter, LshParams};
pub use sum_radii::{SumRadiiConfig, SumRadiiEngine, SumRadiiSolution};
pub use tree::{TreeConfig, TreeEngine};
