//! Game-theoretic attribution for multi-keypoint predictors.
//!
//! The pipeline treats a pose model as a black-box coalition-value oracle,
//! measures how much hiding one keypoint hurts every other keypoint, fuses
//! that with skeleton connectivity to group keypoints, and then computes
//! exact Shapley values inside each group plus exact Shapley values over
//! groups. The same grouping drives group-based keypoint removal, an
//! augmentation that erases at most one keypoint per group.
//!
//! Performance values are fractions in `[0, 1]` in memory; tables on disk
//! use percent. [`to_percent`] and [`from_percent`] are the only converters.

pub mod analysis;
pub mod coalition;
pub mod error;
pub mod gkr;
pub mod grouping;
pub mod matrix;
pub mod oracle;
pub mod perturb;
pub mod rect;
pub mod reference;
pub mod rng;
pub mod shapley;
pub mod skeleton;

pub use coalition::Coalition;
pub use error::{Error, Result};
pub use grouping::{cluster, interdependency, Grouping, InterdependencyMatrix, Linkage};
pub use matrix::SquareMatrix;
pub use oracle::{CoalitionValueOracle, InstanceSet, PerfVector};
pub use perturb::{delta_perf_matrix, perturbation_influence, DeltaMatrix};
pub use skeleton::{KeypointSchema, Skeleton};

pub fn to_percent(fraction: f64) -> f64 {
    fraction * 100.0
}

pub fn from_percent(percent: f64) -> f64 {
    percent / 100.0
}
