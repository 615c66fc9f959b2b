//! Coalition-value oracles: the black-box model seen as a function from a
//! set of visible keypoints to per-keypoint performance.
//!
//! Three backends are provided: an exact lookup table ([`TabularOracle`]),
//! a closed-form test double ([`SyntheticOracle`]) and a child process
//! speaking line-delimited JSON ([`ExternalOracle`]). [`CountingOracle`]
//! wraps any of them to record the coalitions it is asked about.
//! [`BlockOracle`] is a random block-separable oracle for equivalence checks.

mod block;
mod counting;
mod external;
mod synthetic;
mod tabular;

pub use block::BlockOracle;
pub use counting::CountingOracle;
pub use external::{serve, ExternalOracle, Hello, Request, Response};
pub use synthetic::{SyntheticModelConfig, SyntheticOracle};
pub use tabular::TabularOracle;

use serde::{Deserialize, Serialize};

use crate::coalition::Coalition;
use crate::error::{Error, Result};

/// Which evaluation instances to average over.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub enum InstanceSet {
    #[default]
    All,
    Ids(Vec<String>),
}

impl InstanceSet {
    pub fn ids(ids: impl IntoIterator<Item = impl Into<String>>) -> Result<Self> {
        let ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        if ids.is_empty() {
            return Err(Error::Config("instance set must not be empty".into()));
        }
        Ok(InstanceSet::Ids(ids))
    }

    /// Wire form: `["all"]` or the explicit id list.
    pub fn to_wire(&self) -> Vec<String> {
        match self {
            InstanceSet::All => vec!["all".to_owned()],
            InstanceSet::Ids(ids) => ids.clone(),
        }
    }

    pub fn from_wire(ids: Vec<String>) -> Result<Self> {
        if ids.len() == 1 && ids[0] == "all" {
            Ok(InstanceSet::All)
        } else {
            Self::ids(ids)
        }
    }
}

/// Per-keypoint performance in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PerfVector(Vec<f64>);

impl PerfVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::MalformedTable(format!(
                    "performance value {v} for keypoint {i} outside [0, 1]"
                )));
            }
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for PerfVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Black-box evaluator `(instances, coalition, trial) → PerfVector`.
///
/// Implementations must be deterministic in their arguments and safe to call
/// from many threads at once.
pub trait CoalitionValueOracle: Send + Sync {
    /// Number of keypoints the oracle scores.
    fn n(&self) -> usize;

    /// Short description recorded in run manifests.
    fn identity(&self) -> String;

    fn eval(&self, instances: &InstanceSet, coalition: Coalition, trial: u64) -> Result<PerfVector>;
}

impl<O: CoalitionValueOracle + ?Sized> CoalitionValueOracle for &O {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn identity(&self) -> String {
        (**self).identity()
    }
    fn eval(&self, instances: &InstanceSet, coalition: Coalition, trial: u64) -> Result<PerfVector> {
        (**self).eval(instances, coalition, trial)
    }
}

impl<O: CoalitionValueOracle + ?Sized> CoalitionValueOracle for Box<O> {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn identity(&self) -> String {
        (**self).identity()
    }
    fn eval(&self, instances: &InstanceSet, coalition: Coalition, trial: u64) -> Result<PerfVector> {
        (**self).eval(instances, coalition, trial)
    }
}

pub(crate) fn check_width(n: usize, coalition: &Coalition) -> Result<()> {
    if coalition.width() != n {
        return Err(Error::SchemaMismatch {
            expected: n,
            actual: coalition.width(),
        });
    }
    Ok(())
}
