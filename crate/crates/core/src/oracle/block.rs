use rand::Rng;

use super::{check_width, CoalitionValueOracle, InstanceSet, PerfVector};
use crate::coalition::Coalition;
use crate::error::Result;
use crate::grouping::Grouping;
use crate::rng;

/// Random block-separable oracle: keypoint `i` reads only the visibility of
/// its own group, through an arbitrary lookup table drawn from `seed`.
///
/// Within-group Shapley values of such an oracle must agree with full
/// enumeration, and every other group is a dummy in the group game.
#[derive(Clone, Debug)]
pub struct BlockOracle {
    grouping: Grouping,
    seed: u64,
    /// `tables[i][local_mask]`, local bits ordered like the group's members.
    tables: Vec<Vec<f64>>,
}

impl BlockOracle {
    pub fn random(grouping: Grouping, seed: u64) -> Self {
        let tables = (0..grouping.n())
            .map(|i| {
                let size = grouping.group(grouping.group_of(i)).len();
                let mut r = rng::stream(&[seed, i as u64]);
                (0..1usize << size).map(|_| r.gen::<f64>()).collect()
            })
            .collect();
        Self { grouping, seed, tables }
    }

    pub fn grouping(&self) -> &Grouping {
        &self.grouping
    }
}

impl CoalitionValueOracle for BlockOracle {
    fn n(&self) -> usize {
        self.grouping.n()
    }

    fn identity(&self) -> String {
        format!("block:n={},g={},seed={}", self.n(), self.grouping.g(), self.seed)
    }

    fn eval(&self, _instances: &InstanceSet, coalition: Coalition, _trial: u64) -> Result<PerfVector> {
        check_width(self.n(), &coalition)?;
        let values = (0..self.n())
            .map(|i| {
                let members = self.grouping.group(self.grouping.group_of(i));
                let local = members
                    .iter()
                    .enumerate()
                    .filter(|&(_, &k)| coalition.contains(k))
                    .fold(0usize, |m, (b, _)| m | 1 << b);
                self.tables[i][local]
            })
            .collect();
        PerfVector::new(values)
    }
}
