use serde::{Deserialize, Serialize};

use crate::grouping::Grouping;

/// Oracle work for one attribution strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryBudget {
    pub distinct_coalitions: u128,
    /// `distinct_coalitions × trials × instance batches`.
    pub oracle_calls: u128,
}

/// Group Shapley versus full enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub n: usize,
    pub g: usize,
    pub gsv: QueryBudget,
    pub exact: QueryBudget,
}

impl CostReport {
    pub fn with_trials(mut self, trials: usize, batches: usize) -> Self {
        let k = (trials * batches) as u128;
        self.gsv.oracle_calls = self.gsv.distinct_coalitions * k;
        self.exact.oracle_calls = self.exact.distinct_coalitions * k;
        self
    }
}

/// `Σ_k 2^{|G_k|} + 2^g` coalitions for group Shapley versus `2^n`.
pub fn query_count(grouping: &Grouping) -> CostReport {
    let pow = |k: usize| 1u128 << k;
    let gsv = grouping.sizes().into_iter().map(pow).sum::<u128>() + pow(grouping.g());
    let exact = pow(grouping.n());
    CostReport {
        n: grouping.n(),
        g: grouping.g(),
        gsv: QueryBudget {
            distinct_coalitions: gsv,
            oracle_calls: gsv,
        },
        exact: QueryBudget {
            distinct_coalitions: exact,
            oracle_calls: exact,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coco_grouping() {
        let c = query_count(&Grouping::from_sizes(&[5, 3, 3, 3, 3]).unwrap());
        assert_eq!(c.gsv.distinct_coalitions, 96);
        assert_eq!(c.exact.distinct_coalitions, 131_072);
    }

    #[test]
    fn degenerate_groupings() {
        let n = 10;
        let s = query_count(&Grouping::singletons(n));
        assert_eq!(s.gsv.distinct_coalitions, 2 * n as u128 + (1 << n));
        let one = query_count(&Grouping::from_sizes(&[n]).unwrap());
        assert_eq!(one.gsv.distinct_coalitions, (1 << n) + 2);
    }

    #[test]
    fn trials_scale_calls() {
        let c = query_count(&Grouping::from_sizes(&[2, 2]).unwrap()).with_trials(3, 1);
        assert_eq!(c.gsv.distinct_coalitions, 12);
        assert_eq!(c.gsv.oracle_calls, 36);
        assert!(c.gsv.distinct_coalitions <= c.gsv.oracle_calls);
    }
}
