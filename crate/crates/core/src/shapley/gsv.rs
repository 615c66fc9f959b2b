use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_players, shapley_from_values, ShapleyTable};
use crate::coalition::{embed, Coalition};
use crate::error::{Error, Result};
use crate::grouping::Grouping;
use crate::oracle::{CoalitionValueOracle, InstanceSet};
use crate::perturb::trial_seed;

/// Evaluation settings shared by every game in a group Shapley run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GsvConfig {
    pub instances: InstanceSet,
    /// Oracle trials averaged per coalition value.
    pub trials: usize,
    pub seed: u64,
}

impl Default for GsvConfig {
    fn default() -> Self {
        Self {
            instances: InstanceSet::All,
            trials: 1,
            seed: 0,
        }
    }
}

/// Evaluate each coalition `trials` times and average per keypoint.
fn evaluate<O: CoalitionValueOracle + ?Sized>(
    oracle: &O,
    coalitions: &[Coalition],
    cfg: &GsvConfig,
) -> Result<Vec<Vec<f64>>> {
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    coalitions
        .par_iter()
        .map(|&c| {
            let mut acc = vec![0.0; oracle.n()];
            for t in 0..cfg.trials {
                let p = oracle.eval(&cfg.instances, c, trial_seed(cfg.seed, t))?;
                for (a, v) in acc.iter_mut().zip(p.values()) {
                    *a += v;
                }
            }
            Ok(acc.into_iter().map(|a| a / cfg.trials as f64).collect())
        })
        .collect()
}

fn check_grouping<O: CoalitionValueOracle + ?Sized>(oracle: &O, grouping: &Grouping) -> Result<()> {
    if oracle.n() != grouping.n() {
        return Err(Error::SchemaMismatch {
            expected: grouping.n(),
            actual: oracle.n(),
        });
    }
    Ok(())
}

/// The within-group game of group `h`: members vary, everything outside the
/// group stays visible. Returns per-keypoint values indexed by member mask.
fn intra_values<O: CoalitionValueOracle + ?Sized>(
    oracle: &O,
    grouping: &Grouping,
    h: usize,
    cfg: &GsvConfig,
) -> Result<Vec<Vec<f64>>> {
    let members = grouping.group(h);
    check_players(members.len())?;
    let n = grouping.n();
    let outside = members.iter().fold(Coalition::full(n), |c, &i| c.without(i));
    let coalitions: Vec<Coalition> = (0..1u64 << members.len())
        .map(|m| embed(m, members, outside))
        .collect();
    evaluate(oracle, &coalitions, cfg)
}

/// The game with groups as players. Returns per-keypoint values indexed by
/// group mask.
fn group_values<O: CoalitionValueOracle + ?Sized>(
    oracle: &O,
    grouping: &Grouping,
    cfg: &GsvConfig,
) -> Result<Vec<Vec<f64>>> {
    let g = grouping.g();
    check_players(g)?;
    let n = grouping.n();
    let coalitions: Vec<Coalition> = (0..1u64 << g)
        .map(|m| {
            (0..g)
                .filter(|h| m >> h & 1 == 1)
                .flat_map(|h| grouping.group(h).iter().copied())
                .fold(Coalition::empty(n), Coalition::with)
        })
        .collect();
    evaluate(oracle, &coalitions, cfg)
}

fn intra_table(members: &[usize], target: usize, values: &[Vec<f64>]) -> Result<ShapleyTable> {
    let scalar: Vec<f64> = values.iter().map(|v| v[target]).collect();
    Ok(ShapleyTable {
        target,
        players: members.to_vec(),
        phi: shapley_from_values(members.len(), &scalar)?,
        full_value: scalar[scalar.len() - 1],
        empty_value: scalar[0],
    })
}

fn group_table(grouping: &Grouping, h: usize, values: &[Vec<f64>]) -> Result<ShapleyTable> {
    let members = grouping.group(h);
    let scalar: Vec<f64> = values
        .iter()
        .map(|v| members.iter().map(|&k| v[k]).sum::<f64>() / members.len() as f64)
        .collect();
    Ok(ShapleyTable {
        target: h,
        players: (0..grouping.g()).collect(),
        phi: shapley_from_values(grouping.g(), &scalar)?,
        full_value: scalar[scalar.len() - 1],
        empty_value: scalar[0],
    })
}

/// Shapley values of the members of `target`'s group for predicting `target`,
/// with keypoints outside the group held visible.
pub fn intra_group_shapley<O: CoalitionValueOracle + ?Sized>(
    oracle: &O,
    grouping: &Grouping,
    target: usize,
    cfg: &GsvConfig,
) -> Result<ShapleyTable> {
    check_grouping(oracle, grouping)?;
    if target >= grouping.n() {
        return Err(Error::Config(format!("target keypoint {target} out of range")));
    }
    let h = grouping.group_of(target);
    let values = intra_values(oracle, grouping, h, cfg)?;
    intra_table(grouping.group(h), target, &values)
}

/// Shapley values of every group for the mean performance of group `h`.
pub fn group_shapley<O: CoalitionValueOracle + ?Sized>(
    oracle: &O,
    grouping: &Grouping,
    h: usize,
    cfg: &GsvConfig,
) -> Result<ShapleyTable> {
    check_grouping(oracle, grouping)?;
    if h >= grouping.g() {
        return Err(Error::Config(format!("target group {h} out of range")));
    }
    let values = group_values(oracle, grouping, cfg)?;
    group_table(grouping, h, &values)
}

/// All intra-group tables (one per keypoint) and group tables (one per
/// group) of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GsvTables {
    pub intra: Vec<ShapleyTable>,
    pub group: Vec<ShapleyTable>,
}

impl GsvTables {
    /// Play each within-group game and the group game once, sharing the
    /// coalition table across all targets of a game.
    ///
    /// The oracle sees `Σ_k 2^{|G_k|} + 2^g` coalitions, each `trials` times.
    pub fn compute<O: CoalitionValueOracle + ?Sized>(
        oracle: &O,
        grouping: &Grouping,
        cfg: &GsvConfig,
    ) -> Result<Self> {
        check_grouping(oracle, grouping)?;
        let mut intra: Vec<Option<ShapleyTable>> = vec![None; grouping.n()];
        for h in 0..grouping.g() {
            let values = intra_values(oracle, grouping, h, cfg)?;
            for &i in grouping.group(h) {
                intra[i] = Some(intra_table(grouping.group(h), i, &values)?);
            }
        }
        let values = group_values(oracle, grouping, cfg)?;
        let group = (0..grouping.g())
            .map(|h| group_table(grouping, h, &values))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            intra: intra.into_iter().map(|t| t.expect("every keypoint has a group")).collect(),
            group,
        })
    }
}
