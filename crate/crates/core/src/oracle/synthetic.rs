use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{check_width, CoalitionValueOracle, InstanceSet, PerfVector};
use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::perturb::DeltaMatrix;
use crate::rng;

/// Closed-form stand-in for a pose model.
///
/// A visible keypoint scores its baseline `b_i`; a hidden one recovers
/// `b_i · Σ_{j visible} w_ij` from its visible neighbours. The optional
/// `coupling` matrix `u` additionally scales either score by
/// `1 − Σ_{j hidden, j≠i} u_ij`, so hiding a neighbour can hurt a visible
/// keypoint too. With `u = 0` (the default) that factor is 1. Optional
/// Gaussian noise is keyed on (instance, coalition, trial).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModelConfig {
    pub base: Vec<f64>,
    pub recovery: Vec<Vec<f64>>,
    /// Empty means all zeros.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coupling: Vec<Vec<f64>>,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub seed: u64,
    /// Number of virtual instances behind the `"all"` instance set.
    #[serde(default = "one")]
    pub instances: usize,
}

fn one() -> usize {
    1
}

fn check_weights(name: &str, w: &[Vec<f64>], n: usize) -> Result<()> {
    if w.len() != n || w.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("{name} weights must be {n}x{n}")));
    }
    for (i, row) in w.iter().enumerate() {
        if row.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::Config(format!("negative or non-finite {name} weight in row {i}")));
        }
        if row[i] != 0.0 {
            return Err(Error::Config(format!("{name} weight [{i}][{i}] must be 0")));
        }
        let sum: f64 = row.iter().sum();
        if sum > 1.0 + 1e-12 {
            return Err(Error::Config(format!("{name} row {i} sums to {sum} > 1")));
        }
    }
    Ok(())
}

impl SyntheticModelConfig {
    pub fn noiseless(base: Vec<f64>, recovery: Vec<Vec<f64>>) -> Self {
        Self {
            base,
            recovery,
            coupling: Vec::new(),
            noise_sd: 0.0,
            seed: 0,
            instances: 1,
        }
    }

    /// A noiseless model whose single-removal drops equal `delta`.
    ///
    /// Off-diagonal drops become coupling `u_ij = Δ_ij / b_i`; the self drop
    /// fixes the recovery mass `1 − Δ_ii / b_i`, spread over the other
    /// keypoints in proportion to `u_ij` (uniformly if that row is zero).
    pub fn from_delta(delta: &DeltaMatrix) -> Result<Self> {
        let n = delta.n();
        let mut coupling = vec![vec![0.0; n]; n];
        let mut recovery = vec![vec![0.0; n]; n];
        for i in 0..n {
            let b = delta.baseline[i];
            if !(b > 0.0) {
                return Err(Error::Config(format!("baseline {i} must be > 0")));
            }
            for j in (0..n).filter(|&j| j != i) {
                coupling[i][j] = delta.drops.get(i, j) / b;
            }
            let mass = (1.0 - delta.drops.get(i, i) / b).max(0.0);
            let total: f64 = coupling[i].iter().sum();
            for j in (0..n).filter(|&j| j != i) {
                let share = if total > 0.0 { coupling[i][j] / total } else { 1.0 / (n - 1) as f64 };
                recovery[i][j] = mass * share;
            }
        }
        let mut cfg = Self::noiseless(delta.baseline.clone(), recovery);
        cfg.coupling = coupling;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.base.len();
        if n == 0 {
            return Err(Error::Config("empty baseline vector".into()));
        }
        if let Some(i) = self.base.iter().position(|&b| !(b > 0.0 && b <= 1.0)) {
            return Err(Error::Config(format!("baseline {i} = {} outside (0, 1]", self.base[i])));
        }
        check_weights("recovery", &self.recovery, n)?;
        if !self.coupling.is_empty() {
            check_weights("coupling", &self.coupling, n)?;
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Config(format!("noise_sd {} must be finite and >= 0", self.noise_sd)));
        }
        if self.instances == 0 {
            return Err(Error::Config("instances must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticOracle {
    cfg: SyntheticModelConfig,
    noise: Option<Normal<f64>>,
}

impl SyntheticOracle {
    pub fn new(cfg: SyntheticModelConfig) -> Result<Self> {
        cfg.validate()?;
        let noise = (cfg.noise_sd > 0.0)
            .then(|| Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::Config(e.to_string())))
            .transpose()?;
        Ok(Self { cfg, noise })
    }

    /// Build and check that the config matches a schema of `n` keypoints.
    pub fn for_schema(cfg: SyntheticModelConfig, n: usize) -> Result<Self> {
        if cfg.base.len() != n {
            return Err(Error::SchemaMismatch {
                expected: n,
                actual: cfg.base.len(),
            });
        }
        Self::new(cfg)
    }

    pub fn config(&self) -> &SyntheticModelConfig {
        &self.cfg
    }

    fn single(&self, instance: &str, coalition: Coalition, trial: u64) -> Vec<f64> {
        let mut noise_rng = self.noise.map(|_| {
            rng::stream(&[
                self.cfg.seed,
                rng::hash_str(instance),
                coalition.bits(),
                coalition.width() as u64,
                trial,
            ])
        });
        (0..self.cfg.base.len())
            .map(|i| {
                let b = self.cfg.base[i];
                let own = if coalition.contains(i) {
                    1.0
                } else {
                    coalition.indices().map(|j| self.cfg.recovery[i][j]).sum::<f64>()
                };
                let attenuation = match self.cfg.coupling.get(i) {
                    Some(u) => 1.0 - (0..u.len()).filter(|&j| !coalition.contains(j)).map(|j| u[j]).sum::<f64>(),
                    None => 1.0,
                };
                let clean = b * own * attenuation.max(0.0);
                let eps = match (&self.noise, noise_rng.as_mut()) {
                    (Some(d), Some(r)) => d.sample(r),
                    _ => 0.0,
                };
                (clean + eps).clamp(0.0, 1.0)
            })
            .collect()
    }
}

impl CoalitionValueOracle for SyntheticOracle {
    fn n(&self) -> usize {
        self.cfg.base.len()
    }

    fn identity(&self) -> String {
        format!(
            "synthetic:n={},coupled={},noise_sd={},seed={},instances={}",
            self.n(),
            !self.cfg.coupling.is_empty(),
            self.cfg.noise_sd,
            self.cfg.seed,
            self.cfg.instances
        )
    }

    fn eval(&self, instances: &InstanceSet, coalition: Coalition, trial: u64) -> Result<PerfVector> {
        check_width(self.n(), &coalition)?;
        let ids: Vec<String> = match instances {
            InstanceSet::All => (0..self.cfg.instances).map(|k| k.to_string()).collect(),
            InstanceSet::Ids(ids) => ids.clone(),
        };
        let mut acc = vec![0.0; self.n()];
        for id in &ids {
            for (a, v) in acc.iter_mut().zip(self.single(id, coalition, trial)) {
                *a += v;
            }
        }
        let k = ids.len() as f64;
        PerfVector::new(acc.into_iter().map(|a| (a / k).clamp(0.0, 1.0)).collect())
    }
}
