//! Exact Shapley values and the two-level group Shapley scheme.
//!
//! Every game here is solved by full enumeration over its (small) player
//! set: the coalition values are tabulated once, then the classic weights
//! `|S|!·(n−|S|−1)!/n!` are applied. Group Shapley keeps this tractable by
//! playing one game per keypoint group plus one game with groups as players.

mod attribution;
mod cost;
mod gsv;

pub use attribution::{combined_attribution, normalize_nonneg, AttributionReport, SplitMode};
pub use cost::{query_count, CostReport, QueryBudget};
pub use gsv::{group_shapley, intra_group_shapley, GsvConfig, GsvTables};

use std::io::Read;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::matrix::parse_f64;
use crate::oracle::{CoalitionValueOracle, InstanceSet};
use crate::rng;

/// Hard limit for `2^n` enumeration.
pub const MAX_EXACT_PLAYERS: usize = 20;

/// A cooperative game over `players()` players; bit `k` of a mask is player `k`.
pub trait CoalitionGame: Sync {
    fn players(&self) -> usize;
    fn value(&self, mask: u64) -> Result<f64>;
}

/// Shapley values of one game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapleyTable {
    /// Target keypoint (intra-group games) or target group (group games).
    pub target: usize,
    /// Player labels: keypoint indices or group indices.
    pub players: Vec<usize>,
    pub phi: Vec<f64>,
    /// `v(all players)`.
    pub full_value: f64,
    /// `v(∅)`.
    pub empty_value: f64,
}

impl ShapleyTable {
    /// `|Σφ − (v(N) − v(∅))|`.
    pub fn efficiency_gap(&self) -> f64 {
        (self.phi.iter().sum::<f64>() - (self.full_value - self.empty_value)).abs()
    }

    pub fn phi_of(&self, player: usize) -> Option<f64> {
        self.players.iter().position(|&p| p == player).map(|k| self.phi[k])
    }
}

fn check_players(n: usize) -> Result<()> {
    if n > MAX_EXACT_PLAYERS {
        return Err(Error::TooManyPlayers(n));
    }
    Ok(())
}

/// `w[s] = s!·(n−s−1)!/n! = 1 / (n · C(n−1, s))`.
fn shapley_weights(n: usize) -> Vec<f64> {
    let mut binom = 1.0f64;
    (0..n)
        .map(|s| {
            if s > 0 {
                binom = binom * (n - s) as f64 / s as f64;
            }
            1.0 / (n as f64 * binom)
        })
        .collect()
}

/// Shapley values from a table `values[mask]` of length `2^n`.
pub fn shapley_from_values(n: usize, values: &[f64]) -> Result<Vec<f64>> {
    check_players(n)?;
    if values.len() != 1usize << n {
        return Err(Error::DimensionMismatch(format!(
            "{} coalition values for {n} players",
            values.len()
        )));
    }
    let w = shapley_weights(n);
    let mut phi = vec![0.0; n];
    for (s, &vs) in values.iter().enumerate() {
        let ws = w.get(s.count_ones() as usize).copied().unwrap_or(0.0);
        for (j, p) in phi.iter_mut().enumerate() {
            if s >> j & 1 == 0 {
                *p += ws * (values[s | 1 << j] - vs);
            }
        }
    }
    Ok(phi)
}

/// Evaluate every coalition once (in parallel) and return `values[mask]`.
pub fn tabulate<G: CoalitionGame + ?Sized>(game: &G) -> Result<Vec<f64>> {
    let n = game.players();
    check_players(n)?;
    (0..1u64 << n).into_par_iter().map(|m| game.value(m)).collect()
}

/// Brute-force Shapley values of `game`, labelled with `players` and `target`.
pub fn exact_shapley<G: CoalitionGame + ?Sized>(game: &G, target: usize) -> Result<ShapleyTable> {
    let n = game.players();
    let values = tabulate(game)?;
    Ok(ShapleyTable {
        target,
        players: (0..n).collect(),
        phi: shapley_from_values(n, &values)?,
        full_value: values[values.len() - 1],
        empty_value: values[0],
    })
}

/// Monte-Carlo permutation estimate, offered as a comparison baseline.
pub fn sampled_shapley<G: CoalitionGame + ?Sized>(game: &G, permutations: usize, seed: u64) -> Result<Vec<f64>> {
    let n = game.players();
    if permutations == 0 {
        return Err(Error::Config("permutation count must be >= 1".into()));
    }
    if n > crate::coalition::MAX_KEYPOINTS {
        return Err(Error::TooManyPlayers(n));
    }
    let partial = (0..permutations)
        .into_par_iter()
        .map(|k| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng::stream(&[seed, k as u64]));
            let mut phi = vec![0.0; n];
            let mut mask = 0u64;
            let mut prev = game.value(mask)?;
            for &p in &order {
                mask |= 1 << p;
                let cur = game.value(mask)?;
                phi[p] = cur - prev;
                prev = cur;
            }
            Ok(phi)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut phi = vec![0.0; n];
    for row in &partial {
        for (a, b) in phi.iter_mut().zip(row) {
            *a += b;
        }
    }
    Ok(phi.into_iter().map(|p| p / permutations as f64).collect())
}

/// A game given explicitly by its `2^n` coalition values.
#[derive(Clone, Debug, PartialEq)]
pub struct TableGame {
    n: usize,
    values: Vec<f64>,
}

impl TableGame {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        check_players(n)?;
        if values.len() != 1 << n {
            return Err(Error::IncompleteInput(format!(
                "{} coalition values for {n} players (need {})",
                values.len(),
                1u64 << n
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("game table".into()));
        }
        Ok(Self { n, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(u64) -> f64) -> Result<Self> {
        check_players(n)?;
        Self::new(n, (0..1u64 << n).map(f).collect())
    }

    /// CSV with header `coalition_hex,value` listing every coalition once.
    pub fn from_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::MalformedTable("expected coalition_hex,value".into()));
            }
            let c = Coalition::parse_hex(&rec[0], 64)?;
            rows.push((c.bits(), parse_f64(&rec[1])?));
        }
        let n = rows.len().trailing_zeros() as usize;
        if rows.is_empty() || rows.len() != 1 << n {
            return Err(Error::IncompleteInput(format!("{} rows is not a power of two", rows.len())));
        }
        check_players(n)?;
        let mut values = vec![f64::NAN; rows.len()];
        for (bits, v) in rows {
            let slot = values
                .get_mut(bits as usize)
                .ok_or_else(|| Error::MalformedTable(format!("coalition {bits:#x} outside {n} players")))?;
            if !slot.is_nan() {
                return Err(Error::MalformedTable(format!("duplicate coalition {bits:#x}")));
            }
            *slot = v;
        }
        Self::new(n, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

impl CoalitionGame for TableGame {
    fn players(&self) -> usize {
        self.n
    }
    fn value(&self, mask: u64) -> Result<f64> {
        Ok(self.values[mask as usize])
    }
}

/// The scalar game "performance of keypoint `target`" over all `n`
/// keypoints of an oracle, evaluated at a fixed trial.
pub struct KeypointGame<'a, O: ?Sized> {
    pub oracle: &'a O,
    pub instances: InstanceSet,
    pub target: usize,
    pub trial: u64,
}

impl<O: CoalitionValueOracle + ?Sized> CoalitionGame for KeypointGame<'_, O> {
    fn players(&self) -> usize {
        self.oracle.n()
    }
    fn value(&self, mask: u64) -> Result<f64> {
        let c = Coalition::from_bits(mask, self.oracle.n())?;
        Ok(self.oracle.eval(&self.instances, c, self.trial)?[self.target])
    }
}
