//! Keypoint-guided perturbation: mask geometry, the performance-drop matrix
//! and the perturbation influence score.

use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::matrix::{format_percent, parse_f64, SquareMatrix};
use crate::oracle::{CoalitionValueOracle, InstanceSet};
use crate::rect::Rect;
use crate::rng;
use crate::skeleton::KeypointSchema;

pub const DEFAULT_TRIALS: usize = 8;

/// Ranges the mask sampler draws from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskSampling {
    /// Multiplier on `(base_scale · min(W, H))²`, uniform in `[lo, hi]`.
    pub area_factor: (f64, f64),
    /// Width / height ratio, log-uniform in `[lo, hi]`.
    pub aspect: (f64, f64),
}

impl Default for MaskSampling {
    fn default() -> Self {
        Self {
            area_factor: (0.5, 1.5),
            aspect: (0.5, 2.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub center: (f64, f64),
    /// Clipped extent.
    pub rect: Rect,
    pub fill: String,
}

impl MaskSpec {
    pub fn width(&self) -> u32 {
        self.rect.width()
    }
    pub fn height(&self) -> u32 {
        self.rect.height()
    }
}

fn uniform<R: Rng>(r: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        r.gen_range(lo..=hi)
    }
}

/// `m` noise masks centred on `keypoint` with random area and aspect ratio.
pub fn gen_masks(
    keypoint: (f64, f64),
    m: usize,
    base_scale: f64,
    bounds: (u32, u32),
    seed: u64,
    sampling: MaskSampling,
) -> Result<Vec<MaskSpec>> {
    let (x, y) = keypoint;
    if !(x >= 0.0 && y >= 0.0 && x < f64::from(bounds.0) && y < f64::from(bounds.1)) {
        return Err(Error::OutOfBounds {
            x,
            y,
            width: bounds.0,
            height: bounds.1,
        });
    }
    if m == 0 {
        return Err(Error::Config("mask count must be >= 1".into()));
    }
    if !(base_scale > 0.0 && base_scale < 1.0) {
        return Err(Error::Config(format!("base_scale {base_scale} outside (0, 1)")));
    }
    let (af, asp) = (sampling.area_factor, sampling.aspect);
    if !(af.0 > 0.0 && af.0 <= af.1 && asp.0 > 0.0 && asp.0 <= asp.1) {
        return Err(Error::Config(format!("invalid mask sampling ranges {sampling:?}")));
    }
    let side = base_scale * f64::from(bounds.0.min(bounds.1));
    Ok((0..m as u64)
        .map(|k| {
            let mut r = rng::stream(&[seed, k]);
            let area = uniform(&mut r, af) * side * side;
            let aspect = uniform(&mut r, (asp.0.ln(), asp.1.ln())).exp();
            let w = ((area * aspect).sqrt().round() as u32).max(1);
            let h = ((area / aspect).sqrt().round() as u32).max(1);
            MaskSpec {
                center: keypoint,
                rect: Rect::centered(x, y, w, h, bounds),
                fill: "noise".into(),
            }
        })
        .collect())
}

/// Baseline performance and per-pair drops, stored as fractions.
///
/// `drops[i][j]` is how much keypoint `i` loses when keypoint `j` is perturbed.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaMatrix {
    pub baseline: Vec<f64>,
    pub drops: SquareMatrix,
}

/// Oracle trial seed for the `t`-th perturbation trial of a run.
pub fn trial_seed(seed: u64, t: usize) -> u64 {
    rng::mix(&[seed, t as u64])
}

impl DeltaMatrix {
    pub fn new(baseline: Vec<f64>, drops: SquareMatrix) -> Result<Self> {
        if baseline.len() != drops.n() {
            return Err(Error::DimensionMismatch(format!(
                "baseline has {} entries, drops are {}x{}",
                baseline.len(),
                drops.n(),
                drops.n()
            )));
        }
        for (i, &b) in baseline.iter().enumerate() {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::MalformedTable(format!("baseline {i} = {b} outside [0, 1]")));
            }
            for (j, &d) in drops.row(i).iter().enumerate() {
                // tolerate percent → fraction rounding
                if !(d >= 0.0 && d <= b + 1e-9) {
                    return Err(Error::MalformedTable(format!(
                        "drop ({i}, {j}) = {d} outside [0, baseline {b}]"
                    )));
                }
            }
        }
        Ok(Self { baseline, drops })
    }

    pub fn n(&self) -> usize {
        self.baseline.len()
    }

    /// Rows whose largest drop is not on the diagonal, with the offending column.
    pub fn row_dominance_violations(&self) -> Vec<(usize, usize)> {
        (0..self.n())
            .filter_map(|i| {
                let j = argmax(self.drops.row(i));
                (j != i).then_some((i, j))
            })
            .collect()
    }

    /// Columns whose largest drop is not on the diagonal, with the offending row.
    pub fn column_dominance_violations(&self) -> Vec<(usize, usize)> {
        (0..self.n())
            .filter_map(|j| {
                let col: Vec<f64> = (0..self.n()).map(|i| self.drops.get(i, j)).collect();
                let i = argmax(&col);
                (i != j).then_some((j, i))
            })
            .collect()
    }

    /// CSV in percent: header `keypoint,baseline,<names..>`, one row per keypoint.
    pub fn write_csv<W: Write>(&self, w: W, schema: &KeypointSchema) -> Result<()> {
        if schema.n() != self.n() {
            return Err(Error::SchemaMismatch {
                expected: schema.n(),
                actual: self.n(),
            });
        }
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["keypoint".to_owned(), "baseline".to_owned()];
        header.extend(schema.names().iter().cloned());
        wr.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec = vec![schema.name(i).to_owned(), format_percent(crate::to_percent(self.baseline[i]))];
            rec.extend(self.drops.row(i).iter().map(|&d| format_percent(crate::to_percent(d))));
            wr.write_record(&rec)?;
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Read the percent CSV layout; names (and aliases) are resolved against
    /// `schema`, so rows and columns may come in any order.
    pub fn read_csv<R: Read>(r: R, schema: &KeypointSchema) -> Result<Self> {
        let n = schema.n();
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = rd.headers()?.clone();
        if header.len() != n + 2 || header.get(1).map(str::trim) != Some("baseline") {
            return Err(Error::MalformedTable(format!(
                "expected header keypoint,baseline,<{n} names>"
            )));
        }
        let cols = header
            .iter()
            .skip(2)
            .map(|name| schema.require(name))
            .collect::<Result<Vec<_>>>()?;
        ensure_permutation(&cols, n, "columns")?;
        let mut baseline = vec![0.0; n];
        let mut drops = SquareMatrix::zeros(n);
        let mut seen = Vec::with_capacity(n);
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != n + 2 {
                return Err(Error::MalformedTable(format!("row with {} fields, expected {}", rec.len(), n + 2)));
            }
            let i = schema.require(&rec[0])?;
            seen.push(i);
            baseline[i] = crate::from_percent(parse_f64(&rec[1])?);
            for (k, &j) in cols.iter().enumerate() {
                drops.set(i, j, crate::from_percent(parse_f64(&rec[k + 2])?));
            }
        }
        ensure_permutation(&seen, n, "rows")?;
        Self::new(baseline, drops)
    }
}

fn ensure_permutation(idx: &[usize], n: usize, what: &str) -> Result<()> {
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(Error::MalformedTable(format!("{what} must name every keypoint exactly once")));
    }
    Ok(())
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

/// Estimate drops by hiding one keypoint at a time over `m` trials.
///
/// `drops[i][j] = max(0, baseline[i] − mean_t eval(N∖{j}, t)[i])`. The
/// `(j, t)` evaluations run on the current rayon pool; the result does not
/// depend on scheduling.
pub fn delta_perf_matrix<O: CoalitionValueOracle + ?Sized>(
    oracle: &O,
    instances: &InstanceSet,
    m: usize,
    seed: u64,
) -> Result<DeltaMatrix> {
    if m == 0 {
        return Err(Error::Config("trial count m must be >= 1".into()));
    }
    let n = oracle.n();
    let full = Coalition::full(n);
    let baseline = oracle.eval(instances, full, trial_seed(seed, 0))?.into_inner();

    let jobs: Vec<(usize, usize)> = (0..n).flat_map(|j| (0..m).map(move |t| (j, t))).collect();
    let evals = jobs
        .par_iter()
        .map(|&(j, t)| oracle.eval(instances, full.without(j), trial_seed(seed, t)))
        .collect::<Result<Vec<_>>>()?;

    let mut drops = SquareMatrix::zeros(n);
    for j in 0..n {
        let trials = &evals[j * m..(j + 1) * m];
        for i in 0..n {
            let mean = trials.iter().map(|p| p[i]).sum::<f64>() / m as f64;
            drops.set(i, j, (baseline[i] - mean).max(0.0));
        }
    }
    DeltaMatrix::new(baseline, drops)
}

/// `PI(i,j) = ½(Δ(i,j)/Σ_a Δ(i,a) + Δ(j,i)/Σ_a Δ(j,a))`.
pub fn perturbation_influence(delta: &DeltaMatrix) -> Result<SquareMatrix> {
    let n = delta.n();
    let sums: Vec<f64> = delta.drops.rows().map(|r| r.iter().sum()).collect();
    if let Some(i) = sums.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::DegenerateRow(i));
    }
    let norm = |i: usize, j: usize| delta.drops.get(i, j) / sums[i];
    Ok(SquareMatrix::from_fn(n, |i, j| 0.5 * (norm(i, j) + norm(j, i))))
}
