//! Dense square matrices of `f64` with labelled CSV I/O.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major n×n matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} entries, expected {n}",
                rows[bad].len()
            )));
        }
        Ok(Self {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1)).take(self.n)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Elementwise sum; errors when dimensions differ.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.n, self.n, other.n, other.n
            )));
        }
        Ok(Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// Relabel: `out[p[i]][p[j]] = self[i][j]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(perm[i], perm[j], self.get(i, j));
            }
        }
        out
    }
}

/// Write a labelled matrix: header `,<labels..>`, then one `label,values..` row
/// per line. `scale` multiplies every value (100 for percent tables).
pub fn write_labelled_csv<W: Write>(
    w: W,
    labels: &[String],
    m: &SquareMatrix,
    scale: f64,
) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec![String::new()];
    header.extend(labels.iter().cloned());
    wr.write_record(&header)?;
    for (label, row) in labels.iter().zip(m.rows()) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(|v| {
            if scale == 1.0 {
                format_value(*v)
            } else {
                format_percent(v * scale)
            }
        }));
        wr.write_record(&rec)?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Read a matrix written by [`write_labelled_csv`]; returns labels and the
/// matrix divided by `scale`.
pub fn read_labelled_csv<R: Read>(r: R, scale: f64) -> Result<(Vec<String>, SquareMatrix)> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let labels: Vec<String> = rd.headers()?.iter().skip(1).map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec?;
        if rec.get(0) != labels.get(k).map(String::as_str) {
            return Err(Error::MalformedTable(format!(
                "row {k} label {:?} does not match column label {:?}",
                rec.get(0),
                labels.get(k)
            )));
        }
        let vals = rec
            .iter()
            .skip(1)
            .map(|s| parse_f64(s).map(|v| v / scale))
            .collect::<Result<Vec<_>>>()?;
        rows.push(vals);
    }
    Ok((labels, SquareMatrix::from_rows(rows)?))
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    let t = s.trim();
    let v: f64 = t
        .parse()
        .map_err(|_| Error::MalformedTable(format!("not a number: {t:?}")))?;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("table cell {t:?}")));
    }
    Ok(v)
}

/// Percent cells: rounded to 10 decimals with trailing zeros trimmed, so
/// `0.206 → "20.6"` instead of exposing the binary expansion.
pub fn format_percent(v: f64) -> String {
    let s = format!("{:.10}", v);
    let s = s.trim_end_matches('0');
    let s = if s.ends_with('.') { format!("{s}0") } else { s.to_owned() };
    if s == "-0.0" {
        "0.0".to_owned()
    } else {
        s
    }
}

/// Shortest round-trip representation; stable across platforms.
pub fn format_value(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:?}")
}
