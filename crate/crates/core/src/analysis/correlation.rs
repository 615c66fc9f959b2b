use std::io::Read;

use crate::error::{Error, Result};
use crate::matrix::{parse_f64, SquareMatrix};

/// Per-instance keypoint confidences; `None` marks an unlabeled keypoint.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceTable {
    pub names: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl ConfidenceTable {
    pub fn new(names: Vec<String>, rows: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let n = names.len();
        if rows.len() < 2 {
            return Err(Error::MalformedTable(format!("need at least 2 rows, got {}", rows.len())));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::MalformedTable(format!("row {r} has {} entries, expected {n}", row.len())));
            }
            if let Some(v) = row.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::MalformedTable(format!("row {r}: confidence {v} outside [0, 1]")));
            }
        }
        Ok(Self { names, rows })
    }

    /// Build from complete columns (test and generator convenience).
    pub fn from_columns(names: Vec<String>, cols: &[Vec<f64>]) -> Result<Self> {
        let m = cols.first().map_or(0, Vec::len);
        let rows = (0..m).map(|r| cols.iter().map(|c| Some(c[r])).collect()).collect();
        Self::new(names, rows)
    }

    /// CSV with a header of keypoint names; an empty cell is missing.
    pub fn from_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let names: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            rows.push(
                rec.iter()
                    .map(|c| if c.trim().is_empty() { Ok(None) } else { parse_f64(c).map(Some) })
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Self::new(names, rows)
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }
}

/// Pairwise Pearson correlations plus the pairs that hit the zero-variance
/// sentinel.
#[derive(Clone, Debug, PartialEq)]
pub struct Correlation {
    pub matrix: SquareMatrix,
    pub zero_variance: Vec<(usize, usize)>,
}

/// Pearson correlation over pairwise-complete rows. Pairs where either
/// column is constant get 0 and are listed in `zero_variance`.
pub fn confidence_correlation(table: &ConfidenceTable) -> Result<Correlation> {
    let n = table.n();
    let mut matrix = SquareMatrix::identity(n);
    let mut zero_variance = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let pairs: Vec<(f64, f64)> = table
                .rows
                .iter()
                .filter_map(|r| Some((r[i]?, r[j]?)))
                .collect();
            if pairs.len() < 2 {
                return Err(Error::InsufficientPairs(i, j));
            }
            let k = pairs.len() as f64;
            let mx = pairs.iter().map(|p| p.0).sum::<f64>() / k;
            let my = pairs.iter().map(|p| p.1).sum::<f64>() / k;
            let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
            for &(x, y) in &pairs {
                sxy += (x - mx) * (y - my);
                sxx += (x - mx) * (x - mx);
                syy += (y - my) * (y - my);
            }
            let r = if sxx == 0.0 || syy == 0.0 {
                zero_variance.push((i, j));
                0.0
            } else {
                (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
            };
            matrix.set(i, j, r);
            matrix.set(j, i, r);
        }
    }
    Ok(Correlation { matrix, zero_variance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let t = ConfidenceTable::from_columns(vec!["a".into(), "b".into()], &[a.to_vec(), b.to_vec()]).unwrap();
        confidence_correlation(&t).unwrap().matrix.get(0, 1)
    }

    #[test]
    fn examples() {
        let s = |v: &[f64]| v.iter().map(|x| x / 10.0).collect::<Vec<_>>();
        assert!((corr(&s(&[1.0, 2.0, 3.0]), &s(&[2.0, 4.0, 6.0])) - 1.0).abs() < 1e-12);
        assert!((corr(&s(&[1.0, 2.0, 3.0]), &s(&[3.0, 2.0, 1.0])) + 1.0).abs() < 1e-12);
        assert!((corr(&s(&[1.0, 2.0, 3.0, 4.0]), &s(&[1.0, 3.0, 2.0, 4.0])) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn pairwise_complete_deletion() {
        let t = ConfidenceTable::new(
            vec!["a".into(), "b".into()],
            vec![
                vec![Some(0.1), Some(0.2)],
                vec![Some(0.2), None],
                vec![Some(0.3), Some(0.6)],
                vec![None, Some(0.9)],
            ],
        )
        .unwrap();
        let c = confidence_correlation(&t).unwrap();
        assert!((c.matrix.get(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_sentinel() {
        let t = ConfidenceTable::from_columns(vec!["a".into(), "b".into()], &[vec![0.5, 0.5, 0.5], vec![0.1, 0.2, 0.3]]).unwrap();
        let c = confidence_correlation(&t).unwrap();
        assert_eq!(c.matrix.get(0, 1), 0.0);
        assert_eq!(c.zero_variance, vec![(0, 1)]);
        assert_eq!(c.matrix.get(0, 0), 1.0);
    }

    #[test]
    fn insufficient_overlap() {
        let t = ConfidenceTable::new(
            vec!["a".into(), "b".into()],
            vec![vec![Some(0.1), None], vec![None, Some(0.2)], vec![Some(0.3), Some(0.4)]],
        )
        .unwrap();
        assert!(matches!(confidence_correlation(&t), Err(Error::InsufficientPairs(0, 1))));
    }

    #[test]
    fn csv_with_missing_cells() {
        let text = "a,b,c\n0.1,,0.3\n0.2,0.5,0.1\n0.4,0.6,\n0.3,0.2,0.2\n";
        let t = ConfidenceTable::from_csv(text.as_bytes()).unwrap();
        assert_eq!(t.rows[0][1], None);
        let c = confidence_correlation(&t).unwrap();
        assert!(c.matrix.is_symmetric());
    }
}
