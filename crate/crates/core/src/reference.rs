//! Loaders and sanity checks for reference tables shipped under
//! `fixtures/`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::perturb::DeltaMatrix;

/// Outcome of checking a drop matrix against the expected structure.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaCheck {
    /// `(row, argmax column)` for rows whose largest drop is off-diagonal.
    pub row_violations: Vec<(usize, usize)>,
    /// `(column, argmax row)` for columns whose largest drop is off-diagonal.
    pub column_violations: Vec<(usize, usize)>,
    /// Entries outside `0 ≤ drop ≤ baseline ≤ 1`.
    pub range_violations: Vec<(usize, usize)>,
}

pub fn check_delta(delta: &DeltaMatrix) -> DeltaCheck {
    let n = delta.n();
    let range_violations = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            let (b, d) = (delta.baseline[i], delta.drops.get(i, j));
            !((0.0..=1.0).contains(&b) && d >= 0.0 && d <= b)
        })
        .collect();
    DeltaCheck {
        row_violations: delta.row_dominance_violations(),
        column_violations: delta.column_dominance_violations(),
        range_violations,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub values: Vec<f64>,
}

/// One normalized table in percent (rows are targets, columns sources).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercentTable {
    pub id: String,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercentTableSet {
    pub unit: String,
    pub tables: Vec<PercentTable>,
}

/// A row whose percentages do not add up to 100 within tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct RowSumViolation {
    pub table: String,
    pub row: String,
    pub sum: f64,
}

impl PercentTableSet {
    pub fn from_json(doc: &str) -> Result<Self> {
        Ok(serde_json::from_str(doc)?)
    }

    pub fn row_sum_violations(&self, tolerance: f64) -> Vec<RowSumViolation> {
        self.tables
            .iter()
            .flat_map(|t| {
                t.rows.iter().filter_map(move |r| {
                    let sum: f64 = r.values.iter().sum();
                    ((sum - 100.0).abs() > tolerance).then(|| RowSumViolation {
                        table: t.id.clone(),
                        row: r.label.clone(),
                        sum,
                    })
                })
            })
            .collect()
    }

    pub fn table(&self, id: &str) -> Option<&PercentTable> {
        self.tables.iter().find(|t| t.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SquareMatrix;

    #[test]
    fn dominance_checks() {
        let d = DeltaMatrix::new(
            vec![1.0, 1.0],
            SquareMatrix::from_rows(vec![vec![0.3, 0.1], vec![0.4, 0.2]]).unwrap(),
        )
        .unwrap();
        let c = check_delta(&d);
        assert_eq!(c.row_violations, vec![(1, 0)]);
        assert_eq!(c.column_violations, vec![(0, 1)]);
        assert!(c.range_violations.is_empty());
    }

    #[test]
    fn row_sums() {
        let set = PercentTableSet {
            unit: "percent".into(),
            tables: vec![PercentTable {
                id: "t".into(),
                columns: vec!["a".into(), "b".into()],
                rows: vec![
                    TableRow { label: "a".into(), values: vec![60.0, 40.2] },
                    TableRow { label: "b".into(), values: vec![60.0, 39.0] },
                ],
                notes: vec![],
            }],
        };
        let v = set.row_sum_violations(0.5);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].row, "b");
    }
}
