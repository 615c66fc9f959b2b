use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GsvTables, ShapleyTable};
use crate::error::{Error, Result};
use crate::grouping::Grouping;
use crate::matrix::{write_labelled_csv, SquareMatrix};
use crate::skeleton::KeypointSchema;

/// Clamp at zero and rescale onto the probability simplex.
pub fn normalize_nonneg(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("attribution vector".into()));
    }
    let clamped: Vec<f64> = raw.iter().map(|&v| v.max(0.0)).collect();
    let sum: f64 = clamped.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::DegenerateAttribution);
    }
    Ok(clamped.into_iter().map(|v| v / sum).collect())
}

/// How a group's share is spread over its members when the target keypoint
/// lies in a different group.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    /// Equal shares.
    #[default]
    Uniform,
    /// Shares proportional to each member's (clamped) Shapley value for
    /// predicting itself; falls back to equal shares if all are zero.
    Proportional,
}

impl FromStr for SplitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SplitMode::Uniform),
            "proportional" => Ok(SplitMode::Proportional),
            other => Err(Error::Config(format!("unknown split mode {other:?}"))),
        }
    }
}

/// Run settings recorded alongside the numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionMeta {
    pub split: SplitMode,
    /// Out-of-group keypoints in within-group games.
    pub outside_group: String,
    pub coalition_weight: String,
    pub group_value: String,
}

/// Per-target contribution rows plus every table they were built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport {
    pub names: Vec<String>,
    pub groups: Vec<Vec<usize>>,
    pub meta: AttributionMeta,
    /// `contributions[i][j]`: share of keypoint `j` in predicting keypoint `i`.
    pub contributions: Vec<Vec<f64>>,
    /// Normalized group row of each target group.
    pub group_rows: Vec<Vec<f64>>,
    /// Normalized within-group row of each target keypoint (over its group).
    pub intra_rows: Vec<Vec<f64>>,
    pub raw: GsvTables,
}

fn table_for<'a>(tables: &'a [ShapleyTable], target: usize, what: &str) -> Result<&'a ShapleyTable> {
    tables
        .get(target)
        .filter(|t| t.target == target)
        .ok_or_else(|| Error::IncompleteInput(format!("no {what} table for target {target}")))
}

/// Combine within-group and group-level values into simplex rows:
/// `σ(i,j) = ψ̂_i(G_i)·φ̂_i(j)` inside the target's group, and `ψ̂_i(G_h)`
/// split over the members of any other group `G_h`.
pub fn combined_attribution(
    tables: &GsvTables,
    grouping: &Grouping,
    schema: &KeypointSchema,
    split: SplitMode,
) -> Result<AttributionReport> {
    let n = grouping.n();
    if schema.n() != n {
        return Err(Error::SchemaMismatch {
            expected: schema.n(),
            actual: n,
        });
    }
    if tables.intra.len() != n || tables.group.len() != grouping.g() {
        return Err(Error::IncompleteInput(format!(
            "{} intra / {} group tables for {n} keypoints in {} groups",
            tables.intra.len(),
            tables.group.len(),
            grouping.g()
        )));
    }
    for (h, members) in grouping.groups().iter().enumerate() {
        if table_for(&tables.group, h, "group")?.players.len() != grouping.g() {
            return Err(Error::IncompleteInput(format!("group table {h} has the wrong players")));
        }
        for &i in members {
            if table_for(&tables.intra, i, "intra-group")?.players != *members {
                return Err(Error::IncompleteInput(format!("intra table {i} does not cover its group")));
            }
        }
    }

    let group_rows = tables
        .group
        .iter()
        .map(|t| normalize_nonneg(&t.phi))
        .collect::<Result<Vec<_>>>()?;
    let intra_rows = tables
        .intra
        .iter()
        .map(|t| normalize_nonneg(&t.phi))
        .collect::<Result<Vec<_>>>()?;

    // share of each keypoint within its own group when it is a "foreign" source
    let mut foreign_share = vec![0.0; n];
    for members in grouping.groups() {
        let weights: Vec<f64> = match split {
            SplitMode::Uniform => vec![1.0; members.len()],
            SplitMode::Proportional => members
                .iter()
                .map(|&m| tables.intra[m].phi_of(m).unwrap_or(0.0).max(0.0))
                .collect(),
        };
        let total: f64 = weights.iter().sum();
        for (k, &m) in members.iter().enumerate() {
            foreign_share[m] = if total > 0.0 {
                weights[k] / total
            } else {
                1.0 / members.len() as f64
            };
        }
    }

    let contributions = (0..n)
        .map(|i| {
            let own = grouping.group_of(i);
            let psi = &group_rows[own];
            let mut row = vec![0.0; n];
            for (h, members) in grouping.groups().iter().enumerate() {
                for (k, &j) in members.iter().enumerate() {
                    row[j] = if h == own {
                        psi[own] * intra_rows[i][k]
                    } else {
                        psi[h] * foreign_share[j]
                    };
                }
            }
            row
        })
        .collect();

    Ok(AttributionReport {
        names: schema.names().to_vec(),
        groups: grouping.groups().to_vec(),
        meta: AttributionMeta {
            split,
            outside_group: "visible".into(),
            coalition_weight: "shapley".into(),
            group_value: "mean".into(),
        },
        contributions,
        group_rows,
        intra_rows,
        raw: tables.clone(),
    })
}

impl AttributionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn group_labels(&self) -> Vec<String> {
        (1..=self.groups.len()).map(|h| format!("G{h}")).collect()
    }

    /// `n × n` contribution matrix.
    pub fn contribution_matrix(&self) -> SquareMatrix {
        SquareMatrix::from_rows(self.contributions.clone()).expect("square by construction")
    }

    /// Normalized group table (target group × source group).
    pub fn group_matrix(&self) -> SquareMatrix {
        SquareMatrix::from_rows(self.group_rows.clone()).expect("square by construction")
    }

    /// Normalized within-group table of group `h` (target × source member).
    pub fn intra_matrix(&self, h: usize) -> SquareMatrix {
        SquareMatrix::from_rows(self.groups[h].iter().map(|&i| self.intra_rows[i].clone()).collect())
            .expect("square by construction")
    }

    pub fn intra_labels(&self, h: usize) -> Vec<String> {
        self.groups[h].iter().map(|&i| self.names[i].clone()).collect()
    }

    /// Percent-formatted CSVs: `(file stem, bytes)` for the group table, each
    /// within-group table and the combined contribution table.
    pub fn percent_csvs(&self) -> Result<Vec<(String, Vec<u8>)>> {
        let mut out = Vec::new();
        let mut buf = Vec::new();
        write_labelled_csv(&mut buf, &self.group_labels(), &self.group_matrix(), 100.0)?;
        out.push(("group".to_owned(), buf));
        for h in 0..self.groups.len() {
            let mut buf = Vec::new();
            write_labelled_csv(&mut buf, &self.intra_labels(h), &self.intra_matrix(h), 100.0)?;
            out.push((format!("intra_G{}", h + 1), buf));
        }
        let mut buf = Vec::new();
        write_labelled_csv(&mut buf, &self.names, &self.contribution_matrix(), 100.0)?;
        out.push(("combined".to_owned(), buf));
        Ok(out)
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_json()?.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|e| Error::io("<report>", e))
    }
}
