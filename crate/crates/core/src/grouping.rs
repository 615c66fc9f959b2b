//! Interdependency scores and agglomerative keypoint grouping.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::skeleton::KeypointSchema;

pub const DEFAULT_GROUPS: usize = 5;

/// Symmetric non-negative pairwise scores `s = PI + KC`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterdependencyMatrix(SquareMatrix);

impl InterdependencyMatrix {
    pub fn new(s: SquareMatrix) -> Result<Self> {
        check_score_matrix(&s, "interdependency")?;
        Ok(Self(s))
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }
}

fn check_score_matrix(m: &SquareMatrix, what: &str) -> Result<()> {
    if !m.all_finite() {
        return Err(Error::NonFinite(what.into()));
    }
    let n = m.n();
    for i in 0..n {
        for j in 0..n {
            let v = m.get(i, j);
            if v < 0.0 {
                return Err(Error::MalformedTable(format!("{what}({i},{j}) = {v} is negative")));
            }
            if (v - m.get(j, i)).abs() > 1e-12 {
                return Err(Error::MalformedTable(format!("{what} is not symmetric at ({i},{j})")));
            }
        }
    }
    Ok(())
}

/// `s(i,j) = PI(i,j) + KC(i,j)`.
pub fn interdependency(pi: &SquareMatrix, kc: &SquareMatrix) -> Result<InterdependencyMatrix> {
    check_score_matrix(pi, "PI")?;
    check_score_matrix(kc, "KC")?;
    InterdependencyMatrix::new(pi.add(kc)?)
}

/// How the similarity between two clusters is aggregated from member pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    /// Most similar pair.
    #[default]
    Single,
    /// Mean over all cross pairs.
    Average,
    /// Least similar pair.
    Complete,
}

impl FromStr for Linkage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Linkage::Single),
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            other => Err(Error::Config(format!("unknown linkage {other:?}"))),
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Single => "single",
            Linkage::Average => "average",
            Linkage::Complete => "complete",
        })
    }
}

impl Linkage {
    fn score(self, s: &SquareMatrix, a: &[usize], b: &[usize]) -> f64 {
        let pairs = a.iter().flat_map(|&i| b.iter().map(move |&j| s.get(i, j)));
        match self {
            Linkage::Single => pairs.fold(f64::NEG_INFINITY, f64::max),
            Linkage::Complete => pairs.fold(f64::INFINITY, f64::min),
            Linkage::Average => pairs.sum::<f64>() / (a.len() * b.len()) as f64,
        }
    }
}

/// A partition of keypoint indices into non-empty groups.
///
/// Members are sorted inside each group and groups are ordered by their
/// smallest member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grouping {
    groups: Vec<Vec<usize>>,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct GroupingDoc {
    groups: Vec<Vec<String>>,
    g: usize,
}

impl Grouping {
    pub fn new(mut groups: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for grp in &mut groups {
            if grp.is_empty() {
                return Err(Error::Config("empty group".into()));
            }
            grp.sort_unstable();
            for &i in grp.iter() {
                if i >= n || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Config(format!("keypoint {i} is out of range or in several groups")));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Config(format!("keypoint {i} is not in any group")));
        }
        groups.sort_by_key(|g| g[0]);
        Ok(Self { groups, n })
    }

    /// Contiguous groups of the given sizes: `[0..s0), [s0..s0+s1), ...`.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let mut next = 0;
        let groups = sizes
            .iter()
            .map(|&s| {
                let g: Vec<usize> = (next..next + s).collect();
                next += s;
                g
            })
            .collect();
        Self::new(groups, next)
    }

    pub fn singletons(n: usize) -> Self {
        Self::new((0..n).map(|i| vec![i]).collect(), n).expect("valid")
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, h: usize) -> &[usize] {
        &self.groups[h]
    }

    pub fn g(&self) -> usize {
        self.groups.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    /// Index of the group containing keypoint `i`.
    pub fn group_of(&self, i: usize) -> usize {
        self.groups
            .iter()
            .position(|g| g.binary_search(&i).is_ok())
            .expect("partition covers every keypoint")
    }

    /// Whether every group of `self` lies inside a single group of `coarser`.
    pub fn refines(&self, coarser: &Grouping) -> bool {
        self.n == coarser.n
            && self.groups.iter().all(|g| {
                let h = coarser.group_of(g[0]);
                g.iter().all(|&i| coarser.group_of(i) == h)
            })
    }

    /// Relabel keypoints: keypoint `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::new(
            self.groups.iter().map(|g| g.iter().map(|&i| perm[i]).collect()).collect(),
            self.n,
        )
        .expect("permutation preserves the partition")
    }

    pub fn to_json(&self, schema: &KeypointSchema) -> Result<String> {
        if schema.n() != self.n {
            return Err(Error::SchemaMismatch {
                expected: schema.n(),
                actual: self.n,
            });
        }
        let doc = GroupingDoc {
            groups: self
                .groups
                .iter()
                .map(|g| g.iter().map(|&i| schema.name(i).to_owned()).collect())
                .collect(),
            g: self.g(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(doc: &str, schema: &KeypointSchema) -> Result<Self> {
        let doc: GroupingDoc = serde_json::from_str(doc)?;
        if doc.g != doc.groups.len() {
            return Err(Error::Config(format!("g = {} but {} groups listed", doc.g, doc.groups.len())));
        }
        let groups = doc
            .groups
            .iter()
            .map(|g| g.iter().map(|name| schema.require(name)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(groups, schema.n())
    }
}

/// Agglomerative clustering on similarity `s` down to `g` clusters.
///
/// Starts from singletons and repeatedly merges the pair of clusters with the
/// highest linkage score. Ties go to the pair whose (smallest member,
/// smallest member) is lexicographically first. The diagonal of `s` is never
/// consulted.
pub fn cluster(s: &InterdependencyMatrix, g: usize, linkage: Linkage) -> Result<Grouping> {
    let n = s.n();
    if g == 0 || g > n {
        return Err(Error::GroupCountOutOfRange { g, n });
    }
    let m = s.matrix();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    while clusters.len() > g {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let v = linkage.score(m, &clusters[a], &clusters[b]);
                if best.map_or(true, |(bv, _, _)| v > bv) {
                    best = Some((v, a, b));
                }
            }
        }
        let (_, a, b) = best.expect("at least two clusters");
        let merged = clusters.remove(b);
        clusters[a].extend(merged);
        clusters[a].sort_unstable();
    }
    Grouping::new(clusters, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_sym(n: usize, raw: &[f64]) -> InterdependencyMatrix {
        let mut m = SquareMatrix::zeros(n);
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                m.set(i, j, raw[k]);
                m.set(j, i, raw[k]);
                k += 1;
            }
        }
        InterdependencyMatrix::new(m).unwrap()
    }

    #[test]
    fn interdependency_adds() {
        let pi = SquareMatrix::from_rows(vec![vec![0.0, 0.2], vec![0.2, 0.0]]).unwrap();
        let kc = SquareMatrix::from_rows(vec![vec![0.0, 0.75], vec![0.75, 0.0]]).unwrap();
        let s = interdependency(&pi, &kc).unwrap();
        assert!((s.matrix().get(0, 1) - 0.95).abs() < 1e-15);
        let s0 = interdependency(&SquareMatrix::zeros(2), &kc).unwrap();
        assert_eq!(s0.matrix(), &kc);
        assert!(matches!(
            interdependency(&SquareMatrix::zeros(3), &kc),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn extreme_group_counts() {
        let s = random_sym(4, &[0.1, 0.5, 0.3, 0.9, 0.2, 0.4]);
        for linkage in [Linkage::Single, Linkage::Average, Linkage::Complete] {
            assert_eq!(cluster(&s, 4, linkage).unwrap(), Grouping::singletons(4));
            assert_eq!(cluster(&s, 1, linkage).unwrap().groups(), &[vec![0, 1, 2, 3]]);
        }
        assert!(matches!(cluster(&s, 0, Linkage::Single), Err(Error::GroupCountOutOfRange { .. })));
        assert!(cluster(&s, 5, Linkage::Single).is_err());
    }

    #[test]
    fn ties_merge_lowest_indices_first() {
        let s = random_sym(3, &[1.0, 1.0, 1.0]);
        assert_eq!(cluster(&s, 2, Linkage::Average).unwrap().groups(), &[vec![0, 1], vec![2]]);
    }

    #[test]
    fn grouping_validation() {
        assert!(Grouping::new(vec![vec![0, 1], vec![1]], 2).is_err());
        assert!(Grouping::new(vec![vec![0]], 2).is_err());
        assert!(Grouping::new(vec![vec![0], vec![]], 1).is_err());
        let g = Grouping::new(vec![vec![2, 1], vec![0]], 3).unwrap();
        assert_eq!(g.groups(), &[vec![0], vec![1, 2]]);
        assert_eq!(g.group_of(2), 1);
    }

    #[test]
    fn json_round_trip() {
        let schema = KeypointSchema::new(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let g = Grouping::new(vec![vec![0, 2], vec![1]], 3).unwrap();
        let text = g.to_json(&schema).unwrap();
        assert_eq!(Grouping::from_json(&text, &schema).unwrap(), g);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["g"], 2);
        assert_eq!(v["groups"][0][1], "c");
    }

    proptest! {
        #[test]
        fn clusters_partition_and_refine(raw in proptest::collection::vec(0.0f64..1.0, 28), link in 0usize..3) {
            let linkage = [Linkage::Single, Linkage::Average, Linkage::Complete][link];
            let s = random_sym(8, &raw);
            let mut prev: Option<Grouping> = None;
            for g in 1..=8 {
                let cur = cluster(&s, g, linkage).unwrap();
                prop_assert_eq!(cur.g(), g);
                prop_assert_eq!(cur.groups().iter().map(Vec::len).sum::<usize>(), 8);
                if let Some(p) = &prev {
                    prop_assert!(cur.refines(p));
                }
                prev = Some(cur);
            }
        }

        #[test]
        fn clustering_is_permutation_equivariant(
            raw in proptest::collection::vec(0.0f64..1.0, 21),
            perm in Just((0..7).collect::<Vec<usize>>()).prop_shuffle(),
            g in 1usize..=7,
        ) {
            let s = random_sym(7, &raw);
            let sp = InterdependencyMatrix::new(s.matrix().permuted(&perm)).unwrap();
            for linkage in [Linkage::Single, Linkage::Average] {
                let base = cluster(&s, g, linkage).unwrap();
                let moved = cluster(&sp, g, linkage).unwrap();
                prop_assert_eq!(base.permuted(&perm), moved);
            }
        }
    }
}
