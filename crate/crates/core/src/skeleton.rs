//! Keypoint schema and the biological connectivity graph.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// Shipped default: the 17 COCO person keypoints and the 19-edge COCO skeleton.
pub const COCO17_JSON: &str = include_str!("../../../schemas/coco17.json");

/// Alternative spellings accepted wherever a keypoint is named.
const ALIASES: &[(&str, &str)] = &[("l-foot", "l-ankle"), ("r-foot", "r-ankle")];

/// Ordered keypoint names; index `i` is the `i`-th name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeypointSchema {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl KeypointSchema {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::SchemaValidation(format!(
                "need at least 2 keypoints, got {}",
                names.len()
            )));
        }
        if names.len() > crate::coalition::MAX_KEYPOINTS {
            return Err(Error::SchemaValidation(format!(
                "at most {} keypoints supported, got {}",
                crate::coalition::MAX_KEYPOINTS,
                names.len()
            )));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::SchemaValidation(format!("keypoint {i} has an empty name")));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::SchemaValidation(format!("duplicate name `{name}`")));
            }
        }
        Ok(Self { names, index })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    /// Resolve a name (or a known alias) to its index.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        let name = name.trim();
        self.index.get(name).copied().or_else(|| {
            ALIASES
                .iter()
                .find(|(alias, _)| *alias == name)
                .and_then(|(_, canonical)| self.index.get(*canonical).copied())
        })
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::SchemaValidation(format!("unknown keypoint `{name}`")))
    }
}

/// A schema plus undirected edges stored as `(lo, hi)` pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    schema: KeypointSchema,
    edges: BTreeSet<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct SkeletonDoc {
    names: Vec<String>,
    edges: Vec<(String, String)>,
}

impl Skeleton {
    pub fn new(schema: KeypointSchema, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = schema.n();
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::SchemaValidation(format!("edge ({a}, {b}) out of range for n={n}")));
            }
            if a == b {
                return Err(Error::SchemaValidation(format!(
                    "self-loop on `{}`",
                    schema.name(a)
                )));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::SchemaValidation(format!(
                    "duplicate edge ({}, {})",
                    schema.name(a),
                    schema.name(b)
                )));
            }
        }
        Ok(Self { schema, edges: set })
    }

    /// Parse a JSON skeleton document `{"names": [...], "edges": [[a, b], ...]}`.
    pub fn from_json(doc: &str) -> Result<Self> {
        let doc: SkeletonDoc = serde_json::from_str(doc)?;
        let schema = KeypointSchema::new(doc.names)?;
        let edges = doc
            .edges
            .iter()
            .map(|(a, b)| Ok((schema.require(a)?, schema.require(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(schema, edges)
    }

    pub fn coco17() -> Self {
        Self::from_json(COCO17_JSON).expect("shipped COCO schema is valid")
    }

    /// Canonical JSON form (names in order, edges sorted by index).
    pub fn to_json(&self) -> String {
        let doc = SkeletonDoc {
            names: self.schema.names().to_vec(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b)| (self.schema.name(a).to_owned(), self.schema.name(b).to_owned()))
                .collect(),
        };
        serde_json::to_string(&doc).expect("serializable")
    }

    pub fn schema(&self) -> &KeypointSchema {
        &self.schema
    }

    pub fn n(&self) -> usize {
        self.schema.n()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn connected(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == i || b == i).count()
    }

    /// Degree-normalized, symmetrized adjacency:
    /// `KC(i,j) = ½(conn(i,j)/deg(i) + conn(j,i)/deg(j))`, zero diagonal.
    pub fn keypoint_connectivity(&self) -> Result<SquareMatrix> {
        let n = self.n();
        let degrees: Vec<usize> = (0..n).map(|i| self.degree(i)).collect();
        if let Some(i) = degrees.iter().position(|&d| d == 0) {
            return Err(Error::ZeroDegree(self.schema.name(i).to_owned()));
        }
        let mut kc = SquareMatrix::zeros(n);
        for &(a, b) in &self.edges {
            let v = 0.5 * (1.0 / degrees[a] as f64 + 1.0 / degrees[b] as f64);
            kc.set(a, b, v);
            kc.set(b, a, v);
        }
        Ok(kc)
    }
}
