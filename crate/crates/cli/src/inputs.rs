//! Loading typed inputs through the run so their digests are recorded.

use std::path::Path;

use keyshap::matrix::read_labelled_csv;
use keyshap::{DeltaMatrix, Error, Grouping, InstanceSet, SquareMatrix};

use crate::error::CliError;
use crate::run::Run;

pub fn delta(run: &mut Run, path: &Path) -> Result<DeltaMatrix, CliError> {
    let bytes = run.read(path)?;
    Ok(DeltaMatrix::read_csv(bytes.as_slice(), run.schema())?)
}

pub fn grouping(run: &mut Run, path: &Path) -> Result<Grouping, CliError> {
    let text = run.read_string(path)?;
    Ok(Grouping::from_json(&text, run.schema())?)
}

/// A labelled square matrix reordered into schema order.
pub fn schema_matrix(run: &mut Run, path: &Path) -> Result<SquareMatrix, CliError> {
    let bytes = run.read(path)?;
    let (labels, m) = read_labelled_csv(bytes.as_slice(), 1.0)?;
    let schema = run.schema();
    if labels.len() != schema.n() {
        return Err(Error::SchemaMismatch {
            expected: schema.n(),
            actual: labels.len(),
        }
        .into());
    }
    let perm = labels
        .iter()
        .map(|l| schema.require(l))
        .collect::<keyshap::Result<Vec<_>>>()?;
    let mut seen = vec![false; perm.len()];
    for &p in &perm {
        if std::mem::replace(&mut seen[p], true) {
            return Err(Error::MalformedTable(format!("keypoint {} listed twice", schema.name(p))).into());
        }
    }
    Ok(m.permuted(&perm))
}

pub fn instances(ids: &Option<Vec<String>>) -> Result<InstanceSet, CliError> {
    match ids {
        None => Ok(InstanceSet::All),
        Some(ids) => Ok(InstanceSet::ids(ids.iter().cloned())?),
    }
}
