use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use super::{check_width, CoalitionValueOracle, InstanceSet, PerfVector};
use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::matrix::parse_f64;

/// Exact lookup from coalition bitmask to performance vector.
///
/// File layout: CSV with header `coalition_hex,v_0,..,v_{n-1}`. The table
/// carries no instance dimension, so instance ids and trial seeds are ignored.
#[derive(Clone, Debug)]
pub struct TabularOracle {
    n: usize,
    rows: HashMap<u64, PerfVector>,
    source: String,
}

impl TabularOracle {
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (Coalition, Vec<f64>)>) -> Result<Self> {
        let mut rows = HashMap::new();
        for (c, values) in entries {
            check_width(n, &c)?;
            if values.len() != n {
                return Err(Error::MalformedTable(format!(
                    "coalition {c}: {} values, expected {n}",
                    values.len()
                )));
            }
            if rows.insert(c.bits(), PerfVector::new(values)?).is_some() {
                return Err(Error::MalformedTable(format!("duplicate coalition {c}")));
            }
        }
        if !rows.contains_key(&Coalition::full(n).bits()) {
            return Err(Error::MalformedTable(format!(
                "table lacks the full coalition {}",
                Coalition::full(n)
            )));
        }
        Ok(Self {
            n,
            rows,
            source: "inline".into(),
        })
    }

    pub fn from_reader<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = rd.headers()?.clone();
        if header.get(0).map(str::trim) != Some("coalition_hex") {
            return Err(Error::MalformedTable("first column must be coalition_hex".into()));
        }
        let n = header.len() - 1;
        if n == 0 {
            return Err(Error::MalformedTable("no value columns".into()));
        }
        let mut entries = Vec::new();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec?;
            if rec.len() != n + 1 {
                return Err(Error::MalformedTable(format!("row {}: {} fields, expected {}", line + 1, rec.len(), n + 1)));
            }
            let c = Coalition::parse_hex(&rec[0], n)?;
            let values = rec.iter().skip(1).map(parse_f64).collect::<Result<Vec<_>>>()?;
            entries.push((c, values));
        }
        Self::from_entries(n, entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut t = Self::from_reader(f)?;
        t.source = path.display().to_string();
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl CoalitionValueOracle for TabularOracle {
    fn n(&self) -> usize {
        self.n
    }

    fn identity(&self) -> String {
        format!("tabular:{}", self.source)
    }

    fn eval(&self, _instances: &InstanceSet, coalition: Coalition, _trial: u64) -> Result<PerfVector> {
        check_width(self.n, &coalition)?;
        self.rows
            .get(&coalition.bits())
            .cloned()
            .ok_or_else(|| Error::MissingCoalition(coalition.to_hex()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = "coalition_hex,v_0,v_1\n0x3,0.9,0.8\n0x1,0.9,0.2\n";

    #[test]
    fn direct_lookup() {
        let t = TabularOracle::from_reader(TWO.as_bytes()).unwrap();
        let c = Coalition::parse_hex("0x1", 2).unwrap();
        assert_eq!(t.eval(&InstanceSet::All, c, 0).unwrap().values(), &[0.9, 0.2]);
    }

    #[test]
    fn missing_coalition_names_bitmask() {
        let t = TabularOracle::from_reader(TWO.as_bytes()).unwrap();
        let c = Coalition::parse_hex("0x2", 2).unwrap();
        match t.eval(&InstanceSet::All, c, 0) {
            Err(Error::MissingCoalition(m)) => assert_eq!(m, "0x2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_rows() {
        let out_of_range = "coalition_hex,v_0,v_1\n0x3,0.9,1.8\n";
        assert!(TabularOracle::from_reader(out_of_range.as_bytes()).is_err());
        let no_full = "coalition_hex,v_0,v_1\n0x1,0.9,0.8\n";
        assert!(TabularOracle::from_reader(no_full.as_bytes()).is_err());
        let junk = "coalition_hex,v_0,v_1\n0x3,abc,0.8\n";
        assert!(matches!(TabularOracle::from_reader(junk.as_bytes()), Err(Error::MalformedTable(_))));
        let wide = "coalition_hex,v_0,v_1\n0x7,0.1,0.1\n";
        assert!(TabularOracle::from_reader(wide.as_bytes()).is_err());
    }

    #[test]
    fn width_mismatch() {
        let t = TabularOracle::from_reader(TWO.as_bytes()).unwrap();
        assert!(matches!(
            t.eval(&InstanceSet::All, Coalition::full(3), 0),
            Err(Error::SchemaMismatch { expected: 2, actual: 3 })
        ));
    }
}
