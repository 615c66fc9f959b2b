use std::collections::HashSet;
use std::sync::Mutex;

use super::{CoalitionValueOracle, InstanceSet, PerfVector};
use crate::coalition::Coalition;
use crate::error::Result;

/// Records every coalition passed to the wrapped oracle.
#[derive(Debug)]
pub struct CountingOracle<O> {
    inner: O,
    log: Mutex<Vec<(Coalition, u64)>>,
}

impl<O: CoalitionValueOracle> CountingOracle<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    /// Total number of eval calls.
    pub fn calls(&self) -> usize {
        self.log.lock().expect("log").len()
    }

    /// Number of distinct coalitions seen, ignoring trial.
    pub fn distinct_coalitions(&self) -> usize {
        let log = self.log.lock().expect("log");
        log.iter().map(|(c, _)| *c).collect::<HashSet<_>>().len()
    }

    pub fn log(&self) -> Vec<(Coalition, u64)> {
        self.log.lock().expect("log").clone()
    }

    pub fn reset(&self) {
        self.log.lock().expect("log").clear();
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: CoalitionValueOracle> CoalitionValueOracle for CountingOracle<O> {
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn identity(&self) -> String {
        format!("counting({})", self.inner.identity())
    }

    fn eval(&self, instances: &InstanceSet, coalition: Coalition, trial: u64) -> Result<PerfVector> {
        self.log.lock().expect("log").push((coalition, trial));
        self.inner.eval(instances, coalition, trial)
    }
}
