use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Diagnostics, MatchResult, StrategySet};

/// Size limit for exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBound {
    pub max_subtasks: usize,
    pub max_devices: usize,
}

impl Default for OracleBound {
    fn default() -> Self {
        Self {
            max_subtasks: 5,
            max_devices: 12,
        }
    }
}

/// Maximum average value over all partial one-to-one assignments built from
/// admissible strategies. Among equal optima the first in lexicographic
/// order wins, with each subtask's options ordered by device and "none"
/// last.
pub fn oracle_brute_force(set: &StrategySet, bound: OracleBound) -> Result<MatchResult> {
    let m = set.n_subtasks();
    if m > bound.max_subtasks || set.n_devices > bound.max_devices {
        return Err(Error::OracleBound {
            subtasks: m,
            devices: set.n_devices,
            max_subtasks: bound.max_subtasks,
            max_devices: bound.max_devices,
        });
    }
    let options: Vec<Vec<usize>> = (0..m).map(|k| set.for_subtask(k).collect()).collect();
    let mut search = Search {
        set,
        options: &options,
        used: vec![false; set.n_devices],
        current: vec![None; m],
        best: vec![None; m],
        best_value: f64::NEG_INFINITY,
        visited: 0,
    };
    search.run(0, 0.0);
    let diagnostics = Diagnostics {
        strategies: set.len(),
        iterations: search.visited,
        ..Diagnostics::default()
    };
    Ok(MatchResult::from_choices(
        "oracle",
        set,
        &search.best,
        diagnostics,
    ))
}

struct Search<'a> {
    set: &'a StrategySet,
    options: &'a [Vec<usize>],
    used: Vec<bool>,
    current: Vec<Option<usize>>,
    best: Vec<Option<usize>>,
    best_value: f64,
    visited: usize,
}

impl Search<'_> {
    fn run(&mut self, k: usize, value: f64) {
        if k == self.current.len() {
            self.visited += 1;
            if value > self.best_value {
                self.best_value = value;
                self.best.clone_from(&self.current);
            }
            return;
        }
        for &n in &self.options[k] {
            let s = &self.set.strategies[n];
            if self.used[s.device] {
                continue;
            }
            self.used[s.device] = true;
            self.current[k] = Some(n);
            self.run(k + 1, value + s.score);
            self.used[s.device] = false;
        }
        self.current[k] = None;
        self.run(k + 1, value);
    }
}
