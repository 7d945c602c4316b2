use rand::Rng;

use crate::error::Result;
use crate::scenario::ReplicatorConfig;

use super::solver::solve_named;
use super::{Diagnostics, MatchResult, StrategySet};

/// Per subtask in order, a uniformly random admissible collaborator not
/// used by an earlier subtask.
///
/// Every `(subtask, device)` cell gets an i.i.d. uniform priority and the
/// admissible unused candidate with the lowest priority wins. The draws do
/// not depend on which candidates are admissible, so the same RNG state
/// couples runs that differ only in demands.
pub fn baseline_random<R: Rng>(set: &StrategySet, rng: &mut R) -> MatchResult {
    let priority: Vec<Vec<f64>> = (0..set.n_subtasks())
        .map(|_| (0..set.n_devices).map(|_| rng.random::<f64>()).collect())
        .collect();
    greedy("random", set, |n| {
        let s = &set.strategies[n];
        priority[s.subtask][s.device]
    })
}

/// Per subtask in order, the unused admissible collaborator nearest to the
/// initiator (Euclidean); ties go to the lower device position.
pub fn baseline_nn(set: &StrategySet) -> MatchResult {
    greedy("nn", set, |n| set.strategies[n].distance_m)
}

/// The replicator solver run on strategies admitted by one-to-one trust.
/// `set` must be generated from a resource hypergraph weighted with
/// [`crate::trust::TrustWeights::one_to_one`].
pub fn baseline_one_to_one(set: &StrategySet, cfg: &ReplicatorConfig) -> Result<MatchResult> {
    solve_named("one_to_one", set, cfg)
}

fn greedy(solver: &str, set: &StrategySet, key: impl Fn(usize) -> f64) -> MatchResult {
    let mut used = vec![false; set.n_devices];
    let choices: Vec<Option<usize>> = (0..set.n_subtasks())
        .map(|m| {
            let pick = set
                .for_subtask(m)
                .filter(|&n| !used[set.strategies[n].device])
                .min_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
            if let Some(n) = pick {
                used[set.strategies[n].device] = true;
            }
            pick
        })
        .collect();
    let diagnostics = Diagnostics {
        strategies: set.len(),
        ..Diagnostics::default()
    };
    MatchResult::from_choices(solver, set, &choices, diagnostics)
}
