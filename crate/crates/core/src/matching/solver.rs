use crate::error::{Error, Result};
use crate::scenario::ReplicatorConfig;

use super::game::{barycenter, replicator_step, Game};
use super::{Diagnostics, MatchResult, StrategySet};

/// Runs replicator dynamics from the barycenter, keeps strategies whose
/// share exceeds the survival threshold and resolves them greedily by share
/// into a one-to-one assignment (one device per subtask, one subtask per
/// device). Ties in share go to the lower strategy index.
pub fn solve_matching(set: &StrategySet, cfg: &ReplicatorConfig) -> Result<MatchResult> {
    solve_named("ttr", set, cfg)
}

pub(super) fn solve_named(
    solver: &str,
    set: &StrategySet,
    cfg: &ReplicatorConfig,
) -> Result<MatchResult> {
    if set.is_empty() {
        return Err(Error::NoStrategies);
    }
    let n = set.len();
    let base = Game::from_strategies(set);
    let game_order = base.effective_order();
    let game = base.with_order(game_order);

    let mut q = barycenter(n);
    let mut diagnostics = Diagnostics {
        strategies: n,
        game_order,
        ..Diagnostics::default()
    };
    for it in 1..=cfg.max_iters {
        let step = replicator_step(&game, &q);
        diagnostics.iterations = it;
        if step.stagnated {
            diagnostics.stagnated = true;
            break;
        }
        diagnostics.residual = step.q.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
        q = step.q;
        if diagnostics.residual < cfg.convergence_eps {
            break;
        }
    }

    let threshold = cfg.ess_threshold.unwrap_or(1.0 / (2.0 * n as f64));
    let mut survivors: Vec<usize> = (0..n).filter(|&k| q[k] > threshold).collect();
    survivors.sort_by(|&a, &b| q[b].total_cmp(&q[a]).then(a.cmp(&b)));
    diagnostics.survivors = survivors.iter().map(|&k| (k, q[k])).collect();

    let mut choices = vec![None; set.n_subtasks()];
    let mut device_used = vec![false; set.n_devices];
    for &k in &survivors {
        let s = &set.strategies[k];
        if choices[s.subtask].is_none() && !device_used[s.device] {
            choices[s.subtask] = Some(k);
            device_used[s.device] = true;
        }
    }
    Ok(MatchResult::from_choices(
        solver,
        set,
        &choices,
        diagnostics,
    ))
}
