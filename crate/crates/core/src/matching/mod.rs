//! Task-resource matching as a clustering game.
//!
//! Each strategy pairs one subtask with one admissible collaborator. A triple
//! of strategies pays the mean of their match scores when it is mutually
//! consistent (distinct subtasks and distinct collaborators), otherwise
//! nothing. Replicator dynamics over the strategy population converge to a
//! cluster of consistent high-score strategies, which is then resolved into a
//! one-to-one assignment.

mod baselines;
mod feasibility;
mod game;
mod oracle;
mod solver;
mod strategy;

use serde::{Deserialize, Serialize};

use crate::model::{DeviceId, TaskTypeId};
use crate::physics::ValueBreakdown;

pub use baselines::{baseline_nn, baseline_one_to_one, baseline_random};
pub use feasibility::{check_feasibility, Infeasibility};
pub use game::{barycenter, replicator_step, Game, Step};
pub use oracle::{oracle_brute_force, OracleBound};
pub use solver::solve_matching;
pub use strategy::{generate_strategies, Strategy, StrategySet};

/// Per-subtask outcome of a solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtaskOutcome {
    pub subtask: usize,
    pub task_type: TaskTypeId,
    pub collaborator: Option<DeviceId>,
    /// Zero when unassigned.
    pub value: f64,
    pub trust: Option<f64>,
    pub rate_bps: Option<f64>,
    pub breakdown: Option<ValueBreakdown>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub strategies: usize,
    pub iterations: usize,
    /// L1 change of the population in the last step.
    pub residual: f64,
    /// Size of the strategy groups that pay off: 3 normally, lower when no
    /// consistent triple exists.
    pub game_order: usize,
    pub stagnated: bool,
    /// Strategies above the survival threshold with their final shares.
    pub survivors: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub solver: String,
    pub subtasks: Vec<SubtaskOutcome>,
    pub average_value: f64,
    pub diagnostics: Diagnostics,
}

impl MatchResult {
    /// Builds a result from one optional strategy index per subtask.
    pub fn from_choices(
        solver: &str,
        set: &StrategySet,
        choices: &[Option<usize>],
        diagnostics: Diagnostics,
    ) -> Self {
        let subtasks: Vec<SubtaskOutcome> = choices
            .iter()
            .enumerate()
            .map(|(m, choice)| match choice.map(|n| &set.strategies[n]) {
                Some(st) => SubtaskOutcome {
                    subtask: m,
                    task_type: set.task_types[m],
                    collaborator: Some(st.collaborator),
                    value: st.score,
                    trust: Some(st.trust),
                    rate_bps: Some(st.rate_bps),
                    breakdown: Some(st.breakdown),
                },
                None => SubtaskOutcome {
                    subtask: m,
                    task_type: set.task_types[m],
                    collaborator: None,
                    value: 0.0,
                    trust: None,
                    rate_bps: None,
                    breakdown: None,
                },
            })
            .collect();
        let average_value = average_value(&subtasks);
        Self {
            solver: solver.to_string(),
            subtasks,
            average_value,
            diagnostics,
        }
    }

    /// `(subtask, collaborator)` pairs of the assigned subtasks.
    pub fn assignment(&self) -> Vec<(usize, DeviceId)> {
        self.subtasks
            .iter()
            .filter_map(|o| o.collaborator.map(|d| (o.subtask, d)))
            .collect()
    }

    pub fn assigned_count(&self) -> usize {
        self.subtasks
            .iter()
            .filter(|o| o.collaborator.is_some())
            .count()
    }

    pub fn unassigned_count(&self) -> usize {
        self.subtasks.len() - self.assigned_count()
    }
}

/// Mean value over all subtasks; unassigned ones count as zero.
pub fn average_value(outcomes: &[SubtaskOutcome]) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    outcomes.iter().map(|o| o.value).sum::<f64>() / outcomes.len() as f64
}
