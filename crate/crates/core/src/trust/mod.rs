//! Task-specific trust.
//!
//! Trust of an initiator `a_i` in a collaborator `a_j` for task type `s` is
//! built in stages:
//!
//! 1. pairwise evaluation `R(a_i, a_j)` from shared task types, shared
//!    potential collaborators and the overall success ratio of past subtasks;
//! 2. group trust per cluster (devices supporting one type), the mean of the
//!    peers' evaluations of each member;
//! 3. a directed edge weight `w = β1·T_aj + β2·R(a_i, a_j)`, where `T_aj`
//!    averages `a_j`'s group trust over the clusters it belongs to;
//! 4. the task-specific value `w + β3·(success ratio of type-s subtasks)`.
//!
//! Ratios with no history fall back to [`TrustWeights::neutral_prior`].

mod graph;
mod ledger;

use serde::{Deserialize, Serialize};

pub use graph::{
    build_group_trust_hypergraph, decompose_to_directed, pairwise_trust, task_specific_trust,
    Cluster, DirectedTrustGraph, GroupHyperedge, GroupTrustHypergraph, TrustEngine,
};
pub use ledger::{
    bootstrap_trust, record_outcome, BootstrapConfig, BootstrapLog, InteractionRecord,
    OutcomeInputs, OutcomeModel, Tally, TrustLedger,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrustWeights {
    /// Weights of overall trust, direct trust and per-type success ratio.
    pub beta: [f64; 3],
    /// Weights of shared types, shared collaborators and success ratio
    /// inside the pairwise evaluation.
    pub delta: [f64; 3],
    #[serde(default = "default_prior")]
    pub neutral_prior: f64,
}

fn default_prior() -> f64 {
    0.5
}

impl Default for TrustWeights {
    fn default() -> Self {
        Self {
            beta: [1.0 / 3.0; 3],
            delta: [1.0 / 3.0; 3],
            neutral_prior: 0.5,
        }
    }
}

impl TrustWeights {
    pub fn with_beta(self, beta: [f64; 3]) -> Self {
        Self { beta, ..self }
    }

    /// Weights of the one-to-one (type-agnostic) model used for comparison:
    /// `β1` is kept, the per-type term is dropped and direct trust takes the
    /// remainder.
    pub fn one_to_one(self) -> Self {
        let b1 = self.beta[0];
        self.with_beta([b1, 1.0 - b1, 0.0])
    }
}
