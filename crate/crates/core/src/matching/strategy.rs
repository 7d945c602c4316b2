use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{ResourceHypergraph, TaskHypergraph};
use crate::model::{DeviceId, Fleet, TaskTypeId};
use crate::physics::{value_of_completion, ChannelConfig, ValueBreakdown, ValueWeights};

/// One admissible (subtask, collaborator) pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub subtask: usize,
    pub collaborator: DeviceId,
    /// Fleet position of the collaborator.
    pub device: usize,
    pub trust: f64,
    pub rate_bps: f64,
    pub distance_m: f64,
    /// Value of completion, used as the match score.
    pub score: f64,
    pub breakdown: ValueBreakdown,
}

/// Strategies ordered by subtask, then by collaborator fleet position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySet {
    pub initiator: DeviceId,
    pub task_types: Vec<TaskTypeId>,
    pub n_devices: usize,
    pub strategies: Vec<Strategy>,
}

impl StrategySet {
    pub fn n_subtasks(&self) -> usize {
        self.task_types.len()
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    /// Indices of the strategies for subtask `m`.
    pub fn for_subtask(&self, m: usize) -> impl Iterator<Item = usize> + '_ {
        self.strategies
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.subtask == m)
            .map(|(n, _)| n)
    }

    /// All admissible pairings, possibly none. A resource hyperedge is
    /// admissible for a subtask when it starts at the task's initiator, has
    /// the subtask's type, meets the trust demand and its link meets the rate
    /// demand.
    pub fn collect(
        task_h: &TaskHypergraph,
        res_h: &ResourceHypergraph,
        fleet: &Fleet,
        channel: &ChannelConfig,
        value_weights: &ValueWeights,
    ) -> Result<Self> {
        let initiator = fleet.device(task_h.initiator)?;
        let i = fleet.index_of(initiator.id)?;
        let mut strategies = Vec::new();
        for e in &task_h.hyperedges {
            let b = &task_h.subtasks[e.subtask];
            let rho = fleet.task_type(e.task_type)?.processing_density;
            for r in res_h.candidates(e.initiator, e.task_type) {
                if r.weight < e.weight {
                    continue;
                }
                let j = fleet.index_of(r.collaborator)?;
                let rate_bps = channel.rate(fleet, i, j)?;
                if rate_bps < b.min_rate_bps {
                    continue;
                }
                let collaborator = &fleet.devices()[j];
                let breakdown =
                    value_of_completion(b, rho, initiator, collaborator, rate_bps, value_weights)?;
                strategies.push(Strategy {
                    subtask: e.subtask,
                    collaborator: r.collaborator,
                    device: j,
                    trust: r.weight,
                    rate_bps,
                    distance_m: initiator.distance_to(collaborator),
                    score: breakdown.value,
                    breakdown,
                });
            }
        }
        strategies.sort_by_key(|s| (s.subtask, s.device));
        Ok(Self {
            initiator: initiator.id,
            task_types: task_h.hyperedges.iter().map(|e| e.task_type).collect(),
            n_devices: fleet.len(),
            strategies,
        })
    }
}

/// Like [`StrategySet::collect`], but an empty set is an error.
pub fn generate_strategies(
    task_h: &TaskHypergraph,
    res_h: &ResourceHypergraph,
    fleet: &Fleet,
    channel: &ChannelConfig,
    value_weights: &ValueWeights,
) -> Result<StrategySet> {
    let set = StrategySet::collect(task_h, res_h, fleet, channel, value_weights)?;
    if set.is_empty() {
        return Err(Error::NoStrategies);
    }
    Ok(set)
}
