use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::hypergraph::ResourceHypergraph;
use crate::model::{DeviceId, Fleet, Task};
use crate::physics::ChannelConfig;

/// A broken assignment constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Infeasibility {
    UnknownSubtask {
        subtask: usize,
    },
    UnknownDevice {
        device: DeviceId,
    },
    /// A subtask placed on more than one device.
    DuplicateSubtask {
        subtask: usize,
    },
    /// A device given more than one subtask.
    DeviceReused {
        device: DeviceId,
    },
    SelfAssignment {
        subtask: usize,
    },
    UnsupportedType {
        subtask: usize,
        device: DeviceId,
    },
    TrustBelowDemand {
        subtask: usize,
        device: DeviceId,
        trust: f64,
        demand: f64,
    },
    RateBelowDemand {
        subtask: usize,
        device: DeviceId,
        rate_bps: f64,
        demand_bps: f64,
    },
}

/// Every constraint `(subtask, device)` pairs violate; empty when the
/// assignment is feasible. Trust is read from `trust`'s hyperedges (missing
/// hyperedge counts as zero trust).
pub fn check_feasibility(
    assignment: &[(usize, DeviceId)],
    task: &Task,
    fleet: &Fleet,
    trust: &ResourceHypergraph,
    channel: &ChannelConfig,
) -> Vec<Infeasibility> {
    let mut out = Vec::new();
    let mut subtasks = HashSet::new();
    let mut devices = HashSet::new();
    let initiator = fleet.index_of(task.initiator).ok();

    for &(m, device) in assignment {
        if !subtasks.insert(m) {
            out.push(Infeasibility::DuplicateSubtask { subtask: m });
        }
        if !devices.insert(device) {
            out.push(Infeasibility::DeviceReused { device });
        }
        let Some(b) = task.subtasks.get(m) else {
            out.push(Infeasibility::UnknownSubtask { subtask: m });
            continue;
        };
        let Ok(j) = fleet.index_of(device) else {
            out.push(Infeasibility::UnknownDevice { device });
            continue;
        };
        if device == task.initiator {
            out.push(Infeasibility::SelfAssignment { subtask: m });
            continue;
        }
        if !fleet.devices()[j].supports(b.task_type) {
            out.push(Infeasibility::UnsupportedType { subtask: m, device });
        }
        let t = trust
            .hyperedges
            .iter()
            .find(|e| {
                e.initiator == task.initiator
                    && e.collaborator == device
                    && e.task_type == b.task_type
            })
            .map_or(0.0, |e| e.weight);
        if t < b.min_trust {
            out.push(Infeasibility::TrustBelowDemand {
                subtask: m,
                device,
                trust: t,
                demand: b.min_trust,
            });
        }
        let rate = initiator
            .and_then(|i| channel.rate(fleet, i, j).ok())
            .unwrap_or(0.0);
        if rate < b.min_rate_bps {
            out.push(Infeasibility::RateBelowDemand {
                subtask: m,
                device,
                rate_bps: rate,
                demand_bps: b.min_rate_bps,
            });
        }
    }
    out
}
