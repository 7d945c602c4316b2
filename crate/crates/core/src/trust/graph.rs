use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ledger::TrustLedger;
use super::TrustWeights;
use crate::error::{Error, Result};
use crate::model::{DeviceId, Fleet, TaskTypeId};

/// Devices supporting one task type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub task_type: TaskTypeId,
    pub members: Vec<DeviceId>,
}

/// Hyperedge `e^s_{a_j}`: cluster `task_type` centered on `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupHyperedge {
    pub task_type: TaskTypeId,
    pub center: DeviceId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTrustHypergraph {
    pub clusters: Vec<Cluster>,
    pub hyperedges: Vec<GroupHyperedge>,
    /// Mean group trust of each device over its clusters.
    pub overall: BTreeMap<DeviceId, f64>,
}

impl GroupTrustHypergraph {
    pub fn group_trust(&self, center: DeviceId, s: TaskTypeId) -> Option<f64> {
        self.hyperedges
            .iter()
            .find(|e| e.center == center && e.task_type == s)
            .map(|e| e.weight)
    }
}

/// Weighted directed edges `a_i -> a_j` between devices sharing a cluster.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirectedTrustGraph {
    pub edges: BTreeMap<(DeviceId, DeviceId), f64>,
}

impl DirectedTrustGraph {
    pub fn weight(&self, from: DeviceId, to: DeviceId) -> Option<f64> {
        self.edges.get(&(from, to)).copied()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

type Bits = Vec<u64>;

fn bits(n: usize) -> Bits {
    vec![0; n.div_ceil(64)]
}

fn set(b: &mut Bits, k: usize) {
    b[k / 64] |= 1 << (k % 64);
}

fn unset(b: &mut Bits, k: usize) {
    b[k / 64] &= !(1 << (k % 64));
}

fn jaccard(a: &Bits, b: &Bits) -> f64 {
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.iter().zip(b) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        0.0
    } else {
        f64::from(inter) / f64::from(union)
    }
}

/// Snapshot of every trust quantity for one fleet and ledger state. All
/// pairwise evaluations are computed eagerly; indices are fleet positions.
#[derive(Debug, Clone)]
pub struct TrustEngine<'a> {
    fleet: &'a Fleet,
    ledger: &'a TrustLedger,
    weights: TrustWeights,
    /// Row-major `J x J`; the diagonal is unused.
    pairwise: Vec<f64>,
    /// `group[s][j]`: group trust of device `j` in cluster `s`, if a member.
    group: Vec<Vec<Option<f64>>>,
    overall: Vec<f64>,
    /// Devices per type, as fleet indices.
    clusters: Vec<Vec<usize>>,
}

impl<'a> TrustEngine<'a> {
    pub fn new(fleet: &'a Fleet, ledger: &'a TrustLedger, weights: TrustWeights) -> Self {
        let n = fleet.len();
        let n_types = fleet.task_types().len();
        let devices = fleet.devices();

        let clusters: Vec<Vec<usize>> = (0..n_types)
            .map(|s| {
                let s = TaskTypeId(s as u16);
                (0..n).filter(|&j| devices[j].supports(s)).collect()
            })
            .collect();

        let mut type_sets = vec![bits(n_types); n];
        let mut potential = vec![bits(n); n];
        for (s, members) in clusters.iter().enumerate() {
            for &j in members {
                set(&mut type_sets[j], s);
                for &k in members {
                    set(&mut potential[j], k);
                }
            }
        }
        for (j, g) in potential.iter_mut().enumerate() {
            unset(g, j);
        }

        let [d1, d2, d3] = weights.delta;
        let mut pairwise = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let history = ledger
                    .pair(devices[i].id, devices[j].id)
                    .ratio_or(weights.neutral_prior);
                pairwise[i * n + j] = d1 * jaccard(&type_sets[i], &type_sets[j])
                    + d2 * jaccard(&potential[i], &potential[j])
                    + d3 * history;
            }
        }

        let mut group = vec![vec![None; n]; n_types];
        for (s, members) in clusters.iter().enumerate() {
            for &j in members {
                let weight = if members.len() < 2 {
                    weights.neutral_prior
                } else {
                    let sum: f64 = members
                        .iter()
                        .filter(|&&i| i != j)
                        .map(|&i| pairwise[i * n + j])
                        .sum();
                    sum / (members.len() - 1) as f64
                };
                group[s][j] = Some(weight);
            }
        }

        let overall = (0..n)
            .map(|j| {
                let (sum, count) = group
                    .iter()
                    .filter_map(|g| g[j])
                    .fold((0.0, 0usize), |(a, c), w| (a + w, c + 1));
                if count == 0 {
                    weights.neutral_prior
                } else {
                    sum / count as f64
                }
            })
            .collect();

        Self {
            fleet,
            ledger,
            weights,
            pairwise,
            group,
            overall,
            clusters,
        }
    }

    pub fn fleet(&self) -> &'a Fleet {
        self.fleet
    }

    pub fn weights(&self) -> TrustWeights {
        self.weights
    }

    /// `R(a_i, a_j)` by fleet position.
    pub fn pairwise(&self, i: usize, j: usize) -> f64 {
        self.pairwise[i * self.fleet.len() + j]
    }

    pub fn group_trust(&self, j: usize, s: TaskTypeId) -> Option<f64> {
        self.group.get(s.index()).and_then(|g| g[j])
    }

    pub fn overall(&self, j: usize) -> f64 {
        self.overall[j]
    }

    pub fn share_cluster(&self, i: usize, j: usize) -> bool {
        let (a, b) = (&self.fleet.devices()[i], &self.fleet.devices()[j]);
        a.supported_types.iter().any(|&s| b.supports(s))
    }

    /// Directed weight `w_{a_i -> a_j}`; `None` unless the devices are
    /// distinct and share a cluster.
    pub fn direct_weight(&self, i: usize, j: usize) -> Option<f64> {
        if i == j || !self.share_cluster(i, j) {
            return None;
        }
        let [b1, b2, _] = self.weights.beta;
        Some(b1 * self.overall[j] + b2 * self.pairwise(i, j))
    }

    /// Success ratio of type-`s` subtasks from `i` to `j`, or the prior.
    pub fn typed_ratio(&self, i: usize, j: usize, s: TaskTypeId) -> f64 {
        let d = self.fleet.devices();
        self.ledger
            .typed(d[i].id, d[j].id, s)
            .ratio_or(self.weights.neutral_prior)
    }

    /// `T^s_{a_i, a_j}` by fleet position.
    pub fn task_specific(&self, i: usize, j: usize, s: TaskTypeId) -> Result<f64> {
        let d = self.fleet.devices();
        for k in [i, j] {
            if !d[k].supports(s) {
                return Err(Error::UnsupportedType {
                    device: d[k].id,
                    task_type: s,
                });
            }
        }
        let w = self
            .direct_weight(i, j)
            .ok_or(Error::MissingEdge(d[i].id, d[j].id))?;
        Ok(w + self.weights.beta[2] * self.typed_ratio(i, j, s))
    }

    pub fn hypergraph(&self) -> GroupTrustHypergraph {
        let d = self.fleet.devices();
        let clusters = self
            .clusters
            .iter()
            .enumerate()
            .map(|(s, m)| Cluster {
                task_type: TaskTypeId(s as u16),
                members: m.iter().map(|&j| d[j].id).collect(),
            })
            .collect();
        let hyperedges = self
            .clusters
            .iter()
            .enumerate()
            .flat_map(|(s, m)| {
                m.iter().map(move |&j| GroupHyperedge {
                    task_type: TaskTypeId(s as u16),
                    center: d[j].id,
                    weight: self.group[s][j].expect("cluster member has group trust"),
                })
            })
            .collect();
        let overall = d
            .iter()
            .zip(&self.overall)
            .map(|(dev, &t)| (dev.id, t))
            .collect();
        GroupTrustHypergraph {
            clusters,
            hyperedges,
            overall,
        }
    }

    pub fn directed(&self) -> DirectedTrustGraph {
        let n = self.fleet.len();
        let d = self.fleet.devices();
        let mut edges = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                if let Some(w) = self.direct_weight(i, j) {
                    edges.insert((d[i].id, d[j].id), w);
                }
            }
        }
        DirectedTrustGraph { edges }
    }
}

/// `R(a_i, a_j)`.
pub fn pairwise_trust(
    fleet: &Fleet,
    ledger: &TrustLedger,
    weights: TrustWeights,
    initiator: DeviceId,
    collaborator: DeviceId,
) -> Result<f64> {
    let (i, j) = (fleet.index_of(initiator)?, fleet.index_of(collaborator)?);
    if i == j {
        return Err(Error::MissingEdge(initiator, collaborator));
    }
    Ok(TrustEngine::new(fleet, ledger, weights).pairwise(i, j))
}

pub fn build_group_trust_hypergraph(
    fleet: &Fleet,
    ledger: &TrustLedger,
    weights: TrustWeights,
) -> GroupTrustHypergraph {
    TrustEngine::new(fleet, ledger, weights).hypergraph()
}

/// Splits every hyperedge into directed edges from each other member to its
/// center. Edges from several shared clusters coincide.
pub fn decompose_to_directed(
    hypergraph: &GroupTrustHypergraph,
    fleet: &Fleet,
    ledger: &TrustLedger,
    weights: TrustWeights,
) -> Result<DirectedTrustGraph> {
    let engine = TrustEngine::new(fleet, ledger, weights);
    let [b1, b2, _] = weights.beta;
    let mut edges = BTreeMap::new();
    for e in &hypergraph.hyperedges {
        let cluster = hypergraph
            .clusters
            .iter()
            .find(|c| c.task_type == e.task_type)
            .ok_or(Error::UnknownTaskType(e.task_type))?;
        let overall = hypergraph
            .overall
            .get(&e.center)
            .copied()
            .ok_or(Error::UnknownDevice(e.center))?;
        let j = fleet.index_of(e.center)?;
        for &member in cluster.members.iter().filter(|&&m| m != e.center) {
            let i = fleet.index_of(member)?;
            edges.insert(
                (member, e.center),
                b1 * overall + b2 * engine.pairwise(i, j),
            );
        }
    }
    Ok(DirectedTrustGraph { edges })
}

/// `T^s_{a_i, a_j} = w_{a_i -> a_j} + β3 · (type-s success ratio)`.
pub fn task_specific_trust(
    graph: &DirectedTrustGraph,
    fleet: &Fleet,
    ledger: &TrustLedger,
    weights: TrustWeights,
    initiator: DeviceId,
    collaborator: DeviceId,
    s: TaskTypeId,
) -> Result<f64> {
    for id in [initiator, collaborator] {
        if !fleet.device(id)?.supports(s) {
            return Err(Error::UnsupportedType {
                device: id,
                task_type: s,
            });
        }
    }
    let w = graph
        .weight(initiator, collaborator)
        .ok_or(Error::MissingEdge(initiator, collaborator))?;
    Ok(w + weights.beta[2]
        * ledger
            .typed(initiator, collaborator, s)
            .ratio_or(weights.neutral_prior))
}
