//! Directed 3-uniform hypergraphs over devices and task types.
//!
//! A resource hyperedge `(a_i, s, a_j)` offers collaborator `a_j` to
//! initiator `a_i` for type `s`, weighted by task-specific trust. A task
//! hyperedge `(a_i', b_m, φ)` is one subtask's demand, weighted by its minimum
//! trust. `φ` is a single placeholder vertex shared by every task hyperedge.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DeviceId, Fleet, Subtask, Task, TaskTypeId};
use crate::trust::{DirectedTrustGraph, TrustEngine, TrustLedger, TrustWeights};

/// Physical attributes attached to a device vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceVertex {
    pub id: DeviceId,
    pub cpu_hz: f64,
    pub tx_power_w: f64,
    pub position: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceHyperedge {
    pub initiator: DeviceId,
    pub task_type: TaskTypeId,
    pub collaborator: DeviceId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceHypergraph {
    pub devices: Vec<DeviceVertex>,
    pub task_types: Vec<TaskTypeId>,
    /// Sorted by initiator, then collaborator (fleet order), then type.
    pub hyperedges: Vec<ResourceHyperedge>,
}

impl ResourceHypergraph {
    /// Expands every directed trust edge into one hyperedge per task type
    /// both endpoints support.
    pub fn from_engine(engine: &TrustEngine<'_>) -> Self {
        let fleet = engine.fleet();
        let d = fleet.devices();
        let mut hyperedges = Vec::new();
        for i in 0..fleet.len() {
            for j in 0..fleet.len() {
                if engine.direct_weight(i, j).is_none() {
                    continue;
                }
                for &s in d[i].supported_types.intersection(&d[j].supported_types) {
                    let weight = engine
                        .task_specific(i, j, s)
                        .expect("shared type on an existing edge");
                    hyperedges.push(ResourceHyperedge {
                        initiator: d[i].id,
                        task_type: s,
                        collaborator: d[j].id,
                        weight,
                    });
                }
            }
        }
        Self::with_edges(fleet, hyperedges)
    }

    /// Hyperedges whose initiator is `initiator` only. Equivalent to
    /// filtering [`ResourceHypergraph::from_engine`], at `O(J)` cost.
    pub fn from_engine_for(engine: &TrustEngine<'_>, initiator: DeviceId) -> Result<Self> {
        let fleet = engine.fleet();
        let d = fleet.devices();
        let i = fleet.index_of(initiator)?;
        let mut hyperedges = Vec::new();
        for j in 0..fleet.len() {
            if engine.direct_weight(i, j).is_none() {
                continue;
            }
            for &s in d[i].supported_types.intersection(&d[j].supported_types) {
                hyperedges.push(ResourceHyperedge {
                    initiator,
                    task_type: s,
                    collaborator: d[j].id,
                    weight: engine.task_specific(i, j, s)?,
                });
            }
        }
        Ok(Self::with_edges(fleet, hyperedges))
    }

    fn with_edges(fleet: &Fleet, hyperedges: Vec<ResourceHyperedge>) -> Self {
        Self {
            devices: fleet
                .devices()
                .iter()
                .map(|d| DeviceVertex {
                    id: d.id,
                    cpu_hz: d.cpu_hz,
                    tx_power_w: d.tx_power_w,
                    position: d.position.clone(),
                })
                .collect(),
            task_types: fleet.task_types().iter().map(|t| t.id).collect(),
            hyperedges,
        }
    }

    /// Hyperedges from `initiator` for type `s`, any collaborator.
    pub fn candidates(
        &self,
        initiator: DeviceId,
        s: TaskTypeId,
    ) -> impl Iterator<Item = &ResourceHyperedge> {
        self.hyperedges
            .iter()
            .filter(move |e| e.initiator == initiator && e.task_type == s)
    }

    pub fn incidence(&self) -> IncidenceMatrix {
        let n_dev = self.devices.len();
        let mut vertices: Vec<String> = self.devices.iter().map(|d| d.id.to_string()).collect();
        vertices.extend(self.task_types.iter().map(|s| s.to_string()));
        let device_row = |id: DeviceId| self.devices.iter().position(|d| d.id == id);
        let type_row = |s: TaskTypeId| {
            self.task_types
                .iter()
                .position(|&t| t == s)
                .map(|k| n_dev + k)
        };
        let columns = self
            .hyperedges
            .iter()
            .map(|e| {
                [
                    device_row(e.initiator),
                    type_row(e.task_type),
                    device_row(e.collaborator),
                ]
                .into_iter()
                .flatten()
                .collect()
            })
            .collect();
        IncidenceMatrix::from_columns(vertices, columns)
    }
}

/// Builds the resource hypergraph from a directed trust graph, weighting
/// each hyperedge by task-specific trust.
pub fn build_resource_hypergraph(
    graph: &DirectedTrustGraph,
    fleet: &Fleet,
    ledger: &TrustLedger,
    weights: TrustWeights,
) -> Result<ResourceHypergraph> {
    let mut hyperedges = Vec::new();
    for &(from, to) in graph.edges.keys() {
        let (a, b) = (fleet.device(from)?, fleet.device(to)?);
        for &s in a.supported_types.intersection(&b.supported_types) {
            hyperedges.push(ResourceHyperedge {
                initiator: from,
                task_type: s,
                collaborator: to,
                weight: crate::trust::task_specific_trust(
                    graph, fleet, ledger, weights, from, to, s,
                )?,
            });
        }
    }
    let pos = |id: DeviceId| fleet.index_of(id).expect("checked above");
    hyperedges.sort_by_key(|e| (pos(e.initiator), pos(e.collaborator), e.task_type));
    Ok(ResourceHypergraph::with_edges(fleet, hyperedges))
}

pub fn candidate_resource_edges(
    h: &ResourceHypergraph,
    initiator: DeviceId,
    s: TaskTypeId,
) -> Vec<ResourceHyperedge> {
    h.candidates(initiator, s).copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskHyperedge {
    pub initiator: DeviceId,
    /// Position of the subtask in the task.
    pub subtask: usize,
    pub task_type: TaskTypeId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskHypergraph {
    pub initiator: DeviceId,
    /// Subtask vertices with their attributes.
    pub subtasks: Vec<Subtask>,
    pub hyperedges: Vec<TaskHyperedge>,
}

impl TaskHypergraph {
    pub fn incidence(&self) -> IncidenceMatrix {
        let m = self.subtasks.len();
        let mut vertices = vec![self.initiator.to_string()];
        vertices.extend((1..=m).map(|k| format!("b{k}")));
        vertices.push("phi".to_string());
        let columns = self
            .hyperedges
            .iter()
            .map(|e| vec![0, 1 + e.subtask, m + 1])
            .collect();
        IncidenceMatrix::from_columns(vertices, columns)
    }
}

pub fn build_task_hypergraph(task: &Task) -> TaskHypergraph {
    TaskHypergraph {
        initiator: task.initiator,
        subtasks: task.subtasks.clone(),
        hyperedges: task
            .subtasks
            .iter()
            .enumerate()
            .map(|(m, b)| TaskHyperedge {
                initiator: task.initiator,
                subtask: m,
                task_type: b.task_type,
                weight: b.min_trust,
            })
            .collect(),
    }
}

/// Dense 0/1 vertex-by-hyperedge matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceMatrix {
    pub vertices: Vec<String>,
    /// `rows[v][e]`.
    pub rows: Vec<Vec<u8>>,
}

impl IncidenceMatrix {
    fn from_columns(vertices: Vec<String>, columns: Vec<Vec<usize>>) -> Self {
        let mut rows = vec![vec![0u8; columns.len()]; vertices.len()];
        for (e, col) in columns.iter().enumerate() {
            for &v in col {
                rows[v][e] = 1;
            }
        }
        Self { vertices, rows }
    }

    pub fn n_edges(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn column_sums(&self) -> Vec<u32> {
        (0..self.n_edges())
            .map(|e| self.rows.iter().map(|r| u32::from(r[e])).sum())
            .collect()
    }

    /// Header `vertex,e1,e2,...`, one row per vertex.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["vertex".to_string()];
        header.extend((1..=self.n_edges()).map(|e| format!("e{e}")));
        w.write_record(&header)?;
        for (label, row) in self.vertices.iter().zip(&self.rows) {
            let mut record = vec![label.clone()];
            record.extend(row.iter().map(u8::to_string));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<incidence>", e))
    }
}

pub fn incidence_matrix(h: &ResourceHypergraph) -> IncidenceMatrix {
    h.incidence()
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::catalog::{
        builtin_ics_catalog, four_subtask_task, table_iii_task, FR, MAP3D, TWC, VT,
    };
    use crate::trust::{record_outcome, OutcomeInputs};

    fn ics() -> Fleet {
        builtin_ics_catalog().fleet().unwrap()
    }

    fn sample_ledger() -> TrustLedger {
        let mut l = TrustLedger::new();
        for k in 0..40u32 {
            let inputs = OutcomeInputs {
                packet_loss: 0.0,
                execution_success: k % 3 != 0,
            };
            record_outcome(
                &mut l,
                DeviceId(1 + k % 5),
                DeviceId(2 + k % 17),
                TaskTypeId((k % 4) as u16),
                inputs,
                0.05,
            );
        }
        l
    }

    #[test]
    fn two_shared_types_give_two_hyperedges() {
        let fleet = ics();
        let l = TrustLedger::new();
        let h =
            ResourceHypergraph::from_engine(&TrustEngine::new(&fleet, &l, TrustWeights::default()));
        let pixel_to_lambda: BTreeSet<_> = h
            .hyperedges
            .iter()
            .filter(|e| e.initiator == DeviceId(2) && e.collaborator == DeviceId(16))
            .map(|e| e.task_type)
            .collect();
        assert_eq!(pixel_to_lambda, BTreeSet::from([FR, TWC, MAP3D]));
        // Rosbot and DELL 5820 share nothing
        assert!(!h
            .hyperedges
            .iter()
            .any(|e| e.initiator == DeviceId(18) && e.collaborator == DeviceId(13)));
        // Rosbot and Robofleet share only 3DM
        for (a, b) in [(18, 22), (22, 18)] {
            let e: Vec<_> = h
                .hyperedges
                .iter()
                .filter(|e| e.initiator == DeviceId(a) && e.collaborator == DeviceId(b))
                .collect();
            assert_eq!(e.len(), 1);
            assert_eq!(e[0].task_type, MAP3D);
        }
    }

    #[test]
    fn edge_count_matches_shared_types() {
        let fleet = ics();
        let l = sample_ledger();
        let h =
            ResourceHypergraph::from_engine(&TrustEngine::new(&fleet, &l, TrustWeights::default()));
        let d = fleet.devices();
        let mut expected = 0;
        for a in d {
            for b in d {
                if a.id != b.id {
                    expected += a.supported_types.intersection(&b.supported_types).count();
                }
            }
        }
        assert_eq!(h.hyperedges.len(), expected);
        assert!(h.incidence().column_sums().iter().all(|&c| c == 3));
    }

    #[test]
    fn staged_construction_matches_engine() {
        let fleet = ics();
        let l = sample_ledger();
        let w = TrustWeights::default().with_beta([0.1, 0.1, 0.8]);
        let engine = TrustEngine::new(&fleet, &l, w);
        let graph = crate::trust::decompose_to_directed(
            &crate::trust::build_group_trust_hypergraph(&fleet, &l, w),
            &fleet,
            &l,
            w,
        )
        .unwrap();
        let staged = build_resource_hypergraph(&graph, &fleet, &l, w).unwrap();
        let direct = ResourceHypergraph::from_engine(&engine);
        assert_eq!(staged.hyperedges.len(), direct.hyperedges.len());
        for (a, b) in staged.hyperedges.iter().zip(&direct.hyperedges) {
            assert_eq!(
                (a.initiator, a.task_type, a.collaborator),
                (b.initiator, b.task_type, b.collaborator)
            );
            assert!((a.weight - b.weight).abs() <= 1e-12);
        }
        let only_a1 = ResourceHypergraph::from_engine_for(&engine, DeviceId(1)).unwrap();
        let filtered: Vec<_> = direct
            .hyperedges
            .iter()
            .filter(|e| e.initiator == DeviceId(1))
            .copied()
            .collect();
        assert_eq!(only_a1.hyperedges, filtered);
    }

    #[test]
    fn candidate_queries() {
        let fleet = ics();
        let l = TrustLedger::new();
        let h =
            ResourceHypergraph::from_engine(&TrustEngine::new(&fleet, &l, TrustWeights::default()));
        // VT peers of the iPad: 3 DELL 5200, 3 DELL 5820, 2 Lambda
        let vt = candidate_resource_edges(&h, DeviceId(1), VT);
        assert_eq!(vt.len(), 8);
        assert!(vt
            .iter()
            .all(|e| e.initiator == DeviceId(1) && e.task_type == VT));
        // a Robofleet has no VT peers
        assert!(candidate_resource_edges(&h, DeviceId(22), VT).is_empty());
        assert_eq!(candidate_resource_edges(&h, DeviceId(1), MAP3D).len(), 19);
    }

    #[test]
    fn task_hypergraph_for_reference_batches() {
        let h = build_task_hypergraph(&table_iii_task());
        assert_eq!(h.hyperedges.len(), 3);
        assert!(h
            .hyperedges
            .iter()
            .all(|e| e.weight == 0.2 && e.initiator == DeviceId(1)));
        let h4 = build_task_hypergraph(&four_subtask_task());
        assert_eq!(h4.hyperedges.len(), 4);
        assert_eq!(h4.hyperedges[3].task_type, VT);
        let inc = h4.incidence();
        assert_eq!(inc.vertices, ["a1", "b1", "b2", "b3", "b4", "phi"]);
        assert!(inc.column_sums().iter().all(|&c| c == 3));
    }

    #[test]
    fn hand_written_incidence() {
        // vertices a1 a2 a3 s0 s1 s2 s3; edges (a1, s0, a2) and (a1, s3, a3)
        let cfg = builtin_ics_catalog();
        let fleet = Fleet::new(cfg.devices[..3].to_vec(), cfg.task_types.clone()).unwrap();
        let edges = vec![
            ResourceHyperedge {
                initiator: DeviceId(1),
                task_type: FR,
                collaborator: DeviceId(2),
                weight: 0.5,
            },
            ResourceHyperedge {
                initiator: DeviceId(1),
                task_type: MAP3D,
                collaborator: DeviceId(3),
                weight: 0.4,
            },
        ];
        let m = ResourceHypergraph::with_edges(&fleet, edges).incidence();
        let expected: Vec<Vec<u8>> = vec![
            vec![1, 1],
            vec![1, 0],
            vec![0, 1],
            vec![1, 0],
            vec![0, 0],
            vec![0, 0],
            vec![0, 1],
        ];
        assert_eq!(m.rows, expected);
        assert_eq!(m.vertices, ["a1", "a2", "a3", "s0", "s1", "s2", "s3"]);
        let mut csv = Vec::new();
        m.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().next(), Some("vertex,e1,e2"));
        assert_eq!(text.lines().nth(1), Some("a1,1,1"));
    }

    #[test]
    fn empty_hypergraph_has_no_columns() {
        let fleet = ics();
        let h = ResourceHypergraph::with_edges(&fleet, Vec::new());
        let m = h.incidence();
        assert_eq!(m.n_edges(), 0);
        assert_eq!(m.rows.len(), 26 + 4);
        assert!(m.column_sums().is_empty());
    }

    #[test]
    fn json_export_round_trips() {
        let fleet = ics();
        let l = TrustLedger::new();
        let h = ResourceHypergraph::from_engine_for(
            &TrustEngine::new(&fleet, &l, TrustWeights::default()),
            DeviceId(1),
        )
        .unwrap();
        let back: ResourceHypergraph =
            serde_json::from_str(&serde_json::to_string(&h).unwrap()).unwrap();
        assert_eq!(back, h);
    }
}
