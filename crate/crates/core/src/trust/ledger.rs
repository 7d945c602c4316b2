use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DeviceId, Fleet, TaskTypeId};
use crate::scenario::LinkLoss;

/// Outcome of one offloaded subtask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionRecord {
    pub initiator: DeviceId,
    pub collaborator: DeviceId,
    pub task_type: TaskTypeId,
    pub b_tra: u8,
    pub b_exe: u8,
    pub b_ret: u8,
}

impl InteractionRecord {
    pub fn succeeded(&self) -> bool {
        self.b_ret == 1
    }

    fn is_consistent(&self) -> bool {
        self.b_tra <= 1 && self.b_exe <= 1 && self.b_ret == self.b_tra * self.b_exe
    }
}

/// Count of subtasks and how many of them returned successfully.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub count: u64,
    pub successes: u64,
}

impl Tally {
    /// Success ratio, or `prior` with no history.
    pub fn ratio_or(&self, prior: f64) -> f64 {
        if self.count == 0 {
            prior
        } else {
            self.successes as f64 / self.count as f64
        }
    }

    fn add(&mut self, success: bool) {
        self.count += 1;
        self.successes += u64::from(success);
    }
}

/// Append-only interaction history with per-pair and per-(pair, type)
/// tallies.
#[derive(Debug, Clone, Default)]
pub struct TrustLedger {
    records: Vec<InteractionRecord>,
    pairs: HashMap<(DeviceId, DeviceId), Tally>,
    typed: HashMap<(DeviceId, DeviceId, TaskTypeId), Tally>,
}

impl PartialEq for TrustLedger {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records
    }
}

impl TrustLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, record: InteractionRecord) {
        let ok = record.succeeded();
        self.pairs
            .entry((record.initiator, record.collaborator))
            .or_default()
            .add(ok);
        self.typed
            .entry((record.initiator, record.collaborator, record.task_type))
            .or_default()
            .add(ok);
        self.records.push(record);
    }

    pub fn records(&self) -> &[InteractionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// All subtasks `initiator` has assigned to `collaborator`.
    pub fn pair(&self, initiator: DeviceId, collaborator: DeviceId) -> Tally {
        self.pairs
            .get(&(initiator, collaborator))
            .copied()
            .unwrap_or_default()
    }

    /// Subtasks of type `s` that `initiator` has assigned to `collaborator`.
    pub fn typed(&self, initiator: DeviceId, collaborator: DeviceId, s: TaskTypeId) -> Tally {
        self.typed
            .get(&(initiator, collaborator, s))
            .copied()
            .unwrap_or_default()
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n").map_err(|e| Error::io("<ledger>", e))?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut ledger = Self::new();
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<ledger>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: InteractionRecord = serde_json::from_str(&line)?;
            if !record.is_consistent() {
                return Err(Error::Experiment(format!(
                    "ledger line {}: b_ret must equal b_tra * b_exe",
                    n + 1
                )));
            }
            ledger.append(record);
        }
        Ok(ledger)
    }
}

/// Observed link loss for one transfer and whether execution succeeded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeInputs {
    pub packet_loss: f64,
    pub execution_success: bool,
}

/// Appends the record for one subtask. Transmission succeeds when the
/// observed loss is within `loss_threshold`; a failed transmission also
/// counts as a failed execution.
pub fn record_outcome(
    ledger: &mut TrustLedger,
    initiator: DeviceId,
    collaborator: DeviceId,
    task_type: TaskTypeId,
    inputs: OutcomeInputs,
    loss_threshold: f64,
) -> InteractionRecord {
    let b_tra = u8::from(inputs.packet_loss <= loss_threshold);
    let b_exe = b_tra * u8::from(inputs.execution_success);
    let record = InteractionRecord {
        initiator,
        collaborator,
        task_type,
        b_tra,
        b_exe,
        b_ret: b_tra * b_exe,
    };
    ledger.append(record);
    record
}

/// Generative model for interaction outcomes. The loss of one transfer is
/// exponential with the link's configured mean; execution succeeds with the
/// collaborator's per-type reliability and is only drawn after a successful
/// transfer.
#[derive(Debug, Clone, Copy)]
pub struct OutcomeModel<'a> {
    pub fleet: &'a Fleet,
    pub link_loss: &'a LinkLoss,
    pub loss_threshold: f64,
}

impl OutcomeModel<'_> {
    pub fn sample<R: Rng>(
        &self,
        rng: &mut R,
        from: usize,
        to: usize,
        s: TaskTypeId,
    ) -> OutcomeInputs {
        let mean = self.link_loss.rate(from, to);
        let packet_loss = if mean > 0.0 {
            Exp::new(1.0 / mean)
                .map(|d| d.sample(rng))
                .unwrap_or(0.0)
                .min(1.0)
        } else {
            0.0
        };
        let execution_success = packet_loss <= self.loss_threshold
            && rng.random_bool(self.fleet.devices()[to].reliability_for(s).clamp(0.0, 1.0));
        OutcomeInputs {
            packet_loss,
            execution_success,
        }
    }

    /// Samples and records one interaction between fleet positions.
    pub fn interact<R: Rng>(
        &self,
        ledger: &mut TrustLedger,
        rng: &mut R,
        from: usize,
        to: usize,
        s: TaskTypeId,
    ) -> InteractionRecord {
        let inputs = self.sample(rng, from, to, s);
        let devices = self.fleet.devices();
        record_outcome(
            ledger,
            devices[from].id,
            devices[to].id,
            s,
            inputs,
            self.loss_threshold,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    /// Upper bound on subtasks per generated task (further capped at J - 1).
    pub max_subtasks: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { max_subtasks: 4 }
    }
}

/// Assignments made during a bootstrap run, in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BootstrapLog {
    pub tasks: usize,
    pub assignments: Vec<(DeviceId, DeviceId, TaskTypeId)>,
}

/// Seeds the ledger with `n_tasks` random tasks. Each task has a uniformly
/// chosen initiator and a random number of subtasks; every subtask gets a
/// type some unused peer supports and goes to a uniformly chosen such peer.
pub fn bootstrap_trust<R: Rng>(
    model: &OutcomeModel<'_>,
    ledger: &mut TrustLedger,
    n_tasks: usize,
    config: BootstrapConfig,
    rng: &mut R,
) -> BootstrapLog {
    let fleet = model.fleet;
    let mut log = BootstrapLog {
        tasks: n_tasks,
        assignments: Vec::new(),
    };
    if fleet.len() < 2 {
        return log;
    }
    let devices = fleet.devices();
    let type_count = fleet.task_types().len();
    let max_m = config.max_subtasks.clamp(1, fleet.len() - 1);
    let mut used = vec![false; fleet.len()];

    for _ in 0..n_tasks {
        let initiator = rng.random_range(0..fleet.len());
        let m = rng.random_range(1..=max_m);
        used.iter_mut().for_each(|u| *u = false);
        used[initiator] = true;
        for _ in 0..m {
            let available: Vec<TaskTypeId> = (0..type_count)
                .map(|k| TaskTypeId(k as u16))
                .filter(|&s| {
                    devices
                        .iter()
                        .enumerate()
                        .any(|(j, d)| !used[j] && d.supports(s))
                })
                .collect();
            let Some(&s) = available.choose(rng) else {
                break;
            };
            let peers: Vec<usize> = (0..fleet.len())
                .filter(|&j| !used[j] && devices[j].supports(s))
                .collect();
            let &to = peers
                .choose(rng)
                .expect("type was filtered for an available peer");
            used[to] = true;
            model.interact(ledger, rng, initiator, to, s);
            log.assignments
                .push((devices[initiator].id, devices[to].id, s));
        }
    }
    log
}
