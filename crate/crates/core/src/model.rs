//! Domain types shared by every stage of the pipeline: task types, devices,
//! subtasks and tasks, plus an indexed [`Fleet`] view over a device list.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Success probability used for a supported type when a device has no
/// explicit reliability entry.
pub const DEFAULT_RELIABILITY: f64 = 0.95;

/// Bits per megabyte, as used by the bundled task tables.
pub const BITS_PER_MB: f64 = 8.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeviceId(pub u32);

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskTypeId(pub u16);

impl TaskTypeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TaskTypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// An application class a device may be able to execute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskType {
    pub id: TaskTypeId,
    pub name: String,
    /// CPU cycles needed per input bit.
    pub processing_density: f64,
}

/// Physical description of one device: a single core and a single antenna.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub id: DeviceId,
    /// Hardware model label ("Pixel 8", "Lambda", ...). Informational.
    #[serde(default)]
    pub model: String,
    pub cpu_hz: f64,
    /// Coordinates in meters, 2-D or 3-D.
    pub position: Vec<f64>,
    pub tx_power_w: f64,
    pub supported_types: BTreeSet<TaskTypeId>,
    /// Per-type execution success probability. Simulation-only; missing
    /// entries fall back to [`DEFAULT_RELIABILITY`] for supported types.
    #[serde(default)]
    pub reliability: BTreeMap<TaskTypeId, f64>,
}

impl DeviceSpec {
    pub fn supports(&self, s: TaskTypeId) -> bool {
        self.supported_types.contains(&s)
    }

    pub fn reliability_for(&self, s: TaskTypeId) -> f64 {
        match self.reliability.get(&s) {
            Some(&r) => r,
            None if self.supports(s) => DEFAULT_RELIABILITY,
            None => 0.0,
        }
    }

    /// Euclidean distance; missing trailing coordinates count as zero.
    pub fn distance_to(&self, other: &DeviceSpec) -> f64 {
        let n = self.position.len().max(other.position.len());
        (0..n)
            .map(|k| {
                let a = self.position.get(k).copied().unwrap_or(0.0);
                let b = other.position.get(k).copied().unwrap_or(0.0);
                (a - b) * (a - b)
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// One independently executable unit of a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subtask {
    pub task_type: TaskTypeId,
    pub size_bits: f64,
    pub deadline_s: f64,
    /// Minimum trust demanded of a collaborator, in [0, 1].
    pub min_trust: f64,
    /// Minimum link rate demanded, bits per second.
    pub min_rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub initiator: DeviceId,
    pub subtasks: Vec<Subtask>,
}

impl Task {
    /// Checks the task against a fleet; the first violation becomes the error.
    pub fn validate(&self, fleet: &Fleet) -> Result<()> {
        match crate::scenario::validate_task(self, fleet)
            .into_iter()
            .next()
        {
            Some(v) => Err(Error::Validation(v)),
            None => Ok(()),
        }
    }
}

/// Devices and task types with id lookup. Device order is significant: it
/// indexes rate and loss matrices and fixes iteration order everywhere.
#[derive(Debug, Clone)]
pub struct Fleet {
    devices: Vec<DeviceSpec>,
    task_types: Vec<TaskType>,
    index: HashMap<DeviceId, usize>,
}

impl Fleet {
    pub fn new(devices: Vec<DeviceSpec>, task_types: Vec<TaskType>) -> Result<Self> {
        let mut index = HashMap::with_capacity(devices.len());
        for (k, d) in devices.iter().enumerate() {
            if index.insert(d.id, k).is_some() {
                return Err(Error::Experiment(format!("duplicate device id {}", d.id)));
            }
        }
        for (k, t) in task_types.iter().enumerate() {
            if t.id.index() != k {
                return Err(Error::Experiment(format!(
                    "task type ids must be dense; found {} at position {k}",
                    t.id
                )));
            }
        }
        Ok(Self {
            devices,
            task_types,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn devices(&self) -> &[DeviceSpec] {
        &self.devices
    }

    pub fn task_types(&self) -> &[TaskType] {
        &self.task_types
    }

    pub fn index_of(&self, id: DeviceId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownDevice(id))
    }

    pub fn device(&self, id: DeviceId) -> Result<&DeviceSpec> {
        Ok(&self.devices[self.index_of(id)?])
    }

    pub fn task_type(&self, id: TaskTypeId) -> Result<&TaskType> {
        self.task_types
            .get(id.index())
            .ok_or(Error::UnknownTaskType(id))
    }

    pub fn type_by_name(&self, name: &str) -> Option<TaskTypeId> {
        self.task_types
            .iter()
            .find(|t| t.name == name)
            .map(|t| t.id)
    }
}
