use std::path::PathBuf;

use crate::model::{DeviceId, TaskTypeId};
use crate::scenario::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid scenario: {0}")]
    Validation(Violation),

    #[error("unknown device {0}")]
    UnknownDevice(DeviceId),

    #[error("unknown task type {0}")]
    UnknownTaskType(TaskTypeId),

    #[error("devices {0} and {1} share a position; path-loss gain is undefined")]
    ZeroDistance(DeviceId, DeviceId),

    #[error("link {0} -> {1} has no usable rate")]
    NoLink(DeviceId, DeviceId),

    #[error("expected energy is zero; value of energy is undefined")]
    ZeroExpectedEnergy,

    #[error("no trust edge {0} -> {1}")]
    MissingEdge(DeviceId, DeviceId),

    #[error("device {device} does not support task type {task_type}")]
    UnsupportedType {
        device: DeviceId,
        task_type: TaskTypeId,
    },

    #[error("no feasible collaborator for any subtask")]
    NoStrategies,

    #[error("brute-force search bound exceeded: {subtasks} subtasks over {devices} devices (limit {max_subtasks}/{max_devices})")]
    OracleBound {
        subtasks: usize,
        devices: usize,
        max_subtasks: usize,
        max_devices: usize,
    },

    #[error("invalid experiment: {0}")]
    Experiment(String),

    #[error("nothing to emit")]
    EmptyArtifacts,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
