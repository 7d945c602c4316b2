//! Trust-aware task allocation for collaborative edge devices.

pub mod catalog;
pub mod error;
pub mod hypergraph;
pub mod matching;
pub mod model;
pub mod physics;
pub mod scenario;
pub mod sim;
pub mod trust;

pub use error::{Error, Result};
pub use model::{DeviceId, DeviceSpec, Fleet, Subtask, Task, TaskType, TaskTypeId};
