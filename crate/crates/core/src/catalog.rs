//! Built-in intelligent-collaborative-system (ICS) catalog: 26 devices over
//! seven hardware models, four task types, and the reference task batch.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::model::{
    DeviceId, DeviceSpec, Subtask, Task, TaskType, TaskTypeId, BITS_PER_MB, DEFAULT_RELIABILITY,
};
use crate::physics::{ChannelConfig, ValueWeights};
use crate::scenario::{LinkLoss, ReplicatorConfig, ScenarioConfig};
use crate::trust::TrustWeights;

pub const FR: TaskTypeId = TaskTypeId(0);
pub const VT: TaskTypeId = TaskTypeId(1);
pub const TWC: TaskTypeId = TaskTypeId(2);
pub const MAP3D: TaskTypeId = TaskTypeId(3);

pub const DEFAULT_SEED: u64 = 20_250_101;

/// Side of the square deployment area, meters.
pub const AREA_SIDE_M: f64 = 30.0;

/// A hardware model from the catalog table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceModel {
    pub name: &'static str,
    pub cpu_hz: f64,
    pub tx_power_w: f64,
    pub types: &'static [TaskTypeId],
}

pub const IPAD: DeviceModel = DeviceModel {
    name: "iPad",
    cpu_hz: 2.34e9,
    tx_power_w: 0.700,
    types: &[FR, TWC, MAP3D, VT],
};
pub const PIXEL_8: DeviceModel = DeviceModel {
    name: "Pixel 8",
    cpu_hz: 2.91e9,
    tx_power_w: 0.740,
    types: &[FR, TWC, MAP3D],
};
pub const DELL_5200: DeviceModel = DeviceModel {
    name: "DELL 5200",
    cpu_hz: 3.8e9,
    tx_power_w: 0.660,
    types: &[FR, TWC, VT],
};
pub const DELL_5820: DeviceModel = DeviceModel {
    name: "DELL 5820",
    cpu_hz: 3.2e9,
    tx_power_w: 0.660,
    types: &[FR, TWC, VT],
};
pub const LAMBDA: DeviceModel = DeviceModel {
    name: "Lambda",
    cpu_hz: 4.5e9,
    tx_power_w: 0.660,
    types: &[FR, TWC, VT, MAP3D],
};
pub const ROSBOT: DeviceModel = DeviceModel {
    name: "Rosbot Plus",
    cpu_hz: 168e6,
    tx_power_w: 0.660,
    types: &[MAP3D],
};
pub const ROBOFLEET: DeviceModel = DeviceModel {
    name: "Robofleet",
    cpu_hz: 72e6,
    tx_power_w: 0.660,
    types: &[MAP3D],
};

/// Device models in a_1..a_26 order with their counts.
pub const ICS_FLEET: [(DeviceModel, usize); 7] = [
    (IPAD, 1),
    (PIXEL_8, 8),
    (DELL_5200, 3),
    (DELL_5820, 3),
    (LAMBDA, 2),
    (ROSBOT, 4),
    (ROBOFLEET, 5),
];

/// Models replicated in equal numbers when scaling the fleet.
pub const SCALING_MODELS: [DeviceModel; 5] = [PIXEL_8, DELL_5200, DELL_5820, LAMBDA, ROSBOT];

pub fn ics_task_types() -> Vec<TaskType> {
    [
        ("FR", 2339.0),
        ("VT", 1000.0),
        ("TWC", 16800.0),
        ("3DM", 1500.0),
    ]
    .into_iter()
    .enumerate()
    .map(|(k, (name, rho))| TaskType {
        id: TaskTypeId(k as u16),
        name: name.to_string(),
        processing_density: rho,
    })
    .collect()
}

impl DeviceModel {
    pub fn instantiate(&self, id: DeviceId, position: Vec<f64>) -> DeviceSpec {
        let supported_types: BTreeSet<_> = self.types.iter().copied().collect();
        let reliability: BTreeMap<_, _> = supported_types
            .iter()
            .map(|&s| (s, DEFAULT_RELIABILITY))
            .collect();
        DeviceSpec {
            id,
            model: self.name.to_string(),
            cpu_hz: self.cpu_hz,
            position,
            tx_power_w: self.tx_power_w,
            supported_types,
            reliability,
        }
    }
}

pub fn random_position<R: Rng>(rng: &mut R) -> Vec<f64> {
    vec![
        rng.random_range(0.0..AREA_SIDE_M),
        rng.random_range(0.0..AREA_SIDE_M),
    ]
}

/// The 26-device ICS scenario, laid out uniformly at random over a
/// 30 m x 30 m area using `seed`.
pub fn ics_scenario(seed: u64) -> ScenarioConfig {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut devices = Vec::with_capacity(26);
    for (model, count) in ICS_FLEET {
        for _ in 0..count {
            let id = DeviceId(devices.len() as u32 + 1);
            devices.push(model.instantiate(id, random_position(&mut rng)));
        }
    }
    ScenarioConfig {
        task_types: ics_task_types(),
        devices,
        channel: ChannelConfig::default(),
        link_loss: LinkLoss::default(),
        trust_weights: TrustWeights::default(),
        value_weights: ValueWeights::default(),
        loss_threshold: 0.05,
        replicator: ReplicatorConfig::default(),
        rng_seed: seed,
    }
}

pub fn builtin_ics_catalog() -> ScenarioConfig {
    ics_scenario(DEFAULT_SEED)
}

fn mb(x: f64) -> f64 {
    x * BITS_PER_MB
}

/// The reference three-subtask batch (3DM, TWC, FR) issued by a_1.
pub fn table_iii_task() -> Task {
    Task {
        initiator: DeviceId(1),
        subtasks: vec![
            Subtask {
                task_type: MAP3D,
                size_bits: mb(5.0),
                deadline_s: 0.6,
                min_trust: 0.2,
                min_rate_bps: mb(10.0),
            },
            Subtask {
                task_type: TWC,
                size_bits: mb(1.0),
                deadline_s: 0.6,
                min_trust: 0.2,
                min_rate_bps: mb(2.0),
            },
            Subtask {
                task_type: FR,
                size_bits: mb(5.0),
                deadline_s: 0.6,
                min_trust: 0.2,
                min_rate_bps: mb(10.0),
            },
        ],
    }
}

/// The fourth subtask used in the fleet-scaling batch (VT, 10 MB). Its trust
/// demand is not tabulated, so it takes `min_trust`.
pub fn subtask_b4(min_trust: f64) -> Subtask {
    Subtask {
        task_type: VT,
        size_bits: mb(10.0),
        deadline_s: 0.6,
        min_trust,
        min_rate_bps: mb(10.0),
    }
}

pub fn four_subtask_task() -> Task {
    let mut task = table_iii_task();
    task.subtasks.push(subtask_b4(0.2));
    task
}
