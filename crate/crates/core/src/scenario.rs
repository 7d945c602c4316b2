//! Scenario files: schema, validation and I/O.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DeviceSpec, Fleet, Task, TaskType};
use crate::physics::{ChannelConfig, ValueWeights};
use crate::trust::TrustWeights;

/// Mean packet-loss rate, either one value for every link or a full matrix
/// in fleet order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LinkLoss {
    Uniform(f64),
    Matrix(Vec<Vec<f64>>),
}

impl Default for LinkLoss {
    fn default() -> Self {
        LinkLoss::Uniform(0.01)
    }
}

impl LinkLoss {
    pub fn rate(&self, from: usize, to: usize) -> f64 {
        match self {
            LinkLoss::Uniform(r) => *r,
            LinkLoss::Matrix(m) => m[from][to],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicatorConfig {
    pub max_iters: usize,
    pub convergence_eps: f64,
    /// Survival threshold on population share; `None` means `1 / (2N)`.
    #[serde(default)]
    pub ess_threshold: Option<f64>,
}

impl Default for ReplicatorConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            convergence_eps: 1e-9,
            ess_threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub task_types: Vec<TaskType>,
    pub devices: Vec<DeviceSpec>,
    pub channel: ChannelConfig,
    pub link_loss: LinkLoss,
    pub trust_weights: TrustWeights,
    pub value_weights: ValueWeights,
    pub loss_threshold: f64,
    pub replicator: ReplicatorConfig,
    pub rng_seed: u64,
}

impl ScenarioConfig {
    /// Indexed view of the devices. The config must already be valid.
    pub fn fleet(&self) -> Result<Fleet> {
        Fleet::new(self.devices.clone(), self.task_types.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    DuplicateId,
    NonDenseTypeIds,
    DuplicateName,
    OutOfRange,
    EmptySet,
    UnknownReference,
    WeightsNotSimplex,
    ShapeMismatch,
    CoincidentPositions,
}

/// One broken invariant, located by a JSON-pointer-like path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {}: {}", self.code, self.path, self.message)
    }
}

const SIMPLEX_TOL: f64 = 1e-9;

struct Checker(Vec<Violation>);

impl Checker {
    fn push(&mut self, code: ViolationCode, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation {
            code,
            path: path.into(),
            message: message.into(),
        });
    }

    fn unit(&mut self, path: impl Into<String>, v: f64) {
        if !(0.0..=1.0).contains(&v) {
            self.push(
                ViolationCode::OutOfRange,
                path,
                format!("{v} is outside [0, 1]"),
            );
        }
    }

    fn positive(&mut self, path: impl Into<String>, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.push(
                ViolationCode::OutOfRange,
                path,
                format!("{v} must be positive"),
            );
        }
    }

    fn simplex(&mut self, path: &str, w: &[f64]) {
        for (k, &v) in w.iter().enumerate() {
            self.unit(format!("{path}/{k}"), v);
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            self.push(
                ViolationCode::WeightsNotSimplex,
                path,
                format!("weights sum to {sum}, not 1"),
            );
        }
    }

    fn square(&mut self, path: &str, m: &[Vec<f64>], n: usize) -> bool {
        if m.len() != n || m.iter().any(|row| row.len() != n) {
            self.push(
                ViolationCode::ShapeMismatch,
                path,
                format!("expected a {n}x{n} matrix"),
            );
            return false;
        }
        true
    }
}

/// Every broken invariant in `cfg`; empty when the config is valid.
pub fn validate_scenario(cfg: &ScenarioConfig) -> Vec<Violation> {
    let mut c = Checker(Vec::new());

    let mut names = HashSet::new();
    for (k, t) in cfg.task_types.iter().enumerate() {
        if t.id.index() != k {
            c.push(
                ViolationCode::NonDenseTypeIds,
                format!("/task_types/{k}/id"),
                format!("expected id {k}, found {}", t.id.0),
            );
        }
        if !names.insert(t.name.as_str()) {
            c.push(
                ViolationCode::DuplicateName,
                format!("/task_types/{k}/name"),
                format!("name {} repeated", t.name),
            );
        }
        c.positive(
            format!("/task_types/{k}/processing_density"),
            t.processing_density,
        );
    }
    let type_count = cfg.task_types.len();

    let mut ids = HashSet::new();
    for (k, d) in cfg.devices.iter().enumerate() {
        let at = format!("/devices/{k}");
        if !ids.insert(d.id) {
            c.push(
                ViolationCode::DuplicateId,
                format!("{at}/id"),
                format!("device id {} repeated", d.id.0),
            );
        }
        c.positive(format!("{at}/cpu_hz"), d.cpu_hz);
        c.positive(format!("{at}/tx_power_w"), d.tx_power_w);
        if !(2..=3).contains(&d.position.len()) {
            c.push(
                ViolationCode::ShapeMismatch,
                format!("{at}/position"),
                "position needs 2 or 3 coordinates",
            );
        }
        if d.supported_types.is_empty() {
            c.push(
                ViolationCode::EmptySet,
                format!("{at}/supported_types"),
                "device supports no task type",
            );
        }
        for s in &d.supported_types {
            if s.index() >= type_count {
                c.push(
                    ViolationCode::UnknownReference,
                    format!("{at}/supported_types"),
                    format!("unknown task type {}", s.0),
                );
            }
        }
        for (s, &r) in &d.reliability {
            if s.index() >= type_count {
                c.push(
                    ViolationCode::UnknownReference,
                    format!("{at}/reliability/{}", s.0),
                    format!("unknown task type {}", s.0),
                );
            }
            c.unit(format!("{at}/reliability/{}", s.0), r);
        }
    }

    let n = cfg.devices.len();
    match &cfg.channel {
        ChannelConfig::Pathloss(p) => {
            c.positive("/channel/bandwidth_hz", p.bandwidth_hz);
            c.positive("/channel/noise_w", p.noise_w);
            c.positive("/channel/alpha", p.alpha);
            for i in 0..n {
                for j in (i + 1)..n {
                    if cfg.devices[i].distance_to(&cfg.devices[j]) == 0.0 {
                        c.push(
                            ViolationCode::CoincidentPositions,
                            format!("/devices/{j}/position"),
                            format!("same position as device {}", cfg.devices[i].id.0),
                        );
                    }
                }
            }
        }
        ChannelConfig::Matrix { rates_bps } => {
            if c.square("/channel/rates_bps", rates_bps, n) {
                for (i, row) in rates_bps.iter().enumerate() {
                    for (j, &r) in row.iter().enumerate() {
                        if !(r >= 0.0 && r.is_finite()) {
                            c.push(
                                ViolationCode::OutOfRange,
                                format!("/channel/rates_bps/{i}/{j}"),
                                "rate must be finite and non-negative",
                            );
                        }
                    }
                }
            }
        }
    }

    match &cfg.link_loss {
        LinkLoss::Uniform(r) => c.unit("/link_loss", *r),
        LinkLoss::Matrix(m) => {
            if c.square("/link_loss", m, n) {
                for (i, row) in m.iter().enumerate() {
                    for (j, &r) in row.iter().enumerate() {
                        c.unit(format!("/link_loss/{i}/{j}"), r);
                    }
                }
            }
        }
    }

    c.simplex("/trust_weights/beta", &cfg.trust_weights.beta);
    c.simplex("/trust_weights/delta", &cfg.trust_weights.delta);
    c.unit(
        "/trust_weights/neutral_prior",
        cfg.trust_weights.neutral_prior,
    );
    c.simplex(
        "/value_weights",
        &[cfg.value_weights.xi_time, cfg.value_weights.xi_energy],
    );
    c.unit("/loss_threshold", cfg.loss_threshold);

    if cfg.replicator.max_iters == 0 {
        c.push(
            ViolationCode::OutOfRange,
            "/replicator/max_iters",
            "need at least one iteration",
        );
    }
    if cfg.replicator.convergence_eps.is_nan() || cfg.replicator.convergence_eps < 0.0 {
        c.push(
            ViolationCode::OutOfRange,
            "/replicator/convergence_eps",
            "must be non-negative",
        );
    }
    if let Some(t) = cfg.replicator.ess_threshold {
        c.unit("/replicator/ess_threshold", t);
    }

    c.0
}

/// Invariants of a task relative to the fleet it runs on: a known
/// initiator, `1 <= M < J` subtasks, known types and in-range demands.
pub fn validate_task(task: &Task, fleet: &Fleet) -> Vec<Violation> {
    let mut c = Checker(Vec::new());
    if fleet.index_of(task.initiator).is_err() {
        c.push(
            ViolationCode::UnknownReference,
            "/initiator",
            format!("unknown device {}", task.initiator.0),
        );
    }
    let m = task.subtasks.len();
    if m == 0 || m >= fleet.len() {
        c.push(
            ViolationCode::OutOfRange,
            "/subtasks",
            format!(
                "{m} subtasks; need at least 1 and fewer than the {} devices",
                fleet.len()
            ),
        );
    }
    for (k, b) in task.subtasks.iter().enumerate() {
        let at = format!("/subtasks/{k}");
        if fleet.task_type(b.task_type).is_err() {
            c.push(
                ViolationCode::UnknownReference,
                format!("{at}/task_type"),
                format!("unknown task type {}", b.task_type.0),
            );
        }
        c.positive(format!("{at}/size_bits"), b.size_bits);
        c.positive(format!("{at}/deadline_s"), b.deadline_s);
        c.unit(format!("{at}/min_trust"), b.min_trust);
        if b.min_rate_bps.is_nan() || b.min_rate_bps < 0.0 {
            c.push(
                ViolationCode::OutOfRange,
                format!("{at}/min_rate_bps"),
                "rate demand must be non-negative",
            );
        }
    }
    c.0
}

pub fn parse_scenario(json: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = serde_json::from_str(json)?;
    match validate_scenario(&cfg).into_iter().next() {
        Some(v) => Err(Error::Validation(v)),
        None => Ok(cfg),
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_ics_catalog;
    use crate::model::{DeviceId, TaskTypeId};

    #[test]
    fn catalog_is_valid() {
        assert_eq!(validate_scenario(&builtin_ics_catalog()), vec![]);
    }

    #[test]
    fn json_round_trip() {
        let cfg = builtin_ics_catalog();
        let back = parse_scenario(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn duplicate_device_rejected() {
        let mut cfg = builtin_ics_catalog();
        cfg.devices[3].id = DeviceId(1);
        let err = parse_scenario(&cfg.to_json().unwrap()).unwrap_err();
        match err {
            Error::Validation(v) => {
                assert_eq!(v.code, ViolationCode::DuplicateId);
                assert_eq!(v.path, "/devices/3/id");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn beta_not_simplex_rejected() {
        let mut cfg = builtin_ics_catalog();
        cfg.trust_weights.beta = [0.3, 0.3, 0.3];
        let err = parse_scenario(&cfg.to_json().unwrap()).unwrap_err();
        assert!(matches!(
            err,
            Error::Validation(Violation {
                code: ViolationCode::WeightsNotSimplex,
                ..
            })
        ));
    }

    #[test]
    fn reliability_out_of_range() {
        let mut cfg = builtin_ics_catalog();
        cfg.devices[0].reliability.insert(TaskTypeId(0), -0.1);
        let v = validate_scenario(&cfg);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::OutOfRange);
        assert_eq!(v[0].path, "/devices/0/reliability/0");
    }

    #[test]
    fn subtask_trust_out_of_range() {
        let cfg = builtin_ics_catalog();
        let fleet = cfg.fleet().unwrap();
        let mut task = crate::catalog::table_iii_task();
        assert_eq!(validate_task(&task, &fleet), vec![]);
        task.subtasks[1].min_trust = 1.2;
        let v = validate_task(&task, &fleet);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::OutOfRange);
        assert_eq!(v[0].path, "/subtasks/1/min_trust");
        assert!(task.validate(&fleet).is_err());
    }

    #[test]
    fn unknown_top_level_key_rejected() {
        let mut value: serde_json::Value =
            serde_json::from_str(&builtin_ics_catalog().to_json().unwrap()).unwrap();
        value["extra"] = serde_json::json!(1);
        assert!(matches!(
            parse_scenario(&value.to_string()),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn matrix_channel_parses() {
        let mut value: serde_json::Value =
            serde_json::from_str(&builtin_ics_catalog().to_json().unwrap()).unwrap();
        let n = 26;
        value["channel"] =
            serde_json::json!({"model": "matrix", "rates_bps": vec![vec![8e7; n]; n]});
        let cfg = parse_scenario(&value.to_string()).unwrap();
        assert!(matches!(cfg.channel, ChannelConfig::Matrix { .. }));

        value["channel"] = serde_json::json!({"model": "matrix", "rates_bps": [[1.0]]});
        assert!(matches!(
            parse_scenario(&value.to_string()),
            Err(Error::Validation(Violation {
                code: ViolationCode::ShapeMismatch,
                ..
            }))
        ));
    }

    #[test]
    fn pathloss_channel_rejects_unknown_keys() {
        let mut value: serde_json::Value =
            serde_json::from_str(&builtin_ics_catalog().to_json().unwrap()).unwrap();
        value["channel"] = serde_json::json!({"model": "pathloss", "bandwidth_hz": 2e7, "noise_w": 1e-13, "alpha": 4, "gain": 1});
        assert!(parse_scenario(&value.to_string()).is_err());
    }

    #[test]
    fn malformed_file_is_parse_error() {
        assert!(matches!(
            parse_scenario("{\"task_types\": ["),
            Err(Error::Parse(_))
        ));
    }
}
