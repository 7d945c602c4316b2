use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::builtin_ics_catalog;
use crate::error::{Error, Result};
use crate::matching::OracleBound;
use crate::model::{DeviceId, Task};
use crate::physics::ValueWeights;
use crate::scenario::{load_scenario, ScenarioConfig};
use crate::trust::TrustWeights;

pub const BUILTIN_ICS: &str = "builtin:ics";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Ttr,
    OneToOne,
    Nn,
    Random,
    Oracle,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        Self::Ttr,
        Self::OneToOne,
        Self::Nn,
        Self::Random,
        Self::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ttr => "ttr",
            Self::OneToOne => "one_to_one",
            Self::Nn => "nn",
            Self::Random => "random",
            Self::Oracle => "oracle",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Trust demand of every subtask.
    MinTrust,
    /// Rate demand of every subtask, MB/s.
    MinRate,
    /// Number of collaborators besides the initiator.
    FleetSize,
    /// Time weight `ξ1` of the value of completion.
    ValueWeights,
    /// Trust weights `β`.
    TrustWeights,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::MinTrust => "min_trust",
            Self::MinRate => "min_rate",
            Self::FleetSize => "fleet_size",
            Self::ValueWeights => "value_weights",
            Self::TrustWeights => "trust_weights",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Scalar(f64),
    Triple([f64; 3]),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Scalar(x) => write!(f, "{x}"),
            Self::Triple([a, b, c]) => write!(f, "{a};{b};{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<SweepValue>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Positions as given by the scenario.
    #[default]
    Fixed,
    /// Positions redrawn per replica, uniform over the deployment area.
    Random,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReliabilityMode {
    /// Reliabilities as given by the scenario.
    #[default]
    Scenario,
    /// Per (device, type), drawn uniformly from `[low, high]` per replica.
    Uniform { low: f64, high: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReliabilityOverride {
    pub device: DeviceId,
    /// Task type name, e.g. `"FR"`.
    pub task_type: String,
    pub value: f64,
}

/// Fixed collaborators repeatedly receiving the reference batch, with the
/// initiator's trust in them logged after every task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrustEvolution {
    #[serde(default = "default_initiator")]
    pub initiator: DeviceId,
    #[serde(default = "default_collaborators")]
    pub collaborators: Vec<DeviceId>,
    #[serde(default = "default_evolution_tasks")]
    pub tasks: usize,
}

impl Default for TrustEvolution {
    fn default() -> Self {
        Self {
            initiator: default_initiator(),
            collaborators: default_collaborators(),
            tasks: default_evolution_tasks(),
        }
    }
}

fn default_initiator() -> DeviceId {
    DeviceId(1)
}

fn default_collaborators() -> Vec<DeviceId> {
    vec![DeviceId(2), DeviceId(3), DeviceId(16)]
}

fn default_evolution_tasks() -> usize {
    30
}

fn default_scenario() -> String {
    BUILTIN_ICS.to_string()
}

fn default_bootstrap() -> usize {
    500
}

fn default_repeats() -> usize {
    1
}

fn default_solvers() -> Vec<SolverKind> {
    vec![
        SolverKind::Ttr,
        SolverKind::OneToOne,
        SolverKind::Nn,
        SolverKind::Random,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: String,
    /// `"builtin:ics"` or a scenario file path, relative to the spec file.
    #[serde(default = "default_scenario")]
    pub scenario: String,
    /// Base seed; defaults to the scenario's `rng_seed`.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_tasks: usize,
    /// Defaults to the three-subtask reference batch, or the four-subtask
    /// batch when sweeping fleet size.
    #[serde(default)]
    pub task_batch: Option<Task>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<SolverKind>,
    #[serde(default)]
    pub trust_weights: Option<TrustWeights>,
    /// `β` for the one-to-one baseline; defaults to `(β1, 1 - β1, 0)`.
    #[serde(default)]
    pub one_to_one_weights: Option<[f64; 3]>,
    #[serde(default)]
    pub value_weights: Option<ValueWeights>,
    #[serde(default)]
    pub layout: Layout,
    #[serde(default)]
    pub reliability: ReliabilityMode,
    #[serde(default)]
    pub reliability_overrides: Vec<ReliabilityOverride>,
    #[serde(default)]
    pub trust_evolution: Option<TrustEvolution>,
    #[serde(default)]
    pub oracle_bound: OracleBound,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

fn simplex(v: &[f64; 3]) -> bool {
    v.iter().all(|&x| (0.0..=1.0).contains(&x)) && (v.iter().sum::<f64>() - 1.0).abs() <= 1e-9
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Experiment(msg));
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.solvers.is_empty() {
            return bad("no solvers selected".into());
        }
        if let Some(beta) = &self.one_to_one_weights {
            if !simplex(beta) {
                return bad("one_to_one_weights must be nonnegative and sum to 1".into());
            }
        }
        if let ReliabilityMode::Uniform { low, high } = self.reliability {
            if !(0.0 <= low && low <= high && high <= 1.0) {
                return bad(format!(
                    "reliability range [{low}, {high}] must lie in [0, 1]"
                ));
            }
        }
        if let Some(o) = self
            .reliability_overrides
            .iter()
            .find(|o| !(0.0..=1.0).contains(&o.value))
        {
            return bad(format!(
                "reliability override {} for {} outside [0, 1]",
                o.value, o.device
            ));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return bad("sweep has no values".into());
            }
            for v in &sweep.values {
                let ok = match (sweep.axis, v) {
                    (SweepAxis::MinTrust, SweepValue::Scalar(x)) => (0.0..=1.0).contains(x),
                    (SweepAxis::MinRate, SweepValue::Scalar(x)) => *x >= 0.0 && x.is_finite(),
                    (SweepAxis::FleetSize, SweepValue::Scalar(x)) => *x >= 1.0 && x.fract() == 0.0,
                    (SweepAxis::ValueWeights, SweepValue::Scalar(x)) => (0.0..=1.0).contains(x),
                    (SweepAxis::TrustWeights, SweepValue::Triple(b)) => simplex(b),
                    _ => false,
                };
                if !ok {
                    return bad(format!(
                        "sweep value {v} is not valid for axis {}",
                        sweep.axis.name()
                    ));
                }
            }
        }
        Ok(())
    }
}

pub fn parse_experiment(json: &str) -> Result<ExperimentSpec> {
    let spec: ExperimentSpec = serde_json::from_str(json)?;
    spec.validate()?;
    Ok(spec)
}

/// Resolves a scenario reference against `base_dir`.
pub fn resolve_scenario(reference: &str, base_dir: &Path) -> Result<ScenarioConfig> {
    if reference == BUILTIN_ICS {
        return Ok(builtin_ics_catalog());
    }
    let path = PathBuf::from(reference);
    let path = if path.is_absolute() {
        path
    } else {
        base_dir.join(path)
    };
    load_scenario(path)
}

/// A validated spec together with its resolved scenario.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub spec: ExperimentSpec,
    pub scenario: ScenarioConfig,
}

impl Experiment {
    pub fn new(spec: ExperimentSpec, scenario: ScenarioConfig) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec, scenario })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec = parse_experiment(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let scenario = resolve_scenario(&spec.scenario, dir)?;
        Self::new(spec, scenario)
    }

    pub fn base_seed(&self) -> u64 {
        self.spec.seed.unwrap_or(self.scenario.rng_seed)
    }
}
