use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{four_subtask_task, random_position};
use crate::error::{Error, Result};
use crate::hypergraph::{build_task_hypergraph, ResourceHypergraph};
use crate::matching::{
    baseline_nn, baseline_random, check_feasibility, oracle_brute_force, solve_matching,
    Diagnostics, MatchResult, OracleBound, StrategySet,
};
use crate::model::Task;
use crate::scenario::ScenarioConfig;
use crate::trust::{bootstrap_trust, BootstrapConfig, OutcomeModel, TrustEngine, TrustLedger};

use super::rng::{replica_seeds, stream, Stream};
use super::spec::ReliabilityMode;

/// Random small instances solved by every heuristic and by exhaustive search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCheckConfig {
    pub instances: usize,
    pub max_subtasks: usize,
    /// Fleet size including the initiator.
    pub max_devices: usize,
    pub min_trust: f64,
    pub bootstrap_tasks: usize,
    pub reliability: ReliabilityMode,
    /// Relative gap counted as "near optimal".
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        Self {
            instances: 200,
            max_subtasks: 3,
            max_devices: 8,
            min_trust: 0.2,
            bootstrap_tasks: 200,
            reliability: ReliabilityMode::Uniform {
                low: 0.05,
                high: 1.0,
            },
            tolerance: 0.05,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub seed: u64,
    pub subtasks: usize,
    pub devices: usize,
    pub strategies: usize,
    pub oracle: f64,
    pub ttr: f64,
    pub nn: f64,
    pub random: f64,
    /// `(oracle - ttr) / oracle`, 0 when the oracle value is 0.
    pub gap: f64,
    /// Broken invariants: infeasible assignments or heuristics beating the
    /// oracle.
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheckReport {
    pub config: OracleCheckConfig,
    pub instances: Vec<InstanceReport>,
    pub within_tolerance: usize,
    pub mean_gap: f64,
    pub max_gap: f64,
    pub violations: usize,
}

impl OracleCheckReport {
    pub fn fraction_within(&self) -> f64 {
        if self.instances.is_empty() {
            return 1.0;
        }
        self.within_tolerance as f64 / self.instances.len() as f64
    }

    /// Feasibility and the oracle upper bound held everywhere.
    pub fn invariants_hold(&self) -> bool {
        self.violations == 0
    }
}

fn solve_or_empty(set: &StrategySet, result: Result<MatchResult>) -> Result<MatchResult> {
    match result {
        Err(Error::NoStrategies) => Ok(MatchResult::from_choices(
            "ttr",
            set,
            &vec![None; set.n_subtasks()],
            Diagnostics::default(),
        )),
        other => other,
    }
}

fn check_instance(
    base: &ScenarioConfig,
    cfg: &OracleCheckConfig,
    seed: u64,
) -> Result<InstanceReport> {
    let mut rng = stream(seed, Stream::Instance);
    let n_devices = rng
        .random_range(2..=cfg.max_devices.max(2))
        .min(base.devices.len());
    let n_subtasks = rng.random_range(1..=cfg.max_subtasks.max(1));

    let mut scenario = base.clone();
    let mut picked: Vec<usize> = sample(&mut rng, base.devices.len() - 1, n_devices - 1)
        .into_iter()
        .map(|k| k + 1)
        .collect();
    picked.sort_unstable();
    scenario.devices = std::iter::once(0)
        .chain(picked)
        .map(|k| base.devices[k].clone())
        .collect();
    for d in &mut scenario.devices {
        d.position = random_position(&mut rng);
    }
    if let ReliabilityMode::Uniform { low, high } = cfg.reliability {
        let types: Vec<_> = scenario.task_types.iter().map(|t| t.id).collect();
        for d in &mut scenario.devices {
            for &s in &types {
                let u: f64 = rng.random();
                if d.supports(s) {
                    d.reliability.insert(s, low + (high - low) * u);
                }
            }
        }
    }
    let templates = four_subtask_task().subtasks;
    let task = Task {
        initiator: scenario.devices[0].id,
        subtasks: (0..n_subtasks)
            .map(|_| {
                let mut b = templates[rng.random_range(0..templates.len())].clone();
                b.min_trust = cfg.min_trust;
                b
            })
            .collect(),
    };

    let fleet = scenario.fleet()?;
    let mut ledger = TrustLedger::new();
    let model = OutcomeModel {
        fleet: &fleet,
        link_loss: &scenario.link_loss,
        loss_threshold: scenario.loss_threshold,
    };
    bootstrap_trust(
        &model,
        &mut ledger,
        cfg.bootstrap_tasks,
        BootstrapConfig::default(),
        &mut stream(seed, Stream::Bootstrap),
    );
    let engine = TrustEngine::new(&fleet, &ledger, scenario.trust_weights);
    let res = ResourceHypergraph::from_engine_for(&engine, task.initiator)?;
    let set = StrategySet::collect(
        &build_task_hypergraph(&task),
        &res,
        &fleet,
        &scenario.channel,
        &scenario.value_weights,
    )?;

    let bound = OracleBound {
        max_subtasks: cfg.max_subtasks.max(1),
        max_devices: cfg.max_devices.max(2),
    };
    let oracle = oracle_brute_force(&set, bound)?;
    let ttr = solve_or_empty(&set, solve_matching(&set, &scenario.replicator))?;
    let nn = baseline_nn(&set);
    let random = baseline_random(&set, &mut stream(seed, Stream::Baseline));

    let mut violations = Vec::new();
    for r in [&oracle, &ttr, &nn, &random] {
        for v in check_feasibility(&r.assignment(), &task, &fleet, &res, &scenario.channel) {
            violations.push(format!("{}: {v:?}", r.solver));
        }
        if r.average_value > oracle.average_value + 1e-12 {
            violations.push(format!(
                "{} exceeds oracle: {} > {}",
                r.solver, r.average_value, oracle.average_value
            ));
        }
    }
    let gap = if oracle.average_value > 0.0 {
        (oracle.average_value - ttr.average_value) / oracle.average_value
    } else {
        0.0
    };
    Ok(InstanceReport {
        seed,
        subtasks: n_subtasks,
        devices: n_devices,
        strategies: set.len(),
        oracle: oracle.average_value,
        ttr: ttr.average_value,
        nn: nn.average_value,
        random: random.average_value,
        gap,
        violations,
    })
}

/// Solves `cfg.instances` random small instances drawn from `base` and
/// compares every heuristic with the exhaustive optimum.
pub fn oracle_check(base: &ScenarioConfig, cfg: &OracleCheckConfig) -> Result<OracleCheckReport> {
    if base.devices.len() < 2 {
        return Err(Error::Experiment(
            "oracle check needs at least two devices".into(),
        ));
    }
    let instances: Vec<InstanceReport> = replica_seeds(cfg.seed, cfg.instances)
        .par_iter()
        .map(|&s| check_instance(base, cfg, s))
        .collect::<Result<_>>()?;
    let within_tolerance = instances
        .iter()
        .filter(|r| r.gap <= cfg.tolerance + 1e-12)
        .count();
    let mean_gap = if instances.is_empty() {
        0.0
    } else {
        instances.iter().map(|r| r.gap).sum::<f64>() / instances.len() as f64
    };
    let max_gap = instances.iter().map(|r| r.gap).fold(0.0, f64::max);
    let violations = instances.iter().map(|r| r.violations.len()).sum();
    Ok(OracleCheckReport {
        config: cfg.clone(),
        instances,
        within_tolerance,
        mean_gap,
        max_gap,
        violations,
    })
}
