use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{four_subtask_task, random_position, table_iii_task, IPAD, SCALING_MODELS};
use crate::error::{Error, Result};
use crate::hypergraph::{build_task_hypergraph, ResourceHypergraph};
use crate::matching::{
    baseline_nn, baseline_one_to_one, baseline_random, oracle_brute_force, solve_matching,
    Diagnostics, MatchResult, StrategySet,
};
use crate::model::{DeviceId, Fleet, Task, BITS_PER_MB};
use crate::physics::{ChannelConfig, ValueWeights};
use crate::scenario::{LinkLoss, ScenarioConfig};
use crate::trust::{
    bootstrap_trust, BootstrapConfig, OutcomeModel, TrustEngine, TrustLedger, TrustWeights,
};

use super::rng::{replica_seeds, stream, Stream};
use super::spec::{Experiment, Layout, ReliabilityMode, SolverKind, SweepAxis, SweepValue};

/// One solver run on one replica at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_axis: String,
    pub sweep_value: String,
    pub solver: SolverKind,
    pub seed: u64,
    /// `None` when the solver could not run (e.g. instance beyond the
    /// brute-force bound).
    pub avg_value: Option<f64>,
    pub assigned_count: usize,
    pub unassigned_count: usize,
    pub iterations: usize,
    pub runtime_ms: Option<f64>,
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<MatchResult>,
}

/// Initiator's trust in one collaborator after `task_index` tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustPoint {
    pub seed: u64,
    pub task_index: usize,
    pub collaborator: DeviceId,
    /// `task_specific` or `one_to_one`.
    pub model: String,
    /// Type name for task-specific trust; empty for one-to-one.
    pub task_type: String,
    pub trust: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub experiment: String,
    pub base_seed: u64,
    pub rows: Vec<ResultRow>,
    pub trajectory: Vec<TrustPoint>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the experiment's base seed.
    pub seed: Option<u64>,
    /// Overrides the experiment's solver list.
    pub solvers: Option<Vec<SolverKind>>,
    /// Record wall-clock solver time.
    pub timing: bool,
    /// Attach full match results to rows.
    pub detail: bool,
}

/// Everything a replica needs once the sweep point is applied.
pub struct Instance {
    pub scenario: ScenarioConfig,
    pub fleet: Fleet,
    pub task: Task,
    pub ledger: TrustLedger,
}

impl Instance {
    pub fn engine(&self, weights: TrustWeights) -> TrustEngine<'_> {
        TrustEngine::new(&self.fleet, &self.ledger, weights)
    }

    /// Admissible strategies under `weights`; may be empty.
    pub fn strategies(&self, weights: TrustWeights) -> Result<(ResourceHypergraph, StrategySet)> {
        let engine = self.engine(weights);
        let res = ResourceHypergraph::from_engine_for(&engine, self.task.initiator)?;
        let set = StrategySet::collect(
            &build_task_hypergraph(&self.task),
            &res,
            &self.fleet,
            &self.scenario.channel,
            &self.scenario.value_weights,
        )?;
        Ok((res, set))
    }
}

fn mb(x: f64) -> f64 {
    x * BITS_PER_MB
}

/// The iPad initiator followed by `n` collaborators cycling through the
/// scaling models. Device `k` is the same for every `n > k`.
pub fn nested_fleet<R: Rng>(n: usize, rng: &mut R) -> Vec<crate::model::DeviceSpec> {
    let mut devices = vec![IPAD.instantiate(DeviceId(1), random_position(rng))];
    for k in 0..n {
        let model = SCALING_MODELS[k % SCALING_MODELS.len()];
        devices.push(model.instantiate(DeviceId(k as u32 + 2), random_position(rng)));
    }
    devices
}

fn default_task(exp: &Experiment) -> Task {
    if let Some(task) = &exp.spec.task_batch {
        return task.clone();
    }
    match exp.spec.sweep.as_ref().map(|s| s.axis) {
        Some(SweepAxis::FleetSize) => four_subtask_task(),
        _ => table_iii_task(),
    }
}

fn scalar(v: &SweepValue) -> Result<f64> {
    match v {
        SweepValue::Scalar(x) => Ok(*x),
        SweepValue::Triple(_) => Err(Error::Experiment(format!("expected a number, got {v}"))),
    }
}

/// Applies the experiment and one sweep point to the base scenario and
/// bootstraps the trust ledger.
pub fn prepare_instance(
    exp: &Experiment,
    seed: u64,
    point: Option<&SweepValue>,
) -> Result<Instance> {
    let spec = &exp.spec;
    let axis = spec.sweep.as_ref().map(|s| s.axis);
    let mut scenario = exp.scenario.clone();
    if let Some(w) = spec.trust_weights {
        scenario.trust_weights = w;
    }
    if let Some(w) = spec.value_weights {
        scenario.value_weights = w;
    }

    let mut layout = stream(seed, Stream::Layout);
    if let (Some(SweepAxis::FleetSize), Some(v)) = (axis, point) {
        if matches!(scenario.channel, ChannelConfig::Matrix { .. })
            || matches!(scenario.link_loss, LinkLoss::Matrix(_))
        {
            return Err(Error::Experiment(
                "fleet-size sweeps need a path-loss channel and uniform link loss".into(),
            ));
        }
        scenario.devices = nested_fleet(scalar(v)? as usize, &mut layout);
    } else if spec.layout == Layout::Random {
        for d in &mut scenario.devices {
            d.position = random_position(&mut layout);
        }
    }

    if let ReliabilityMode::Uniform { low, high } = spec.reliability {
        let mut rng = stream(seed, Stream::Reliability);
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
    for o in &spec.reliability_overrides {
        let s = scenario
            .task_types
            .iter()
            .find(|t| t.name == o.task_type)
            .map(|t| t.id)
            .ok_or_else(|| Error::Experiment(format!("unknown task type {:?}", o.task_type)))?;
        let d = scenario
            .devices
            .iter_mut()
            .find(|d| d.id == o.device)
            .ok_or(Error::UnknownDevice(o.device))?;
        d.reliability.insert(s, o.value);
    }

    let mut task = default_task(exp);
    match (axis, point) {
        (Some(SweepAxis::MinTrust), Some(v)) => {
            let t = scalar(v)?;
            task.subtasks.iter_mut().for_each(|b| b.min_trust = t);
        }
        (Some(SweepAxis::MinRate), Some(v)) => {
            let r = mb(scalar(v)?);
            task.subtasks.iter_mut().for_each(|b| b.min_rate_bps = r);
        }
        (Some(SweepAxis::ValueWeights), Some(v)) => {
            scenario.value_weights = ValueWeights::new(scalar(v)?)
        }
        (Some(SweepAxis::TrustWeights), Some(SweepValue::Triple(beta))) => {
            scenario.trust_weights = scenario.trust_weights.with_beta(*beta);
        }
        _ => {}
    }

    let fleet = scenario.fleet()?;
    task.validate(&fleet)?;
    let mut ledger = TrustLedger::new();
    let model = OutcomeModel {
        fleet: &fleet,
        link_loss: &scenario.link_loss,
        loss_threshold: scenario.loss_threshold,
    };
    bootstrap_trust(
        &model,
        &mut ledger,
        spec.bootstrap_tasks,
        BootstrapConfig::default(),
        &mut stream(seed, Stream::Bootstrap),
    );
    Ok(Instance {
        scenario,
        fleet,
        task,
        ledger,
    })
}

pub fn one_to_one_weights(exp: &Experiment, instance: &Instance) -> TrustWeights {
    match exp.spec.one_to_one_weights {
        Some(beta) => instance.scenario.trust_weights.with_beta(beta),
        None => instance.scenario.trust_weights.one_to_one(),
    }
}

fn empty_result(solver: SolverKind, set: &StrategySet) -> MatchResult {
    let choices = vec![None; set.n_subtasks()];
    MatchResult::from_choices(solver.name(), set, &choices, Diagnostics::default())
}

/// Runs `solvers` on one prepared instance. A solver facing no admissible
/// strategy yields an all-unassigned result (value 0) with the reason in
/// `error`; a solver that cannot run at all yields `avg_value = None`.
pub fn run_solvers(
    exp: &Experiment,
    instance: &Instance,
    set: &StrategySet,
    seed: u64,
    solvers: &[SolverKind],
    opts: &RunOptions,
) -> Vec<(SolverKind, Result<MatchResult>, Option<f64>)> {
    let cfg = &instance.scenario.replicator;
    let mut out = Vec::with_capacity(solvers.len());
    for &solver in solvers {
        let start = Instant::now();
        let result = match solver {
            SolverKind::Ttr => solve_matching(set, cfg),
            SolverKind::OneToOne => instance
                .strategies(one_to_one_weights(exp, instance))
                .and_then(|(_, set)| baseline_one_to_one(&set, cfg)),
            SolverKind::Nn => Ok(baseline_nn(set)),
            SolverKind::Random => Ok(baseline_random(set, &mut stream(seed, Stream::Baseline))),
            SolverKind::Oracle => oracle_brute_force(set, exp.spec.oracle_bound),
        };
        let elapsed = opts.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
        out.push((solver, result, elapsed));
    }
    out
}

fn replica_rows(
    exp: &Experiment,
    seed: u64,
    point: Option<&SweepValue>,
    solvers: &[SolverKind],
    opts: &RunOptions,
) -> Result<Vec<ResultRow>> {
    let instance = prepare_instance(exp, seed, point)?;
    let (axis, value) = match (&exp.spec.sweep, point) {
        (Some(s), Some(v)) => (s.axis.name().to_string(), v.to_string()),
        _ => ("none".to_string(), String::new()),
    };
    let (_, set) = instance.strategies(instance.scenario.trust_weights)?;
    let runs = run_solvers(exp, &instance, &set, seed, solvers, opts);
    Ok(runs
        .into_iter()
        .map(|(solver, result, runtime_ms)| {
            let (result, error) = match result {
                Ok(r) => (Some(r), None),
                Err(Error::NoStrategies) => (
                    Some(empty_result(solver, &set)),
                    Some(Error::NoStrategies.to_string()),
                ),
                Err(e) => (None, Some(e.to_string())),
            };
            ResultRow {
                sweep_axis: axis.clone(),
                sweep_value: value.clone(),
                solver,
                seed,
                avg_value: result.as_ref().map(|r| r.average_value),
                assigned_count: result.as_ref().map_or(0, |r| r.assigned_count()),
                unassigned_count: result
                    .as_ref()
                    .map_or(instance.task.subtasks.len(), |r| r.unassigned_count()),
                iterations: result.as_ref().map_or(0, |r| r.diagnostics.iterations),
                runtime_ms,
                error,
                detail: result.filter(|_| opts.detail),
            }
        })
        .collect())
}

/// Trust of the initiator in fixed collaborators while they repeatedly
/// take the batch's subtasks, one random permutation per task.
pub fn run_trust_evolution(exp: &Experiment, seed: u64) -> Result<Vec<TrustPoint>> {
    let Some(evo) = &exp.spec.trust_evolution else {
        return Ok(Vec::new());
    };
    let mut instance = prepare_instance(exp, seed, None)?;
    let fleet = &instance.fleet;
    let i = fleet.index_of(evo.initiator)?;
    let collaborators: Vec<usize> = evo
        .collaborators
        .iter()
        .map(|&c| fleet.index_of(c))
        .collect::<Result<_>>()?;
    let mut types = Vec::new();
    for b in &instance.task.subtasks {
        if !types.contains(&b.task_type) {
            types.push(b.task_type);
        }
    }
    let weights = instance.scenario.trust_weights;
    let o2o = one_to_one_weights(exp, &instance);
    let mut rng = stream(seed, Stream::Evolution);
    let mut points = Vec::new();

    let snapshot = |points: &mut Vec<TrustPoint>, ledger: &TrustLedger, t: usize| -> Result<()> {
        let ts = TrustEngine::new(fleet, ledger, weights);
        let oo = TrustEngine::new(fleet, ledger, o2o);
        for &j in &collaborators {
            let device = &fleet.devices()[j];
            for &s in types.iter().filter(|&&s| device.supports(s)) {
                points.push(TrustPoint {
                    seed,
                    task_index: t,
                    collaborator: device.id,
                    model: "task_specific".into(),
                    task_type: fleet.task_type(s)?.name.clone(),
                    trust: ts.task_specific(i, j, s)?,
                });
            }
            if let Some(&s) = types.iter().find(|&&s| device.supports(s)) {
                points.push(TrustPoint {
                    seed,
                    task_index: t,
                    collaborator: device.id,
                    model: "one_to_one".into(),
                    task_type: String::new(),
                    trust: oo.task_specific(i, j, s)?,
                });
            }
        }
        Ok(())
    };

    let mut ledger = std::mem::take(&mut instance.ledger);
    snapshot(&mut points, &ledger, 0)?;
    let model = OutcomeModel {
        fleet,
        link_loss: &instance.scenario.link_loss,
        loss_threshold: instance.scenario.loss_threshold,
    };
    let mut order = collaborators.clone();
    for t in 1..=evo.tasks {
        order.shuffle(&mut rng);
        for (b, &j) in instance.task.subtasks.iter().zip(&order) {
            if fleet.devices()[j].supports(b.task_type) {
                model.interact(&mut ledger, &mut rng, i, j, b.task_type);
            }
        }
        snapshot(&mut points, &ledger, t)?;
    }
    Ok(points)
}

fn solver_list(exp: &Experiment, opts: &RunOptions) -> Vec<SolverKind> {
    opts.solvers
        .clone()
        .unwrap_or_else(|| exp.spec.solvers.clone())
}

fn run(
    exp: &Experiment,
    opts: &RunOptions,
    points: Vec<Option<SweepValue>>,
) -> Result<RunArtifacts> {
    let base_seed = opts.seed.unwrap_or_else(|| exp.base_seed());
    let seeds = replica_seeds(base_seed, exp.spec.repeats);
    let solvers = solver_list(exp, opts);
    let jobs: Vec<(Option<SweepValue>, u64)> = points
        .iter()
        .flat_map(|p| seeds.iter().map(move |&s| (*p, s)))
        .collect();
    let rows: Vec<Vec<ResultRow>> = jobs
        .par_iter()
        .map(|(p, s)| replica_rows(exp, *s, p.as_ref(), &solvers, opts))
        .collect::<Result<_>>()?;
    let trajectory: Vec<Vec<TrustPoint>> = seeds
        .par_iter()
        .map(|&s| run_trust_evolution(exp, s))
        .collect::<Result<_>>()?;
    Ok(RunArtifacts {
        experiment: exp.spec.name.clone(),
        base_seed,
        rows: rows.into_iter().flatten().collect(),
        trajectory: trajectory.into_iter().flatten().collect(),
    })
}

/// All replicas at the experiment's base configuration, ignoring any sweep.
pub fn run_scenario(exp: &Experiment, opts: &RunOptions) -> Result<RunArtifacts> {
    let mut plain = exp.clone();
    plain.spec.sweep = None;
    run(&plain, opts, vec![None])
}

/// All replicas at every sweep point; rows are ordered by point, then
/// replica, then solver. Without a sweep this equals [`run_scenario`].
pub fn run_sweep(exp: &Experiment, opts: &RunOptions) -> Result<RunArtifacts> {
    match &exp.spec.sweep {
        Some(sweep) => run(exp, opts, sweep.values.iter().copied().map(Some).collect()),
        None => run_scenario(exp, opts),
    }
}
