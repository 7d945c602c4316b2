//! End-to-end acceptance criteria. Runs without the libtest harness so the
//! verdict lines always reach the terminal; exits nonzero on any failure.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use ttr_core::catalog::builtin_ics_catalog;
use ttr_core::hypergraph::{build_task_hypergraph, ResourceHypergraph};
use ttr_core::matching::{barycenter, replicator_step, Game, StrategySet};
use ttr_core::model::{DeviceId, Fleet, Subtask, Task, TaskTypeId};
use ttr_core::physics::value_time;
use ttr_core::sim::{
    non_decreasing, non_increasing, oracle_check, prepare_instance, replica_seeds, run_sweep,
    run_trust_evolution, series, summarize, Experiment, OracleCheckConfig, RunOptions, SolverKind,
    SummaryRow, TrustPoint,
};
use ttr_core::trust::{
    bootstrap_trust, build_group_trust_hypergraph, decompose_to_directed, task_specific_trust,
    BootstrapConfig, InteractionRecord, OutcomeModel, TrustEngine, TrustLedger, TrustWeights,
};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn experiment(file: &str) -> Experiment {
    Experiment::load(scenarios().join(file)).unwrap_or_else(|e| panic!("loading {file}: {e}"))
}

fn means(summary: &[SummaryRow], solver: SolverKind) -> Vec<f64> {
    series(summary, solver)
        .into_iter()
        .map(|(_, m)| m)
        .collect()
}

fn fmt(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Near-optimality and invariants on random small instances.
fn criterion_1() -> Verdict {
    let start = Instant::now();
    let report =
        oracle_check(&builtin_ics_catalog(), &OracleCheckConfig::default()).expect("oracle check");
    let secs = start.elapsed().as_secs_f64();
    let frac = report.fraction_within();
    Verdict::new(
        frac >= 0.8 && report.invariants_hold() && secs < 60.0,
        format!(
            "{}/{} within 5% ({frac:.3}), max gap {:.4}, {} violations, {secs:.1} s",
            report.within_tolerance,
            report.instances.len(),
            report.max_gap,
            report.violations
        ),
    )
}

fn random_game(rng: &mut Xoshiro256PlusPlus) -> Game {
    let tasks = rng.random_range(1..=6);
    let devices = rng.random_range(1..=10);
    let mut cells: Vec<(usize, usize)> = (0..tasks)
        .flat_map(|t| (0..devices).map(move |d| (t, d)))
        .collect();
    let keep = rng.random_range(1..=cells.len().min(40));
    for k in 0..keep {
        let pick = rng.random_range(k..cells.len());
        cells.swap(k, pick);
    }
    cells.truncate(keep);
    let score = cells.iter().map(|_| rng.random_range(0.01..1.0)).collect();
    let game = Game::new(
        cells.iter().map(|c| c.0).collect(),
        cells.iter().map(|c| c.1).collect(),
        score,
    )
    .expect("distinct cells");
    let order = game.effective_order();
    game.with_order(order)
}

/// Replicator dynamics stay on the simplex and never lower the payoff.
fn criterion_2() -> Verdict {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
    let (mut worst_mass, mut worst_drop, mut max_n) = (0.0f64, 0.0f64, 0);
    for _ in 0..50 {
        let game = random_game(&mut rng);
        max_n = max_n.max(game.len());
        let mut q = barycenter(game.len());
        let mut prev = game.population_payoff(&q);
        for _ in 0..1000 {
            let step = replicator_step(&game, &q);
            q = step.q;
            worst_mass = worst_mass.max((q.iter().sum::<f64>() - 1.0).abs());
            let u = game.population_payoff(&q);
            worst_drop = worst_drop.max(prev - u);
            prev = u;
        }
    }
    Verdict::new(
        worst_mass <= 1e-12 && worst_drop <= 1e-10,
        format!("50 games, N <= {max_n}, max |sum q - 1| = {worst_mass:.1e}, max payoff drop = {worst_drop:.1e}"),
    )
}

fn type_id(fleet: &Fleet, name: &str) -> TaskTypeId {
    fleet
        .type_by_name(name)
        .unwrap_or_else(|| panic!("unknown type {name}"))
}

fn admitted(set: &StrategySet, subtask: usize, who: DeviceId) -> bool {
    set.strategies
        .iter()
        .any(|s| s.subtask == subtask && s.collaborator == who)
}

/// A constructed history where per-type and type-agnostic trust admit the
/// same collaborator for opposite subtasks.
fn selection_flip() -> Result<String, String> {
    let scenario = builtin_ics_catalog();
    let fleet = scenario.fleet().map_err(|e| e.to_string())?;
    let (a, b) = (DeviceId(1), DeviceId(3));
    let (good, bad) = (type_id(&fleet, "TWC"), type_id(&fleet, "3DM"));
    let mut ledger = TrustLedger::new();
    for (s, ok) in [(good, 1u8), (bad, 0u8)] {
        for _ in 0..10 {
            ledger.append(InteractionRecord {
                initiator: a,
                collaborator: b,
                task_type: s,
                b_tra: 1,
                b_exe: ok,
                b_ret: ok,
            });
        }
    }
    let ts = TrustWeights::default().with_beta([0.1, 0.1, 0.8]);
    let oo = ts.one_to_one();
    let (i, j) = (fleet.index_of(a).unwrap(), fleet.index_of(b).unwrap());
    let t = |w: TrustWeights, s| {
        TrustEngine::new(&fleet, &ledger, w)
            .task_specific(i, j, s)
            .unwrap()
    };
    let (t_good, t_bad, t_one) = (t(ts, good), t(ts, bad), t(oo, good));
    if !(t_good > t_one && t_one > t_bad) {
        return Err(format!(
            "no flip: T(TWC)={t_good:.3} T(3DM)={t_bad:.3} one-to-one={t_one:.3}"
        ));
    }
    let subtask = |s, min_trust| Subtask {
        task_type: s,
        size_bits: 8e6,
        deadline_s: 0.6,
        min_trust,
        min_rate_bps: 0.0,
    };
    let task = Task {
        initiator: a,
        subtasks: vec![
            subtask(good, (t_good + t_one) / 2.0),
            subtask(bad, (t_one + t_bad) / 2.0),
        ],
    };
    let set = |w: TrustWeights| {
        let engine = TrustEngine::new(&fleet, &ledger, w);
        let res = ResourceHypergraph::from_engine_for(&engine, a).unwrap();
        StrategySet::collect(
            &build_task_hypergraph(&task),
            &res,
            &fleet,
            &scenario.channel,
            &scenario.value_weights,
        )
        .unwrap()
    };
    let (with_ts, with_oo) = (set(ts), set(oo));
    let flip = admitted(&with_ts, 0, b)
        && !admitted(&with_oo, 0, b)
        && !admitted(&with_ts, 1, b)
        && admitted(&with_oo, 1, b);
    if flip {
        Ok(format!(
            "flip on a3: T(TWC)={t_good:.3} > one-to-one {t_one:.3} > T(3DM)={t_bad:.3}"
        ))
    } else {
        Err("strategy sets do not flip".into())
    }
}

/// Final per-type trust of each collaborator, averaged over `runs`.
fn final_trust(
    runs: &[Vec<TrustPoint>],
    last: usize,
    c: DeviceId,
) -> (Vec<(String, f64)>, Vec<usize>) {
    let mut typed: Vec<(String, f64)> = Vec::new();
    let mut one_to_one = Vec::new();
    for points in runs {
        let at_end = points
            .iter()
            .filter(|p| p.task_index == last && p.collaborator == c);
        for p in at_end.clone().filter(|p| p.model == "task_specific") {
            match typed.iter_mut().find(|(s, _)| *s == p.task_type) {
                Some((_, t)) => *t += p.trust / runs.len() as f64,
                None => typed.push((p.task_type.clone(), p.trust / runs.len() as f64)),
            }
        }
        one_to_one.push(at_end.filter(|p| p.model == "one_to_one").count());
    }
    (typed, one_to_one)
}

/// Pairs of types whose reliabilities differ by at least 0.2, and those
/// whose trusts are closer than 0.08.
fn separation(exp: &Experiment, runs: &[Vec<TrustPoint>], last: usize) -> (usize, Vec<String>) {
    let evo = exp.spec.trust_evolution.as_ref().expect("evolution block");
    let mut pairs = 0;
    let mut problems = Vec::new();
    for &c in &evo.collaborators {
        let rel = |name: &str| {
            exp.spec
                .reliability_overrides
                .iter()
                .find(|o| o.device == c && o.task_type == name)
                .map(|o| o.value)
        };
        let (typed, one_to_one) = final_trust(runs, last, c);
        for (k, (s1, t1)) in typed.iter().enumerate() {
            for (s2, t2) in &typed[k + 1..] {
                let (Some(r1), Some(r2)) = (rel(s1), rel(s2)) else {
                    continue;
                };
                if (r1 - r2).abs() + 1e-9 < 0.2 {
                    continue;
                }
                pairs += 1;
                if (t1 - t2).abs() < 0.08 {
                    problems.push(format!("a{} {s1}/{s2}: {t1:.3} vs {t2:.3}", c.0));
                }
            }
        }
        if one_to_one.iter().any(|&n| n != 1) {
            problems.push(format!(
                "a{}: one-to-one values per run {one_to_one:?}",
                c.0
            ));
        }
    }
    (pairs, problems)
}

/// Trust separates task types in proportion to per-type reliability.
fn criterion_3() -> Verdict {
    const REPLICAS: usize = 20;
    let exp = experiment("trust_evolution.json");
    let last = exp
        .spec
        .trust_evolution
        .as_ref()
        .expect("evolution block")
        .tasks;
    let seeds = replica_seeds(exp.base_seed(), REPLICAS);
    let runs: Vec<Vec<TrustPoint>> = seeds
        .iter()
        .map(|&s| run_trust_evolution(&exp, s).expect("evolution run"))
        .collect();

    // The experiment's own run, then the mean over replicas.
    let (pairs, mut problems) = separation(&exp, &runs[..1], last);
    let (_, mean_problems) = separation(&exp, &runs, last);
    problems.extend(mean_problems.into_iter().map(|p| format!("mean {p}")));
    let single_ok = runs
        .iter()
        .filter(|r| {
            separation(&exp, std::slice::from_ref(*r), last)
                .1
                .is_empty()
        })
        .count();
    let seed = seeds[0];

    // The type-agnostic model must give one value per pair whatever the type.
    let instance = prepare_instance(&exp, seed, None).expect("instance");
    let oo = instance.engine(ttr_core::sim::one_to_one_weights(&exp, &instance));
    let devices = instance.fleet.devices();
    for i in 0..devices.len() {
        for j in (0..devices.len()).filter(|&j| oo.direct_weight(i, j).is_some()) {
            let vals: Vec<f64> = devices[i]
                .supported_types
                .intersection(&devices[j].supported_types)
                .map(|&s| oo.task_specific(i, j, s).unwrap())
                .collect();
            if vals.iter().any(|v| (v - vals[0]).abs() > 1e-12) {
                problems.push(format!(
                    "one-to-one varies by type for {} -> {}",
                    devices[i].id, devices[j].id
                ));
            }
        }
    }

    let flip = selection_flip();
    if let Err(e) = &flip {
        problems.push(e.clone());
    }
    let pass = problems.is_empty() && pairs > 0;
    let detail = if pass {
        format!(
            "{pairs} type pairs separated by >= 0.08 after {last} tasks in the experiment run and the \
             {REPLICAS}-replica mean ({single_ok}/{REPLICAS} single replicas separate every pair); {}",
            flip.unwrap()
        )
    } else {
        problems.join("; ")
    };
    Verdict::new(pass, detail)
}

const BASELINES: [SolverKind; 3] = [SolverKind::OneToOne, SolverKind::Nn, SolverKind::Random];

/// Mean value falls as a demand tightens, and TTR beats NN and Random at
/// every point.
fn demand_sweep(file: &str, require_drop: bool) -> Verdict {
    let exp = experiment(file);
    let artifacts = run_sweep(&exp, &RunOptions::default()).expect("sweep");
    let summary = summarize(&artifacts.rows);
    let mut problems = Vec::new();
    for solver in std::iter::once(SolverKind::Ttr).chain(BASELINES) {
        let m = means(&summary, solver);
        if !non_increasing(&m, 0.01) {
            problems.push(format!("{solver} rises: {}", fmt(&m)));
        }
        if require_drop && m.last() >= m.first() {
            problems.push(format!("{solver} does not fall overall: {}", fmt(&m)));
        }
    }
    let ttr = means(&summary, SolverKind::Ttr);
    for solver in [SolverKind::Nn, SolverKind::Random] {
        let other = means(&summary, solver);
        if ttr.len() != other.len() || ttr.iter().zip(&other).any(|(a, b)| a < b) {
            problems.push(format!("ttr {} vs {solver} {}", fmt(&ttr), fmt(&other)));
        }
    }
    let pass = problems.is_empty();
    let detail = if pass {
        format!(
            "{} points x {} replicas; ttr {} | nn {} | random {}",
            ttr.len(),
            exp.spec.repeats,
            fmt(&ttr),
            fmt(&means(&summary, SolverKind::Nn)),
            fmt(&means(&summary, SolverKind::Random))
        )
    } else {
        problems.join("; ")
    };
    Verdict::new(pass, detail)
}

fn criterion_4() -> Verdict {
    demand_sweep("trust_demand_sweep.json", false)
}

fn criterion_5() -> Verdict {
    demand_sweep("rate_demand_sweep.json", true)
}

/// Larger fleets never hurt, with diminishing returns.
fn criterion_6() -> Verdict {
    let exp = experiment("fleet_size_sweep.json");
    let opts = RunOptions {
        solvers: Some(vec![SolverKind::Ttr]),
        ..Default::default()
    };
    let summary = summarize(&run_sweep(&exp, &opts).expect("sweep").rows);
    let m = means(&summary, SolverKind::Ttr);
    if m.len() != 4 {
        return Verdict::new(false, format!("expected 4 fleet sizes, got {}", m.len()));
    }
    let (early, late) = (m[1] - m[0], m[3] - m[2]);
    Verdict::new(
        non_decreasing(&m, 0.0) && late < early,
        format!(
            "ttr means {} over n = 25/50/100/200, gain 25->50 {early:.2e}, 100->200 {late:.2e}",
            m.iter()
                .map(|x| format!("{x:.6}"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    )
}

fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

/// Task-specific trust evaluated straight from the ledger.
fn direct_trust(
    fleet: &Fleet,
    ledger: &TrustLedger,
    w: TrustWeights,
    a: usize,
    b: usize,
    s: TaskTypeId,
) -> f64 {
    let d = fleet.devices();
    let peers = |x: usize| -> BTreeSet<usize> {
        (0..d.len())
            .filter(|&y| {
                y != x
                    && d[y]
                        .supported_types
                        .intersection(&d[x].supported_types)
                        .next()
                        .is_some()
            })
            .collect()
    };
    let ratio = |recs: Vec<&InteractionRecord>| {
        if recs.is_empty() {
            w.neutral_prior
        } else {
            recs.iter().filter(|r| r.b_ret == 1).count() as f64 / recs.len() as f64
        }
    };
    let history = |x: usize, y: usize| {
        ratio(
            ledger
                .records()
                .iter()
                .filter(|r| r.initiator == d[x].id && r.collaborator == d[y].id)
                .collect(),
        )
    };
    let r = |x: usize, y: usize| {
        w.delta[0] * jaccard(&d[x].supported_types, &d[y].supported_types)
            + w.delta[1] * jaccard(&peers(x), &peers(y))
            + w.delta[2] * history(x, y)
    };
    let group = |y: usize, t: TaskTypeId| {
        let members: Vec<usize> = (0..d.len())
            .filter(|&x| x != y && d[x].supports(t))
            .collect();
        if members.is_empty() {
            w.neutral_prior
        } else {
            members.iter().map(|&x| r(x, y)).sum::<f64>() / members.len() as f64
        }
    };
    let types = &d[b].supported_types;
    let overall = types.iter().map(|&t| group(b, t)).sum::<f64>() / types.len() as f64;
    let typed = ratio(
        ledger
            .records()
            .iter()
            .filter(|r| r.initiator == d[a].id && r.collaborator == d[b].id && r.task_type == s)
            .collect(),
    );
    w.beta[0] * overall + w.beta[1] * r(a, b) + w.beta[2] * typed
}

/// Reference values for the value function, the trust pipeline and the
/// hypergraph incidence structure.
fn criterion_7() -> Verdict {
    let mut problems = Vec::new();
    let vt = value_time(1.2, 0.6);
    if (vt - (-1.0f64).exp()).abs() > 1e-12 {
        problems.push(format!("value_time(1.2, 0.6) = {vt}"));
    }

    let scenario = builtin_ics_catalog();
    let fleet = scenario.fleet().unwrap();
    let mut ledger = TrustLedger::new();
    let model = OutcomeModel {
        fleet: &fleet,
        link_loss: &scenario.link_loss,
        loss_threshold: scenario.loss_threshold,
    };
    bootstrap_trust(
        &model,
        &mut ledger,
        100,
        BootstrapConfig::default(),
        &mut Xoshiro256PlusPlus::seed_from_u64(7),
    );
    let w = TrustWeights::default().with_beta([0.2, 0.3, 0.5]);
    let graph = decompose_to_directed(
        &build_group_trust_hypergraph(&fleet, &ledger, w),
        &fleet,
        &ledger,
        w,
    )
    .unwrap();
    let d = fleet.devices();
    let (mut compared, mut worst) = (0, 0.0f64);
    for a in 0..d.len() {
        for b in (0..d.len()).filter(|&b| b != a) {
            for &s in d[a].supported_types.intersection(&d[b].supported_types) {
                let got =
                    task_specific_trust(&graph, &fleet, &ledger, w, d[a].id, d[b].id, s).unwrap();
                worst = worst.max((got - direct_trust(&fleet, &ledger, w, a, b, s)).abs());
                compared += 1;
            }
        }
    }
    if worst > 1e-12 {
        problems.push(format!("trust pipeline off by {worst:.1e}"));
    }

    let engine = TrustEngine::new(&fleet, &ledger, w);
    let res = ResourceHypergraph::from_engine(&engine);
    let res_sums = res.incidence().column_sums();
    let task_sums = build_task_hypergraph(&ttr_core::catalog::table_iii_task())
        .incidence()
        .column_sums();
    if res_sums.iter().chain(&task_sums).any(|&c| c != 3) || res_sums.is_empty() {
        problems.push("incidence column sums differ from 3".into());
    }
    let pass = problems.is_empty();
    let detail = if pass {
        format!(
            "V_time = e^-1; {compared} trust values match to {worst:.1e}; {} + {} hyperedges with 3 vertices each",
            res_sums.len(),
            task_sums.len()
        )
    } else {
        problems.join("; ")
    };
    Verdict::new(pass, detail)
}

/// The CLI reproduces its output byte for byte for a fixed seed.
fn criterion_8() -> Verdict {
    let run = |seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_ttr"))
            .arg("sweep")
            .arg(scenarios().join("trust_demand_sweep.json"))
            .args(["--seed", seed])
            .output()
            .expect("running ttr");
        assert!(
            out.status.success(),
            "ttr failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let (a, b, other) = (run("11"), run("11"), run("12"));
    let rows = a.iter().filter(|&&c| c == b'\n').count().saturating_sub(1);
    Verdict::new(
        !a.is_empty() && a == b && a != other,
        format!(
            "{rows} result rows, {} bytes identical across runs; seed 12 differs: {}",
            a.len(),
            a != other
        ),
    )
}

fn main() -> ExitCode {
    type Check = (u8, &'static str, fn() -> Verdict);
    let criteria: [Check; 8] = [
        (1, "near-optimal on small instances", criterion_1),
        (2, "replicator simplex and monotone payoff", criterion_2),
        (3, "task-specific trust diversity", criterion_3),
        (4, "trust demand sweep", criterion_4),
        (5, "rate demand sweep", criterion_5),
        (6, "fleet size scaling", criterion_6),
        (7, "reference values", criterion_7),
        (8, "reproducible CLI output", criterion_8),
    ];
    let mut failed = 0;
    for (n, name, check) in criteria {
        let start = Instant::now();
        let v = check();
        let verdict = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n} {verdict}: {name} ({:.1} s): {}",
            start.elapsed().as_secs_f64(),
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    if failed == 0 {
        println!("acceptance: all 8 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 8 criteria fail");
        ExitCode::FAILURE
    }
}
