use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ttr_core::catalog::builtin_ics_catalog;
use ttr_core::scenario::{load_scenario, validate_scenario, ScenarioConfig};
use ttr_core::sim::{
    emit, oracle_check, resolve_scenario, run_scenario, run_sweep, stream, summarize, trend_report,
    write_results_csv, write_trajectory_csv, Experiment, ExperimentSpec, Format, OracleCheckConfig,
    RunArtifacts, RunOptions, SolverKind, Stream, BUILTIN_ICS,
};
use ttr_core::trust::{bootstrap_trust, BootstrapConfig, OutcomeModel, TrustLedger};

#[derive(Parser)]
#[command(
    name = "ttr",
    version,
    about = "Trusted task-resource matching experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every replica of an experiment at its base configuration.
    Simulate(RunArgs),
    /// Run every replica at every point of the experiment's sweep.
    Sweep(RunArgs),
    /// Generate an interaction history and write it as JSON lines.
    Bootstrap(BootstrapArgs),
    /// Compare solvers with exhaustive search on random small instances.
    OracleCheck(OracleArgs),
    /// Print the built-in ICS scenario as JSON.
    Catalog {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario file and list every problem found.
    Validate { scenario: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Experiment spec (JSON). Without one, the built-in defaults are used.
    experiment: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
    /// Comma-separated subset of ttr, one_to_one, nn, random, oracle.
    #[arg(long, value_delimiter = ',')]
    solvers: Option<Vec<String>>,
    /// Record solver wall-clock time (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Output directory; results go to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print per-point means to stderr.
    #[arg(long)]
    summary: bool,
}

#[derive(Args)]
struct BootstrapArgs {
    #[arg(long, default_value = BUILTIN_ICS)]
    scenario: String,
    #[arg(long, default_value_t = 500)]
    tasks: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value = BUILTIN_ICS)]
    scenario: String,
    #[arg(long, default_value_t = 200)]
    instances: usize,
    #[arg(long, default_value_t = 3)]
    max_subtasks: usize,
    #[arg(long, default_value_t = 8)]
    max_devices: usize,
    #[arg(long, default_value_t = 0.2)]
    min_trust: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Required share of instances within 5% of the optimum.
    #[arg(long)]
    min_fraction: Option<f64>,
    /// Print the full per-instance report as JSON.
    #[arg(long)]
    json: bool,
}

fn scenario_arg(reference: &str) -> Result<ScenarioConfig> {
    resolve_scenario(reference, Path::new("."))
        .with_context(|| format!("loading scenario {reference}"))
}

fn load_experiment(path: Option<&Path>) -> Result<Experiment> {
    match path {
        Some(p) => {
            Experiment::load(p).with_context(|| format!("loading experiment {}", p.display()))
        }
        None => Ok(Experiment::new(
            ExperimentSpec::default(),
            builtin_ics_catalog(),
        )?),
    }
}

fn parse_solvers(names: &[String]) -> Result<Vec<SolverKind>> {
    names
        .iter()
        .map(|n| SolverKind::parse(n.trim()).with_context(|| format!("unknown solver {n:?}")))
        .collect()
}

fn write_stdout(artifacts: &RunArtifacts, format: Format) -> Result<()> {
    let mut out = BufWriter::new(io::stdout().lock());
    match format {
        Format::Csv => {
            if artifacts.rows.is_empty() {
                write_trajectory_csv(&artifacts.trajectory, &mut out)?;
            } else {
                write_results_csv(&artifacts.rows, &mut out)?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, artifacts)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn run(args: RunArgs, sweep: bool) -> Result<()> {
    let exp = load_experiment(args.experiment.as_deref())?;
    let opts = RunOptions {
        seed: args.seed,
        solvers: args.solvers.as_deref().map(parse_solvers).transpose()?,
        timing: args.timing,
        detail: matches!(args.format, OutFormat::Json),
    };
    let artifacts = if sweep {
        run_sweep(&exp, &opts)?
    } else {
        run_scenario(&exp, &opts)?
    };
    if args.summary {
        eprint!("{}", trend_report(&summarize(&artifacts.rows)));
    }
    match &args.out {
        Some(dir) => {
            for path in emit(&artifacts, args.format.into(), dir)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => write_stdout(&artifacts, args.format.into())?,
    }
    Ok(())
}

fn bootstrap(args: BootstrapArgs) -> Result<()> {
    let scenario = scenario_arg(&args.scenario)?;
    let fleet = scenario.fleet()?;
    let model = OutcomeModel {
        fleet: &fleet,
        link_loss: &scenario.link_loss,
        loss_threshold: scenario.loss_threshold,
    };
    let mut ledger = TrustLedger::new();
    let mut rng = stream(args.seed.unwrap_or(scenario.rng_seed), Stream::Bootstrap);
    bootstrap_trust(
        &model,
        &mut ledger,
        args.tasks,
        BootstrapConfig::default(),
        &mut rng,
    );
    match &args.out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            ledger.write_jsonl(BufWriter::new(file))?;
            // Round-trip guard: the file must read back to the same history.
            let back = TrustLedger::read_jsonl(BufReader::new(File::open(path)?))?;
            if back != ledger {
                bail!(
                    "ledger written to {} does not read back identically",
                    path.display()
                );
            }
            eprintln!("wrote {} records to {}", ledger.len(), path.display());
        }
        None => ledger.write_jsonl(io::stdout().lock())?,
    }
    Ok(())
}

fn check(args: OracleArgs) -> Result<ExitCode> {
    let scenario = scenario_arg(&args.scenario)?;
    let cfg = OracleCheckConfig {
        instances: args.instances,
        max_subtasks: args.max_subtasks,
        max_devices: args.max_devices,
        min_trust: args.min_trust,
        seed: args.seed,
        ..OracleCheckConfig::default()
    };
    let report = oracle_check(&scenario, &cfg)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("instances        {}", report.instances.len());
        println!(
            "within 5%        {} ({:.3})",
            report.within_tolerance,
            report.fraction_within()
        );
        println!("mean gap         {:.6}", report.mean_gap);
        println!("max gap          {:.6}", report.max_gap);
        println!("violations       {}", report.violations);
        for r in report.instances.iter().filter(|r| !r.violations.is_empty()) {
            for v in &r.violations {
                println!("  seed {}: {v}", r.seed);
            }
        }
    }
    let quality_ok = args
        .min_fraction
        .is_none_or(|f| report.fraction_within() >= f);
    Ok(if report.invariants_hold() && quality_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn validate(path: &Path) -> Result<ExitCode> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw: ScenarioConfig = serde_json::from_str(&text).context("parsing scenario")?;
    let problems = validate_scenario(&raw);
    if problems.is_empty() {
        load_scenario(path)?;
        println!(
            "ok: {} devices, {} task types",
            raw.devices.len(),
            raw.task_types.len()
        );
        return Ok(ExitCode::SUCCESS);
    }
    for p in &problems {
        println!("{p}");
    }
    Ok(ExitCode::FAILURE)
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Simulate(args) => run(args, false)?,
        Command::Sweep(args) => run(args, true)?,
        Command::Bootstrap(args) => bootstrap(args)?,
        Command::OracleCheck(args) => return check(args),
        Command::Catalog { out } => {
            let cfg = builtin_ics_catalog();
            match out {
                Some(path) => cfg.save(&path)?,
                None => println!("{}", cfg.to_json()?),
            }
        }
        Command::Validate { scenario } => return validate(&scenario),
    }
    Ok(ExitCode::SUCCESS)
}
