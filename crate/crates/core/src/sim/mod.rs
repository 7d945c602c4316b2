//! Experiment driver: seeded replicas, parameter sweeps, baselines and
//! result emission.

mod check;
mod output;
mod rng;
mod runner;
mod spec;

pub use check::{oracle_check, InstanceReport, OracleCheckConfig, OracleCheckReport};
pub use output::{
    emit, load_artifacts, non_decreasing, non_increasing, series, summarize, trend_report,
    write_results_csv, write_summary_csv, write_trajectory_csv, Format, SummaryRow, RESULT_COLUMNS,
    SUMMARY_COLUMNS, TRAJECTORY_COLUMNS,
};
pub use rng::{replica_seeds, stream, Stream};
pub use runner::{
    nested_fleet, one_to_one_weights, prepare_instance, run_scenario, run_solvers, run_sweep,
    run_trust_evolution, Instance, ResultRow, RunArtifacts, RunOptions, TrustPoint,
};
pub use spec::{
    parse_experiment, resolve_scenario, Experiment, ExperimentSpec, Layout, ReliabilityMode,
    ReliabilityOverride, SolverKind, Sweep, SweepAxis, SweepValue, TrustEvolution, BUILTIN_ICS,
};
