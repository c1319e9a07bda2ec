//! Experiment harness: configuration, environments, traces, summaries and
//! the seed-parallel runner behind the `scb` binary.

pub mod config;
pub mod env;
pub mod runner;
pub mod summary;
pub mod trace;

pub use config::{
    BanditSpec, ExperimentConfig, MdpAlgorithm, MdpSpec, Setting, SummaryOptions, SweepSpec, SCHEMA_VERSION,
};
pub use env::{
    random_mdp, BanditEnvironment, LossNoise, MdpEnvironment, MdpSuiteAdversary, Reachability, ScaleJump,
    SuiteAdversary,
};
pub use runner::{
    run_bandit_seed, run_experiment, run_mdp_seed, run_sweep, sweep_variants, write_summary, RunOutput, SeedOutcome,
};
pub use summary::{
    at_checkpoints, default_checkpoints, loglog_slope, quantile, summarize, RunLabels, SeedRegret, Summary,
};
pub use trace::{format_float, read_regret_series, BanditRow, MdpRow, TraceWriter};
