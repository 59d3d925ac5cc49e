//! Data generators for single- and multi-mediator designs and the Monte
//! Carlo drivers behind size, power, FWER and coverage tables.
//!
//! Replication `r` draws from stream `r` of the scenario's base seed, and
//! per-replication results are reduced in replication order, so summaries
//! are identical for any worker count.

mod config;
mod generate;
mod qq;
mod run;

pub use config::{ScenarioBundle, ScenarioConfig, StudyKind};
pub use generate::{
    calibrate_censoring, calibrated, generate, Generator, MIN_PILOT_N, PILOT_STREAM,
};
pub use qq::{ks_uniform_distance, qq_data};
pub use run::{
    run_coverage, run_coverage_with, run_fwer, run_fwer_with, run_size_power, run_size_power_with,
    run_study, simulate_pvalues, CoverageRow, Estimates, PlugIn, RateEstimate, RunOptions,
    SimulationSummary, FAILURE_FLAG_SHARE,
};
