//! Scenario runner, statistics and reporting.

pub mod scenario;
pub mod stats;

pub use scenario::{fmt_f64, run_scenario, run_scenario_in, write_report, Kind, Op, Report, Scenario, Table, Verdict, VerdictResult};
pub use stats::{decades, fit_log_growth, ks_exponential, ks_statistic, ks_two_sample, trend, LogFit, Trend};
