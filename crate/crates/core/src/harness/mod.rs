//! Rolling-origin evaluation, cross-feeder analyses and the command line.
//!
//! Forecasts are issued once per test day at the 07:00 origin for horizons
//! 1 to 96 and scored overall, per day-ahead bucket and per horizon.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod evaluate;
pub mod method;

pub use analysis::{scaling_analysis, temperature_mode_sweep, KsCell, ScalingAnalysis, SweepSummary, TemperatureSweep};
pub use config::{DayRef, EvalConfig, TrainEnd};
pub use evaluate::{
    load_data_dir, run_method, run_rolling_evaluation, score_run, slice_names, AuditRecord, ErrorReport, FeederData,
    MethodFailure, MethodRun, METRIC_EXCLUDED, METRIC_MAPE, METRIC_PINBALL, METRIC_RCRPS, METRIC_RMAE,
};
pub use method::{row_median, IssuedForecast, MethodKind, MethodSpec};
