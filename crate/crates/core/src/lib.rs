//! Probabilistic short-term load forecasting for low-voltage feeders.
//!
//! The crate bundles the forecasting families (kernel density, quantile
//! seasonal regression, autoregressive, Holt-Winters-Taylor, and six
//! benchmarks), the scoring rules used to compare them, and a rolling-origin
//! evaluation harness that issues 96-hour forecasts at a fixed morning origin
//! each test day.

pub mod ar;
pub mod benchmarks;
pub mod calendar;
pub mod error;
pub mod harness;
pub mod hwt;
pub mod ingest;
pub mod kde;
pub mod linalg;
pub mod lp;
pub mod metrics;
pub mod optim;
pub mod seasonal_qr;
pub mod series;

pub use error::{Error, Result};
pub use series::{LoadSeries, MinMaxScale, QuantileForecast, SplitSpec, TemperatureData, TemperatureMode};
