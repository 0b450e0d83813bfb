//! Rolling-origin evaluation.
//!
//! Every method is fitted once on data up to the first test origin. Each test
//! day then issues a 96-hour forecast from that day's 07:00 origin, given a
//! copy of the load series that ends at the origin and, for ex-ante runs, only
//! the temperature vintages issued by then.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::calendar::{self, HORIZONS};
use crate::error::{invalid, Error, Result};
use crate::harness::config::EvalConfig;
use crate::harness::method::{require_temperature, temperature_view, Fitted, IssuedForecast, MethodSpec};
use crate::ingest::{self, ReportRow};
use crate::metrics::{self, ScoreNormalizer};
use crate::series::{LoadSeries, QuantileForecast, SplitSpec, TemperatureData, TemperatureMode};

pub const METRIC_MAPE: &str = "MAPE";
pub const METRIC_RMAE: &str = "RMAE";
pub const METRIC_RCRPS: &str = "RCRPS";
pub const METRIC_PINBALL: &str = "PINBALL";
/// Scored target hours dropped for a missing actual, a missing forecast or a
/// zero actual (MAPE only).
pub const METRIC_EXCLUDED: &str = "EXCLUDED";

/// One feeder's load and, when available, its temperature record.
#[derive(Debug, Clone, PartialEq)]
pub struct FeederData {
    pub series: LoadSeries,
    pub temps: Option<TemperatureData>,
}

impl FeederData {
    pub fn id(&self) -> &str {
        self.series.feeder_id()
    }
}

/// Reads `DIR/load/*.csv` (sorted by name) and, if both exist,
/// `DIR/temperature_actual.csv` and `DIR/temperature_forecast.csv`.
pub fn load_data_dir(dir: &Path) -> Result<Vec<FeederData>> {
    let load_dir = dir.join("load");
    let mut paths: Vec<_> = std::fs::read_dir(&load_dir)
        .map_err(|e| invalid(format!("cannot read {}: {e}", load_dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(invalid(format!("no load CSVs in {}", load_dir.display())));
    }
    let (actual, forecast) = (dir.join("temperature_actual.csv"), dir.join("temperature_forecast.csv"));
    let with_temps = actual.exists() && forecast.exists();
    paths
        .iter()
        .map(|p| {
            let series = ingest::parse_load_csv(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            let temps = if with_temps {
                Some(ingest::parse_temperature_csv(&actual, &forecast, series.start())?)
            } else {
                None
            };
            Ok(FeederData { series, temps })
        })
        .collect()
}

/// Largest load index and latest vintage day a forecast could see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditRecord {
    pub origin: usize,
    pub max_load_index: usize,
    /// Only recorded for ex-ante (forecast-temperature) runs.
    pub max_vintage_day: Option<usize>,
}

impl AuditRecord {
    pub fn is_violation(&self) -> bool {
        self.max_load_index > self.origin
            || self.max_vintage_day.is_some_and(|d| d > calendar::day_index(self.origin))
    }
}

/// Forecasts and audit trail of one method on one feeder.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub feeder: String,
    pub method: MethodSpec,
    pub forecasts: Vec<IssuedForecast>,
    pub audit: Vec<AuditRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodFailure {
    pub feeder: String,
    pub method: String,
    pub message: String,
}

/// Scores, forecasts, audit records and failures of a rolling evaluation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorReport {
    /// Sorted by feeder, method, metric and slice.
    pub rows: Vec<ReportRow>,
    pub runs: Vec<MethodRun>,
    pub failures: Vec<MethodFailure>,
}

/// Report slices: `all`, the day-ahead buckets `d1..d4` and horizons `h1..h96`.
pub fn slice_names() -> Vec<String> {
    let mut v = vec!["all".to_string()];
    v.extend((1..=4).map(|d| format!("d{d}")));
    v.extend((1..=HORIZONS).map(|h| format!("h{h}")));
    v
}

pub(crate) fn slice_rank(s: &str) -> (u8, usize) {
    match s.split_at(1) {
        ("d", n) => (1, n.parse().unwrap_or(usize::MAX)),
        ("h", n) => (2, n.parse().unwrap_or(usize::MAX)),
        _ => (0, 0),
    }
}

fn row_key(r: &ReportRow) -> (&str, &str, &str, (u8, usize)) {
    (&r.feeder, &r.method, &r.metric, slice_rank(&r.horizon_day))
}

impl ErrorReport {
    pub fn value(&self, feeder: &str, method: &str, metric: &str, slice: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.feeder == feeder && r.method == method && r.metric == metric && r.horizon_day == slice)
            .map(|r| r.value)
    }

    /// Mean over feeders of a metric on one slice.
    pub fn mean_over_feeders(&self, method: &str, metric: &str, slice: &str) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.method == method && r.metric == metric && r.horizon_day == slice)
            .map(|r| r.value)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn audit_records(&self) -> impl Iterator<Item = (&MethodRun, &AuditRecord)> {
        self.runs.iter().flat_map(|r| r.audit.iter().map(move |a| (r, a)))
    }

    pub fn leakage_violations(&self) -> usize {
        self.audit_records().filter(|(_, a)| a.is_violation()).count()
    }

    pub fn run(&self, feeder: &str, method: &str) -> Option<&MethodRun> {
        self.runs.iter().find(|r| r.feeder == feeder && r.method.to_string() == method)
    }

    /// Writes `report.csv`, `audit.csv`, `failures.csv` and one forecast CSV
    /// per feeder and method under `forecasts/`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        if self.rows.is_empty() {
            return Err(invalid("no method produced a score"));
        }
        ingest::write_report_csv(&self.rows, &dir.join("report.csv"))?;
        let mut audit = String::from("feeder,method,origin,max_load_index,max_vintage_day\n");
        for (run, a) in self.audit_records() {
            let vintage = a.max_vintage_day.map_or(String::new(), |d| d.to_string());
            audit.push_str(&format!("{},{},{},{},{}\n", run.feeder, run.method, a.origin, a.max_load_index, vintage));
        }
        ingest::write_text(&dir.join("audit.csv"), &audit)?;
        let mut failures = String::from("feeder,method,message\n");
        for f in &self.failures {
            failures.push_str(&format!("{},{},\"{}\"\n", f.feeder, f.method, f.message.replace('"', "'")));
        }
        ingest::write_text(&dir.join("failures.csv"), &failures)?;
        for run in &self.runs {
            let issued: Vec<QuantileForecast> = run
                .forecasts
                .iter()
                .map(|f| match &f.quantiles {
                    Some(q) => Ok(q.clone()),
                    None => QuantileForecast::new(f.origin, vec![0.5], f.point.iter().map(|&v| vec![v]).collect()),
                })
                .collect::<Result<_>>()?;
            let path = dir.join("forecasts").join(&run.feeder).join(format!("{}.csv", run.method));
            ingest::write_forecast_csv(&issued, &path)?;
        }
        Ok(())
    }
}

/// Fits `method` on one feeder and issues a forecast at every test origin.
pub fn run_method(data: &FeederData, method: &MethodSpec, split: &SplitSpec, taus: &[f64], seed: u64) -> Result<MethodRun> {
    let series = &data.series;
    let temps = require_temperature(method, data.temps.as_ref())?;
    let ex_ante = method.temperature == TemperatureMode::Forecast;
    let view = |day: usize| -> Option<Cow<'_, TemperatureData>> {
        temps.map(|t| if ex_ante { Cow::Owned(temperature_view(t, day)) } else { Cow::Borrowed(t) })
    };
    let first = split.test_days[0];
    let last_origin = calendar::origin_index(*split.test_days.last().expect("validated split"));
    if last_origin > series.len() {
        return Err(Error::InsufficientData { required: last_origin, actual: series.len() });
    }
    let fit_series = series.truncated(calendar::origin_index(first));
    let fit_temps = view(first);
    let fitted = Fitted::fit(method, &fit_series, fit_temps.as_deref(), split, taus)?;

    let mut forecasts = Vec::with_capacity(split.test_days.len());
    let mut audit = Vec::with_capacity(split.test_days.len());
    for &day in &split.test_days {
        let origin = calendar::origin_index(day);
        let visible = series.truncated(origin);
        let day_temps = view(day);
        let f = fitted.forecast(&visible, day_temps.as_deref(), origin, taus, seed)?;
        if f.point.len() != HORIZONS {
            return Err(invalid(format!("{method} returned {} horizons", f.point.len())));
        }
        audit.push(AuditRecord {
            origin,
            max_load_index: visible.len().max(fit_series.len()),
            max_vintage_day: if ex_ante {
                day_temps.as_deref().and_then(|t| t.forecasts.keys().next_back().copied())
            } else {
                None
            },
        });
        forecasts.push(f);
    }
    Ok(MethodRun { feeder: series.feeder_id().to_string(), method: *method, forecasts, audit })
}

/// One scored target hour.
#[derive(Debug, Clone, Copy)]
struct Scored {
    horizon: usize,
    actual: f64,
    point: f64,
    crps: f64,
    pinball: Option<f64>,
}

/// Report rows of one method run.
pub fn score_run(run: &MethodRun, series: &LoadSeries, normalizer: ScoreNormalizer) -> Result<Vec<ReportRow>> {
    let mut points = Vec::new();
    let mut excluded = 0usize;
    for f in &run.forecasts {
        for h in 1..=HORIZONS {
            let t = f.origin + h;
            let point = f.point[h - 1];
            if t > series.len() || !series.is_observed(t) || !point.is_finite() {
                excluded += 1;
                continue;
            }
            let actual = series.value(t);
            let (crps, pinball) = match &f.quantiles {
                Some(q) => (
                    metrics::crps_from_quantiles(actual, q.row(h), q.taus())?,
                    Some(metrics::mean_pinball(actual, q.row(h), q.taus())),
                ),
                None => ((actual - point).abs(), None),
            };
            points.push(Scored { horizon: h, actual, point, crps, pinball });
        }
    }
    if points.is_empty() {
        return Err(invalid(format!("{} produced no scorable forecast", run.method)));
    }
    let method = run.method.to_string();
    let row = |metric: &str, slice: &str, value: f64| ReportRow {
        feeder: run.feeder.clone(),
        method: method.clone(),
        metric: metric.to_string(),
        horizon_day: slice.to_string(),
        value,
    };
    let mut rows = Vec::new();
    for slice in slice_names() {
        let keep = |p: &&Scored| match slice_rank(&slice) {
            (0, _) => true,
            (1, d) => calendar::horizon_day(p.horizon) == d,
            (_, h) => p.horizon == h,
        };
        let sel: Vec<&Scored> = points.iter().filter(keep).collect();
        if sel.is_empty() {
            continue;
        }
        let actuals: Vec<f64> = sel.iter().map(|p| p.actual).collect();
        let preds: Vec<f64> = sel.iter().map(|p| p.point).collect();
        let crps: Vec<f64> = sel.iter().map(|p| p.crps).collect();
        let mape = metrics::mape(&actuals, &preds).ok();
        if let Some(m) = mape {
            rows.push(row(METRIC_MAPE, &slice, m.value));
        }
        rows.push(row(METRIC_RMAE, &slice, metrics::rmae(&actuals, &preds, normalizer)?));
        rows.push(row(METRIC_RCRPS, &slice, metrics::rcrps(&crps, normalizer)?));
        if run.method.is_probabilistic() {
            let pin: f64 = sel.iter().filter_map(|p| p.pinball).sum::<f64>() / sel.len() as f64;
            rows.push(row(METRIC_PINBALL, &slice, pin));
        }
        if slice == "all" {
            let zero = mape.map_or(sel.len(), |m| m.excluded);
            rows.push(row(METRIC_EXCLUDED, &slice, (excluded + zero) as f64));
        }
    }
    Ok(rows)
}

struct FeederOutcome {
    rows: Vec<ReportRow>,
    runs: Vec<MethodRun>,
    failures: Vec<MethodFailure>,
}

fn evaluate_feeder(data: &FeederData, config: &EvalConfig) -> FeederOutcome {
    let feeder = data.id().to_string();
    let mut out = FeederOutcome { rows: Vec::new(), runs: Vec::new(), failures: Vec::new() };
    let fail = |method: String, e: Error| MethodFailure { feeder: feeder.clone(), method, message: e.to_string() };
    let prepared = config
        .split_for(&data.series)
        .and_then(|split| ScoreNormalizer::from_training(&data.series, split.train_end).map(|n| (split, n)));
    let (split, normalizer) = match prepared {
        Ok(p) => p,
        Err(e) => {
            out.failures.push(fail("*".into(), e));
            return out;
        }
    };
    for method in &config.methods {
        let result = run_method(data, method, &split, &config.taus, config.seed)
            .and_then(|run| score_run(&run, &data.series, normalizer).map(|rows| (run, rows)));
        match result {
            Ok((run, rows)) => {
                out.rows.extend(rows);
                out.runs.push(run);
            }
            Err(e) => out.failures.push(fail(method.to_string(), e)),
        }
    }
    out
}

/// Runs every configured method on every feeder; per-feeder failures are
/// recorded and the rest of the run continues.
pub fn run_rolling_evaluation(data: &[FeederData], config: &EvalConfig) -> Result<ErrorReport> {
    config.validate()?;
    if data.is_empty() {
        return Err(invalid("no feeders to evaluate"));
    }
    let mut ids = BTreeMap::new();
    for d in data {
        if ids.insert(d.id(), ()).is_some() {
            return Err(invalid(format!("feeder id '{}' appears twice", d.id())));
        }
    }
    let outcomes: Vec<FeederOutcome> = data.par_iter().map(|d| evaluate_feeder(d, config)).collect();
    let mut report = ErrorReport::default();
    for o in outcomes {
        report.rows.extend(o.rows);
        report.runs.extend(o.runs);
        report.failures.extend(o.failures);
    }
    report.rows.sort_by(|a, b| row_key(a).cmp(&row_key(b)));
    report
        .runs
        .sort_by(|a, b| (a.feeder.as_str(), a.method.to_string()).cmp(&(b.feeder.as_str(), b.method.to_string())));
    report.failures.sort_by(|a, b| (&a.feeder, &a.method).cmp(&(&b.feeder, &b.method)));
    Ok(report)
}
