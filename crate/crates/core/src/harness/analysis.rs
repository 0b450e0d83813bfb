//! Cross-feeder analyses: the temperature-input sweep and the accuracy
//! versus demand power law.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calendar::{self, HOURS_PER_DAY};
use crate::error::{invalid, Result};
use crate::harness::config::EvalConfig;
use crate::harness::evaluate::{run_rolling_evaluation, ErrorReport, FeederData, MethodRun, METRIC_MAPE};
use crate::harness::method::MethodSpec;
use crate::ingest::synth::stream_key;
use crate::metrics::{self, PowerLaw};
use crate::series::TemperatureMode;

pub const SWEEP_MODES: [TemperatureMode; 3] = [TemperatureMode::None, TemperatureMode::Forecast, TemperatureMode::Actual];
const KS_ALPHA: f64 = 0.05;

/// KS comparison of one (feeder, hour of day) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct KsCell {
    pub feeder: String,
    pub method: String,
    pub mode: TemperatureMode,
    pub hour: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub rejects: bool,
}

/// Mean MAPE of one temperature input next to the same method without one.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub method: String,
    pub mode: TemperatureMode,
    pub mape_none: f64,
    pub mape_mode: f64,
    pub cells: usize,
    pub rejections: usize,
}

impl SweepSummary {
    /// MAPE with the temperature input minus MAPE without, in points.
    pub fn delta(&self) -> f64 {
        self.mape_mode - self.mape_none
    }

    pub fn rejection_rate(&self) -> f64 {
        if self.cells == 0 {
            f64::NAN
        } else {
            self.rejections as f64 / self.cells as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureSweep {
    pub report: ErrorReport,
    pub ks: Vec<KsCell>,
    pub summary: Vec<SweepSummary>,
}

impl TemperatureSweep {
    pub fn summary_for(&self, method: &str, mode: TemperatureMode) -> Option<&SweepSummary> {
        self.summary.iter().find(|s| s.method == method && s.mode == mode)
    }

    pub fn ks_csv(&self) -> String {
        let mut out = String::from("feeder,method,mode,hour,statistic,p_value,rejects\n");
        for c in &self.ks {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.feeder,
                c.method,
                c.mode.as_str(),
                c.hour,
                c.statistic,
                c.p_value,
                u8::from(c.rejects)
            ));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("method,mode,mape_none,mape_mode,delta,ks_cells,ks_rejections\n");
        for s in &self.summary {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s.method,
                s.mode.as_str(),
                s.mape_none,
                s.mape_mode,
                s.delta(),
                s.cells,
                s.rejections
            ));
        }
        out
    }
}

/// Day-ahead errors `actual − point` by hour of day, one per target hour,
/// keyed by the test-origin position.
fn next_day_errors(run: &MethodRun, data: &FeederData) -> Vec<(usize, usize, f64)> {
    let series = &data.series;
    let mut out = Vec::new();
    for (k, f) in run.forecasts.iter().enumerate() {
        for h in 1..=HOURS_PER_DAY {
            let t = f.origin + h;
            if t <= series.len() && series.is_observed(t) && f.point[h - 1].is_finite() {
                out.push((k, calendar::hour_of_day(t), series.value(t) - f.point[h - 1]));
            }
        }
    }
    out
}

/// For each hour of day, a seeded random half of the `n` origins (`true`).
fn origin_halves(seed: u64, feeder: &str, n: usize) -> Vec<Vec<bool>> {
    (0..HOURS_PER_DAY)
        .map(|hour| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_key(seed, feeder) ^ (hour as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut mark = vec![false; n];
            for &k in &order[..n / 2] {
                mark[k] = true;
            }
            mark
        })
        .collect()
}

/// Runs every temperature-capable method without temperature and with each
/// temperature input, then compares error distributions per (feeder, hour).
///
/// The two forecasts of one target share its actual, so their errors are far
/// from independent. Each KS cell therefore splits the test origins at random
/// into two halves (seeded by the config seed, feeder and hour) and compares
/// the no-temperature errors from one half with the other input's errors from
/// the other. Only day-ahead (horizon 1 to 24) errors are used so each target
/// hour enters a sample once. When both inputs give identical errors the
/// random split makes the KS null hold exactly; a fixed even/odd split would
/// pair neighbouring days and make the test conservative.
pub fn temperature_mode_sweep(data: &[FeederData], config: &EvalConfig) -> Result<TemperatureSweep> {
    if data.iter().any(|d| d.temps.is_none()) {
        return Err(invalid("the temperature sweep needs temperature data for every feeder"));
    }
    let mut families: Vec<MethodSpec> = Vec::new();
    for m in &config.methods {
        if !m.supports_temperature() {
            continue;
        }
        let base = m.with_temperature(TemperatureMode::None)?;
        if !families.contains(&base) {
            families.push(base);
        }
    }
    if families.is_empty() {
        return Err(invalid("no configured method takes a temperature input"));
    }
    let mut methods = Vec::new();
    for f in &families {
        for mode in SWEEP_MODES {
            methods.push(f.with_temperature(mode)?);
        }
    }
    let cfg = EvalConfig { methods, ..config.clone() };
    let report = run_rolling_evaluation(data, &cfg)?;

    let mut ks = Vec::new();
    let mut summary = Vec::new();
    for family in &families {
        let none_name = family.to_string();
        for mode in [TemperatureMode::Forecast, TemperatureMode::Actual] {
            let with = family.with_temperature(mode)?;
            let with_name = with.to_string();
            let (mut none_mape, mut mode_mape) = (Vec::new(), Vec::new());
            let (mut cells, mut rejections) = (0usize, 0usize);
            for d in data {
                let (Some(a), Some(b)) = (report.run(d.id(), &none_name), report.run(d.id(), &with_name)) else {
                    continue;
                };
                let (Some(ma), Some(mb)) = (
                    report.value(d.id(), &none_name, METRIC_MAPE, "all"),
                    report.value(d.id(), &with_name, METRIC_MAPE, "all"),
                ) else {
                    continue;
                };
                none_mape.push(ma);
                mode_mape.push(mb);
                let halves = origin_halves(config.seed, d.id(), a.forecasts.len());
                let mut by_hour: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
                for (k, hour, e) in next_day_errors(a, d) {
                    if !halves[hour - 1][k] {
                        by_hour.entry(hour).or_default().0.push(e);
                    }
                }
                for (k, hour, e) in next_day_errors(b, d) {
                    if halves[hour - 1][k] {
                        by_hour.entry(hour).or_default().1.push(e);
                    }
                }
                for (hour, (x, y)) in by_hour {
                    let Ok(r) = metrics::ks_two_sample(&x, &y) else { continue };
                    cells += 1;
                    let rejects = r.rejects(KS_ALPHA);
                    rejections += usize::from(rejects);
                    ks.push(KsCell {
                        feeder: d.id().to_string(),
                        method: family.base_name(),
                        mode,
                        hour,
                        statistic: r.statistic,
                        p_value: r.p_value,
                        rejects,
                    });
                }
            }
            if none_mape.is_empty() {
                continue;
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            summary.push(SweepSummary {
                method: family.base_name(),
                mode,
                mape_none: mean(&none_mape),
                mape_mode: mean(&mode_mape),
                cells,
                rejections,
            });
        }
    }
    Ok(TemperatureSweep { report, ks, summary })
}

/// Power law of error against mean daily demand, with outlying feeders.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingAnalysis {
    /// Fit to every feeder.
    pub fit_all: PowerLaw,
    /// Fit after removing the outliers (equal to `fit_all` when there are none).
    pub fit: PowerLaw,
    /// Log residuals from `fit_all`, in input order.
    pub residuals: Vec<(String, f64)>,
    pub residual_sd: f64,
    pub outliers: Vec<String>,
}

/// Fits `ln(error)` against `ln(demand)` over `(feeder, demand, error)`
/// triples and flags feeders whose absolute log residual exceeds twice the
/// residual standard deviation. The returned `fit` is refitted without them.
pub fn scaling_analysis(points: &[(String, f64, f64)]) -> Result<ScalingAnalysis> {
    if points.len() < 3 {
        return Err(invalid("scaling analysis needs at least 3 feeders"));
    }
    let demand: Vec<f64> = points.iter().map(|p| p.1).collect();
    let error: Vec<f64> = points.iter().map(|p| p.2).collect();
    let fit_all = metrics::power_law_fit(&demand, &error)?;
    let residuals: Vec<(String, f64)> = points
        .iter()
        .map(|(id, d, e)| (id.clone(), e.ln() - fit_all.predict(*d).ln()))
        .collect();
    let ssr: f64 = residuals.iter().map(|r| r.1 * r.1).sum();
    let residual_sd = (ssr / (points.len() - 2).max(1) as f64).sqrt();
    let outliers: Vec<String> = residuals
        .iter()
        .filter(|r| r.1.abs() > 2.0 * residual_sd)
        .map(|r| r.0.clone())
        .collect();
    let inliers: Vec<usize> = (0..points.len()).filter(|&i| !outliers.contains(&points[i].0)).collect();
    let fit = if outliers.is_empty() || inliers.len() < 3 {
        fit_all
    } else {
        let d: Vec<f64> = inliers.iter().map(|&i| demand[i]).collect();
        let e: Vec<f64> = inliers.iter().map(|&i| error[i]).collect();
        metrics::power_law_fit(&d, &e)?
    };
    Ok(ScalingAnalysis { fit_all, fit, residuals, residual_sd, outliers })
}
