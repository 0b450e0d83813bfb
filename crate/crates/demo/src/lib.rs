//! Browser demo for `lvload`: a forecast fan chart on a synthetic feeder,
//! a CRPS explorer for Gaussian forecasts, and weekly load profiles.
//!
//! The exported functions return flat `Float64Array`s; the layouts are
//! documented on each function and unpacked by `www/index.html`.

use chrono::NaiveDate;
use lvload::calendar::{self, HORIZONS, HOURS_PER_WEEK};
use lvload::harness::{run_method, FeederData, MethodSpec};
use lvload::ingest::{generate_synthetic_feeder, SynthConfig};
use lvload::metrics::crps_from_quantiles;
use lvload::series::percentile_grid;
use lvload::{SplitSpec, TemperatureMode};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use wasm_bindgen::prelude::*;

/// Quantile levels drawn as fan bands.
pub const FAN_TAUS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Methods the fan chart accepts.
pub const FAN_METHODS: [&str; 6] = ["KDE-W", "KDE-WL", "CKD-W", "HWT", "ST", "SnT"];

#[derive(Debug, Clone, PartialEq)]
pub struct Fan {
    pub actual: Vec<f64>,
    pub point: Vec<f64>,
    /// One row per entry of [`FAN_TAUS`], each of length 96.
    pub bands: Vec<Vec<f64>>,
    pub mean_crps: f64,
    pub mae: f64,
}

impl Fan {
    /// `actual[96] ++ point[96] ++ bands[5][96] ++ [mean_crps, mae]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(7 * HORIZONS + 2);
        out.extend(&self.actual);
        out.extend(&self.point);
        for b in &self.bands {
            out.extend(b);
        }
        out.push(self.mean_crps);
        out.push(self.mae);
        out
    }
}

/// Fits `method` on a synthetic feeder and forecasts the 96 hours after the
/// morning origin of `test_day`.
pub fn fan(method: &str, customers: usize, seed: u64, test_day: usize) -> Result<Fan, String> {
    if !FAN_METHODS.contains(&method) {
        return Err(format!("method must be one of {}", FAN_METHODS.join(", ")));
    }
    if !(60..=400).contains(&test_day) {
        return Err("test day must be between 60 and 400".into());
    }
    let spec = MethodSpec::parse(method, TemperatureMode::None).map_err(|e| e.to_string())?;
    let cfg = SynthConfig { feeder_id: "demo".into(), n_customers: customers, days: test_day + 4, seed, ..SynthConfig::default() };
    let (series, temps) = generate_synthetic_feeder(&cfg).map_err(|e| e.to_string())?;
    let data = FeederData { series, temps: Some(temps) };
    let split = SplitSpec::from_days(test_day, 1).map_err(|e| e.to_string())?;
    let taus = percentile_grid();
    let run = run_method(&data, &spec, &split, &taus, seed).map_err(|e| e.to_string())?;
    let f = &run.forecasts[0];
    let q = f.quantiles.as_ref().ok_or("method issued no quantiles")?;
    let origin = calendar::origin_index(test_day);
    let actual: Vec<f64> = (1..=HORIZONS).map(|h| data.series.value(origin + h)).collect();
    let band_cols: Vec<usize> = FAN_TAUS.iter().map(|t| (t * 100.0).round() as usize - 1).collect();
    let bands = band_cols.iter().map(|&c| (1..=HORIZONS).map(|h| q.row(h)[c]).collect()).collect();
    let mut crps = 0.0;
    for h in 1..=HORIZONS {
        crps += crps_from_quantiles(actual[h - 1], q.row(h), &taus).map_err(|e| e.to_string())?;
    }
    let mae = actual.iter().zip(&f.point).map(|(a, p)| (a - p).abs()).sum::<f64>() / HORIZONS as f64;
    Ok(Fan { actual, point: f.point.clone(), bands, mean_crps: crps / HORIZONS as f64, mae })
}

/// CRPS of a Gaussian forecast `N(mu, sigma²)` at `actual`: returns
/// `[from 99 quantiles, closed form, |actual − mu|]`.
pub fn crps_gaussian(actual: f64, mu: f64, sigma: f64) -> Result<[f64; 3], String> {
    let dist = Normal::new(mu, sigma).map_err(|e| e.to_string())?;
    let taus = percentile_grid();
    let row: Vec<f64> = taus.iter().map(|&t| dist.inverse_cdf(t)).collect();
    let from_quantiles = crps_from_quantiles(actual, &row, &taus).map_err(|e| e.to_string())?;
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let z = (actual - mu) / sigma;
    let closed = sigma * (z * (2.0 * std.cdf(z) - 1.0) + 2.0 * std.pdf(z) - 1.0 / std::f64::consts::PI.sqrt());
    Ok([from_quantiles, closed, (actual - mu).abs()])
}

/// Mean load per customer by hour of the week over eight winter weeks.
pub fn weekly_profile(customers: usize, osh_fraction: f64, seed: u64) -> Result<Vec<f64>, String> {
    let weeks = 8;
    let cfg = SynthConfig {
        feeder_id: "profile".into(),
        n_customers: customers,
        days: 7 * weeks,
        seed,
        osh_fraction,
        start: NaiveDate::from_ymd_opt(2014, 1, 6).expect("valid date"),
        ..SynthConfig::default()
    };
    let (series, _) = generate_synthetic_feeder(&cfg).map_err(|e| e.to_string())?;
    let mut sums = vec![0.0; HOURS_PER_WEEK];
    for t in 1..=weeks * HOURS_PER_WEEK {
        sums[(t - 1) % HOURS_PER_WEEK] += series.value(t);
    }
    Ok(sums.into_iter().map(|s| s / (weeks * customers) as f64).collect())
}

#[wasm_bindgen(js_name = fanChart)]
pub fn fan_chart(method: &str, customers: usize, seed: u32, test_day: usize) -> Result<Vec<f64>, JsError> {
    fan(method, customers, u64::from(seed), test_day).map(|f| f.to_flat()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = crpsExplorer)]
pub fn crps_explorer(actual: f64, mu: f64, sigma: f64) -> Result<Vec<f64>, JsError> {
    crps_gaussian(actual, mu, sigma).map(|r| r.to_vec()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = weeklyProfile)]
pub fn weekly_profile_js(customers: usize, osh_fraction: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    weekly_profile(customers, osh_fraction, u64::from(seed)).map_err(|e| JsError::new(&e))
}
