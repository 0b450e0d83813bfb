//! Series containers, forecast representations and normalization.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};

use crate::calendar::{self, HORIZONS, HOURS_PER_DAY};
use crate::error::{invalid, Error, Result};

/// Hourly load observations for one feeder.
///
/// Index `t` (1-based) covers the hour starting at `start + (t - 1)` hours. The
/// series always starts at midnight so that calendar periods derived from the
/// index agree with the wall clock.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSeries {
    feeder_id: String,
    start: NaiveDateTime,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl LoadSeries {
    pub fn new(
        feeder_id: impl Into<String>,
        start: NaiveDateTime,
        values: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("load series must contain at least one value"));
        }
        if mask.len() != values.len() {
            return Err(invalid(format!(
                "mask length {} differs from values length {}",
                mask.len(),
                values.len()
            )));
        }
        if start.minute() != 0 || start.second() != 0 || start.nanosecond() != 0 {
            return Err(invalid("series start must align to a whole hour"));
        }
        if start.hour() != 0 {
            return Err(invalid("series start must be at 00:00"));
        }
        for (i, (&v, &m)) in values.iter().zip(&mask).enumerate() {
            if !v.is_finite() {
                return Err(invalid(format!("non-finite load at index {}", i + 1)));
            }
            if m && v < 0.0 {
                return Err(invalid(format!("negative load at index {}", i + 1)));
            }
        }
        Ok(Self {
            feeder_id: feeder_id.into(),
            start,
            values,
            mask,
        })
    }

    /// Convenience constructor for fully observed series.
    pub fn observed(feeder_id: impl Into<String>, start: NaiveDateTime, values: Vec<f64>) -> Result<Self> {
        let mask = vec![true; values.len()];
        Self::new(feeder_id, start, values, mask)
    }

    pub fn feeder_id(&self) -> &str {
        &self.feeder_id
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start.date()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Load at 1-based index `t`.
    pub fn value(&self, t: usize) -> f64 {
        self.values[t - 1]
    }

    pub fn is_observed(&self, t: usize) -> bool {
        self.mask[t - 1]
    }

    pub fn timestamp(&self, t: usize) -> NaiveDateTime {
        self.start + Duration::hours(t as i64 - 1)
    }

    pub fn date_of(&self, t: usize) -> NaiveDate {
        self.timestamp(t).date()
    }

    /// Number of complete days in the series.
    pub fn days(&self) -> usize {
        self.values.len() / HOURS_PER_DAY
    }

    /// 1-based day index of a calendar date, if the date lies inside the series.
    pub fn day_of_date(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start.date()).num_days();
        if offset < 0 || (offset as usize) * HOURS_PER_DAY >= self.values.len() {
            return None;
        }
        Some(offset as usize + 1)
    }

    /// Copy of the series truncated after index `end` (inclusive).
    pub fn truncated(&self, end: usize) -> Self {
        let end = end.min(self.values.len());
        Self {
            feeder_id: self.feeder_id.clone(),
            start: self.start,
            values: self.values[..end].to_vec(),
            mask: self.mask[..end].to_vec(),
        }
    }

    /// Same series with every value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            feeder_id: self.feeder_id.clone(),
            start: self.start,
            values: self.values.iter().map(|v| v * c).collect(),
            mask: self.mask.clone(),
        }
    }

    /// Mean of the observed values in `[from, to]` (1-based, inclusive).
    pub fn observed_mean(&self, from: usize, to: usize) -> Option<f64> {
        let (mut sum, mut n) = (0.0, 0usize);
        for t in from.max(1)..=to.min(self.len()) {
            if self.is_observed(t) {
                sum += self.value(t);
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    }
}

/// Which temperature input a model receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum TemperatureMode {
    #[default]
    None,
    /// Ex-ante: the vintage issued at the forecast origin.
    Forecast,
    /// Ex-post: observed temperatures.
    Actual,
}

impl TemperatureMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "forecast" => Ok(Self::Forecast),
            "actual" => Ok(Self::Actual),
            other => Err(invalid(format!("unknown temperature mode '{other}'"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Forecast => "forecast",
            Self::Actual => "actual",
        }
    }
}

/// Actual hourly temperatures plus daily 96-hour forecast vintages.
///
/// `actual[t - 1]` is aligned to the load clock. A vintage keyed by day `D`
/// (1-based on the load clock) holds forecasts for indices
/// `origin_index(D) + 1 ..= origin_index(D) + 96`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TemperatureData {
    pub actual: Vec<f64>,
    pub forecasts: BTreeMap<usize, Vec<f64>>,
}

impl TemperatureData {
    pub fn new(actual: Vec<f64>, forecasts: BTreeMap<usize, Vec<f64>>) -> Result<Self> {
        for (day, v) in &forecasts {
            if v.len() != HORIZONS {
                return Err(invalid(format!(
                    "forecast vintage for day {day} has {} entries, expected {HORIZONS}",
                    v.len()
                )));
            }
        }
        Ok(Self { actual, forecasts })
    }

    /// Observed temperature at `t`; gaps are stored as NaN and read as `None`.
    pub fn actual_at(&self, t: usize) -> Option<f64> {
        self.actual.get(t.checked_sub(1)?).copied().filter(|v| v.is_finite())
    }

    pub fn vintage(&self, day: usize) -> Option<&[f64]> {
        self.forecasts.get(&day).map(Vec::as_slice)
    }

    /// Forecast temperature for index `t` from the vintage issued on `day`.
    pub fn forecast_at(&self, day: usize, t: usize) -> Option<f64> {
        let origin = calendar::origin_index(day);
        let h = t.checked_sub(origin)?;
        if !(1..=HORIZONS).contains(&h) {
            return None;
        }
        self.vintage(day).map(|v| v[h - 1])
    }

    /// Forecast temperature for index `t` issued `days_ahead` (1..=4) day-ahead
    /// buckets earlier, i.e. from the unique vintage whose horizon for `t`
    /// falls in that bucket.
    pub fn forecast_days_ahead(&self, t: usize, days_ahead: usize) -> Option<f64> {
        // t - origin(D) ∈ [24(d-1)+1, 24d]  ⇔  D = day_index(t - ORIGIN_HOUR) - (d - 1)
        let shifted = t.checked_sub(calendar::ORIGIN_HOUR)?;
        if shifted == 0 {
            return None;
        }
        let day = calendar::day_index(shifted).checked_sub(days_ahead - 1)?;
        if day == 0 {
            return None;
        }
        self.forecast_at(day, t)
    }

    /// Temperature seen at training index `t` by the model serving the
    /// `days_ahead` bucket.
    pub fn training_input(&self, mode: TemperatureMode, t: usize, days_ahead: usize) -> Option<f64> {
        match mode {
            TemperatureMode::None => None,
            TemperatureMode::Actual => self.actual_at(t),
            TemperatureMode::Forecast => self.forecast_days_ahead(t, days_ahead),
        }
    }

    /// Temperature available for target index `t` at the origin of `day`.
    pub fn forecast_input(&self, mode: TemperatureMode, day: usize, t: usize) -> Option<f64> {
        match mode {
            TemperatureMode::None => None,
            TemperatureMode::Actual => self.actual_at(t),
            TemperatureMode::Forecast => self.forecast_at(day, t),
        }
    }
}

/// Predicted load quantiles for horizons `1..=H` over an ascending τ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileForecast {
    origin: usize,
    taus: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl QuantileForecast {
    /// Builds a forecast, rejecting crossing quantiles.
    pub fn new(origin: usize, taus: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        validate_taus(&taus)?;
        for (h, row) in values.iter().enumerate() {
            if row.len() != taus.len() {
                return Err(invalid(format!(
                    "horizon {} has {} quantiles, expected {}",
                    h + 1,
                    row.len(),
                    taus.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("non-finite quantile at horizon {}", h + 1)));
            }
            if row.windows(2).any(|w| w[1] < w[0]) {
                return Err(invalid(format!("quantiles cross at horizon {}", h + 1)));
            }
        }
        Ok(Self { origin, taus, values })
    }

    /// Builds a forecast after sorting every horizon's quantiles (rearrangement).
    pub fn rearranged(origin: usize, taus: Vec<f64>, mut values: Vec<Vec<f64>>) -> Result<Self> {
        for row in &mut values {
            row.sort_by(f64::total_cmp);
        }
        Self::new(origin, taus, values)
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn horizons(&self) -> usize {
        self.values.len()
    }

    /// Quantile row for horizon `h` (1-based).
    pub fn row(&self, h: usize) -> &[f64] {
        &self.values[h - 1]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Median column, interpolating between the grid points around τ = 0.5.
    pub fn median(&self) -> Vec<f64> {
        self.values.iter().map(|row| interpolate_tau(&self.taus, row, 0.5)).collect()
    }

    /// Applies `f` to every quantile value (used for denormalization).
    pub fn map_values(mut self, f: impl Fn(f64) -> f64) -> Self {
        for row in &mut self.values {
            for v in row.iter_mut() {
                *v = f(*v);
            }
        }
        self
    }
}

fn interpolate_tau(taus: &[f64], row: &[f64], tau: f64) -> f64 {
    match taus.binary_search_by(|x| x.total_cmp(&tau)) {
        Ok(i) => row[i],
        Err(0) => row[0],
        Err(i) if i == taus.len() => row[taus.len() - 1],
        Err(i) => {
            let w = (tau - taus[i - 1]) / (taus[i] - taus[i - 1]);
            row[i - 1] + w * (row[i] - row[i - 1])
        }
    }
}

pub fn validate_taus(taus: &[f64]) -> Result<()> {
    if taus.is_empty() {
        return Err(invalid("empty quantile grid"));
    }
    if taus.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(invalid("quantile levels must lie in (0, 1)"));
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("quantile levels must be strictly ascending"));
    }
    Ok(())
}

/// The 1st..99th percentile grid.
pub fn percentile_grid() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 100.0).collect()
}

/// Train/test partition on the hourly index.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    /// Last training index `t_h`; always the final hour of a day.
    pub train_end: usize,
    /// Contiguous 1-based test days, all after `train_end`.
    pub test_days: Vec<usize>,
    pub validation_weeks: usize,
}

impl SplitSpec {
    pub fn new(train_end: usize, test_days: Vec<usize>) -> Result<Self> {
        let split = Self {
            train_end,
            test_days,
            validation_weeks: 2,
        };
        split.validate()?;
        Ok(split)
    }

    /// Split whose training data ends the day before `first_test_day`.
    pub fn from_days(first_test_day: usize, n_test_days: usize) -> Result<Self> {
        if first_test_day < 2 {
            return Err(invalid("first test day must leave at least one training day"));
        }
        Self::new(
            calendar::day_end(first_test_day - 1),
            (first_test_day..first_test_day + n_test_days).collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_end == 0 || self.train_end % HOURS_PER_DAY != 0 {
            return Err(invalid("train_end must be the last hour of a day"));
        }
        if self.test_days.is_empty() {
            return Err(invalid("test period is empty"));
        }
        if self.test_days.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(invalid("test days must be contiguous"));
        }
        if calendar::day_start(self.test_days[0]) <= self.train_end {
            return Err(invalid("test days must follow the training period"));
        }
        Ok(())
    }

    /// Number of whole training days.
    pub fn train_days(&self) -> usize {
        self.train_end / HOURS_PER_DAY
    }
}

/// Affine min-max scaling record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMaxScale {
    pub lo: f64,
    pub hi: f64,
}

impl MinMaxScale {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(format!(
                "normalization range [{lo}, {hi}] is degenerate (constant series?)"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Range of the observed values among `values[..]` where `mask` is set.
    pub fn fit(values: &[f64], mask: &[bool]) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (&v, &m) in values.iter().zip(mask) {
            if m {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Self::new(lo, hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.lo) / (self.hi - self.lo)
    }

    pub fn denormalize(&self, z: f64) -> f64 {
        self.lo + z * (self.hi - self.lo)
    }
}

/// Normalizes a series with a training-derived range; values outside the range
/// are passed through unclipped.
pub fn minmax_normalize(series: &[f64], lo: f64, hi: f64) -> Result<(Vec<f64>, MinMaxScale)> {
    let scale = MinMaxScale::new(lo, hi)?;
    Ok((series.iter().map(|&x| scale.normalize(x)).collect(), scale))
}
