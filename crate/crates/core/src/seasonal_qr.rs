//! Seasonal quantile regression (ST with a per-hour linear trend, SnT without).
//!
//! Every hour of the day carries its own trend, `P` annual harmonic pairs and
//! optional temperature polynomial, and every period of the week has its own
//! dummy. The 24 hour-of-day intercepts of the textbook form are dropped
//! because the week dummies already span them.
//!
//! Because each row only touches the columns of its own hour, the pinball
//! problem splits into 24 independent blocks of `1 + 2P + 7 (+3)` columns.
//! Fits run per block along the whole τ grid with a warm-started simplex.

use std::f64::consts::PI;

use crate::calendar::{self, HORIZONS, HOURS_PER_DAY, HOURS_PER_WEEK};
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::lp::{quantile_regression, quantile_regression_path};
use crate::series::{validate_taus, LoadSeries, QuantileForecast, SplitSpec, TemperatureData, TemperatureMode};

/// Length of the annual cycle in days used by the harmonic terms.
pub const YEAR_DAYS: f64 = 365.0;
/// Temperature polynomial degree.
pub const TEMP_DEGREE: usize = 3;

/// Minimum training history.
pub const MIN_HISTORY_WEEKS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct StDesignSpec {
    /// Number of annual harmonic pairs `P`.
    pub order: usize,
    pub trend: bool,
    pub temperature: TemperatureMode,
    pub taus: Vec<f64>,
}

impl StDesignSpec {
    /// ST: trend plus three harmonic pairs.
    pub fn st(taus: Vec<f64>) -> Self {
        Self {
            order: 3,
            trend: true,
            temperature: TemperatureMode::None,
            taus,
        }
    }

    /// SnT: as ST without the trend.
    pub fn snt(taus: Vec<f64>) -> Self {
        Self {
            trend: false,
            ..Self::st(taus)
        }
    }

    pub fn with_temperature(mut self, mode: TemperatureMode) -> Self {
        self.temperature = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.order) {
            return Err(invalid(format!("seasonal order must be 2 or 3, got {}", self.order)));
        }
        validate_taus(&self.taus)
    }

    fn uses_temperature(&self) -> bool {
        self.temperature != TemperatureMode::None
    }

    /// Columns owned by one hour of the day, excluding the week dummies.
    fn hour_width(&self) -> usize {
        usize::from(self.trend) + 2 * self.order
    }

    fn temp_width(&self) -> usize {
        if self.uses_temperature() {
            TEMP_DEGREE
        } else {
            0
        }
    }

    /// Total number of design columns.
    pub fn width(&self) -> usize {
        HOURS_PER_DAY * (self.hour_width() + self.temp_width()) + HOURS_PER_WEEK
    }

    /// Global column indices of the block serving hour `k` (1..=24), in
    /// block order: trend, harmonics, the 7 week dummies of that hour,
    /// temperature powers.
    fn block_columns(&self, k: usize) -> Vec<usize> {
        let hw = self.hour_width();
        let trend_cols = if self.trend { HOURS_PER_DAY } else { 0 };
        let mut cols = Vec::with_capacity(hw + 7 + self.temp_width());
        if self.trend {
            cols.push(k - 1);
        }
        let harm0 = trend_cols + (k - 1) * 2 * self.order;
        cols.extend(harm0..harm0 + 2 * self.order);
        let dummy0 = trend_cols + HOURS_PER_DAY * 2 * self.order;
        cols.extend((0..7).map(|j| dummy0 + k - 1 + HOURS_PER_DAY * j));
        let temp0 = dummy0 + HOURS_PER_WEEK + (k - 1) * self.temp_width();
        cols.extend(temp0..temp0 + self.temp_width());
        cols
    }

    /// Values of the block columns at time `t`, matching [`Self::block_columns`].
    fn block_row(&self, t: usize, eta_center: f64, temp: Option<f64>) -> Result<Vec<f64>> {
        let eta = calendar::day_index(t) as f64;
        let mut row = Vec::with_capacity(self.hour_width() + 7 + self.temp_width());
        if self.trend {
            row.push(eta - eta_center);
        }
        for p in 1..=self.order {
            let arg = 2.0 * PI * p as f64 * eta / YEAR_DAYS;
            row.push(arg.sin());
            row.push(arg.cos());
        }
        let day_of_week = (calendar::period_of_week(t) - 1) / HOURS_PER_DAY;
        row.extend((0..7).map(|j| if j == day_of_week { 1.0 } else { 0.0 }));
        if self.uses_temperature() {
            let temp = temp
                .filter(|v| v.is_finite())
                .ok_or_else(|| invalid(format!("missing temperature at index {t}")))?;
            row.extend([temp, temp * temp, temp * temp * temp]);
        }
        Ok(row)
    }
}

/// Full design rows for `times`.
///
/// Columns: per-hour trends (if any), per-hour harmonic pairs, the 168 week
/// dummies, then per-hour temperature powers `T, T², T³` (if any). The trend
/// regressor is the day index minus `eta_center`. `temps` must be given, one
/// value per time, exactly when the design uses temperature.
pub fn build_st_design(times: &[usize], spec: &StDesignSpec, temps: Option<&[f64]>, eta_center: f64) -> Result<Matrix> {
    spec.validate()?;
    match (spec.uses_temperature(), temps) {
        (true, None) => return Err(invalid("temperature inputs required by the design")),
        (false, Some(_)) => return Err(invalid("temperature inputs given to a design without temperature")),
        (true, Some(v)) if v.len() != times.len() => {
            return Err(invalid("one temperature value is needed per time"));
        }
        _ => {}
    }
    let mut x = Matrix::zeros(times.len(), spec.width());
    for (i, &t) in times.iter().enumerate() {
        if t == 0 {
            return Err(invalid("time indices are 1-based"));
        }
        let row = spec.block_row(t, eta_center, temps.map(|v| v[i]))?;
        let cols = spec.block_columns(calendar::hour_of_day(t));
        let out = x.row_mut(i);
        for (c, v) in cols.into_iter().zip(row) {
            out[c] = v;
        }
    }
    Ok(x)
}

/// Pinball-loss coefficients for a single τ (minimum-norm among ties).
pub fn fit_pinball(x: &Matrix, y: &[f64], tau: f64) -> Result<Vec<f64>> {
    Ok(quantile_regression(x, y, tau, None)?.beta)
}

/// Coefficients for one temperature variant: `coefficients[τ][column]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StVariant {
    pub coefficients: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StModel {
    pub spec: StDesignSpec,
    /// Trend centre (training midpoint in days).
    pub eta_center: f64,
    /// Last index used in training.
    pub end: usize,
    /// One variant without temperature or with actual temperatures; four
    /// day-ahead variants with forecast temperatures.
    pub variants: Vec<StVariant>,
}

impl StModel {
    /// Variant serving day-ahead bucket `d` (1..=4).
    pub fn variant(&self, d: usize) -> &StVariant {
        &self.variants[(d - 1).min(self.variants.len() - 1)]
    }

    /// Quantiles (unsorted, one per τ) at time `t` from variant `d`.
    pub fn predict_at(&self, t: usize, temp: Option<f64>, d: usize) -> Result<Vec<f64>> {
        let row = self.spec.block_row(t, self.eta_center, temp)?;
        let cols = self.spec.block_columns(calendar::hour_of_day(t));
        Ok(self
            .variant(d)
            .coefficients
            .iter()
            .map(|beta| cols.iter().zip(&row).map(|(&c, v)| beta[c] * v).sum())
            .collect())
    }

    /// Copy of the model with every trend coefficient set to zero.
    pub fn without_trend(&self) -> Self {
        let mut out = self.clone();
        if self.spec.trend {
            for variant in &mut out.variants {
                for beta in &mut variant.coefficients {
                    beta[..HOURS_PER_DAY].iter_mut().for_each(|b| *b = 0.0);
                }
            }
        }
        out
    }
}

/// Fits on all history up to the forecast origin of the first test day.
pub fn fit_st(series: &LoadSeries, spec: &StDesignSpec, split: &SplitSpec, temps: Option<&TemperatureData>) -> Result<StModel> {
    split.validate()?;
    let end = calendar::origin_index(split.test_days[0]).min(series.len());
    fit_st_until(series, spec, end, temps)
}

/// Fits on indices `1..=end`.
pub fn fit_st_until(series: &LoadSeries, spec: &StDesignSpec, end: usize, temps: Option<&TemperatureData>) -> Result<StModel> {
    spec.validate()?;
    let end = end.min(series.len());
    if end < MIN_HISTORY_WEEKS * HOURS_PER_WEEK {
        return Err(Error::InsufficientData {
            required: MIN_HISTORY_WEEKS * HOURS_PER_WEEK,
            actual: end,
        });
    }
    let temps = match spec.temperature {
        TemperatureMode::None => None,
        _ => Some(temps.ok_or_else(|| invalid("temperature data required"))?),
    };
    let eta_center = (1.0 + calendar::day_index(end) as f64) / 2.0;
    let n_variants = if spec.temperature == TemperatureMode::Forecast { 4 } else { 1 };
    let variants = (1..=n_variants)
        .map(|d| fit_variant(series, spec, end, temps, d, eta_center))
        .collect::<Result<Vec<_>>>()?;
    Ok(StModel {
        spec: spec.clone(),
        eta_center,
        end,
        variants,
    })
}

fn fit_variant(
    series: &LoadSeries,
    spec: &StDesignSpec,
    end: usize,
    temps: Option<&TemperatureData>,
    d: usize,
    eta_center: f64,
) -> Result<StVariant> {
    let mut coefficients = vec![vec![0.0; spec.width()]; spec.taus.len()];
    for k in 1..=HOURS_PER_DAY {
        let cols = spec.block_columns(k);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut y = Vec::new();
        for t in (k..=end).step_by(HOURS_PER_DAY) {
            if !series.is_observed(t) {
                continue;
            }
            let temp = temps.and_then(|td| td.training_input(spec.temperature, t, d));
            if spec.uses_temperature() && temp.is_none() {
                continue;
            }
            rows.push(spec.block_row(t, eta_center, temp)?);
            y.push(series.value(t));
        }
        if y.is_empty() {
            return Err(Error::InsufficientData { required: 1, actual: 0 });
        }
        // drop columns that never vary from zero, rescale the rest to unit
        // max-abs so temperature powers stay well conditioned
        let width = cols.len();
        let scales: Vec<f64> = (0..width)
            .map(|j| rows.iter().map(|r| r[j].abs()).fold(0.0, f64::max))
            .collect();
        let keep: Vec<usize> = (0..width).filter(|&j| scales[j] > 0.0).collect();
        let mut x = Matrix::zeros(y.len(), keep.len());
        for (i, r) in rows.iter().enumerate() {
            let out = x.row_mut(i);
            for (o, &j) in out.iter_mut().zip(&keep) {
                *o = r[j] / scales[j];
            }
        }
        let fits = quantile_regression_path(&x, &y, &spec.taus)?;
        for (beta, fit) in coefficients.iter_mut().zip(fits) {
            for (&j, b) in keep.iter().zip(fit.beta) {
                beta[cols[j]] = b / scales[j];
            }
        }
    }
    Ok(StVariant { coefficients })
}

/// Quantile forecast for horizons `1..=96` after `origin`, rearranged so
/// every row is non-decreasing in τ.
pub fn predict_st(model: &StModel, origin: usize, temps: Option<&TemperatureData>) -> Result<QuantileForecast> {
    if origin == 0 {
        return Err(invalid("origin must be a 1-based index"));
    }
    let day = calendar::day_index(origin);
    let mut values = Vec::with_capacity(HORIZONS);
    for h in 1..=HORIZONS {
        let t = origin + h;
        let temp = match model.spec.temperature {
            TemperatureMode::None => None,
            mode => {
                let td = temps.ok_or_else(|| invalid("temperature data required"))?;
                Some(
                    td.forecast_input(mode, day, t)
                        .ok_or_else(|| invalid(format!("no temperature input for index {t} at origin {origin}")))?,
                )
            }
        };
        values.push(model.predict_at(t, temp, calendar::horizon_day(h))?);
    }
    QuantileForecast::rearranged(origin, model.spec.taus.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use crate::lp::pinball_objective;
    use chrono::NaiveDate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::collections::BTreeMap;

    fn series(values: Vec<f64>) -> LoadSeries {
        let start = NaiveDate::from_ymd_opt(2014, 3, 17).unwrap().and_hms_opt(0, 0, 0).unwrap();
        LoadSeries::observed("q", start, values).unwrap()
    }

    fn profile(t: usize) -> f64 {
        let w = calendar::period_of_week(t) as f64;
        5.0 + 2.0 * (w * 0.21).sin() + (calendar::hour_of_day(t) as f64 / 4.0).cos()
    }

    #[test]
    fn column_count_and_sparsity() {
        let spec = StDesignSpec::st(vec![0.5]);
        let x = build_st_design(&[1, 50, 1000], &spec, None, 0.0).unwrap();
        assert_eq!(x.cols(), 24 + 24 * 6 + 168);
        for i in 0..3 {
            let nz = x.row(i).iter().filter(|v| **v != 0.0).count();
            assert!(nz <= 8, "{nz} nonzeros");
        }
    }

    #[test]
    fn temperature_columns_hold_powers() {
        let spec = StDesignSpec::snt(vec![0.5]).with_temperature(TemperatureMode::Actual);
        let t = 30;
        let x = build_st_design(&[t], &spec, Some(&[10.0]), 0.0).unwrap();
        let k = calendar::hour_of_day(t);
        let base = 24 * 6 + 168 + (k - 1) * 3;
        assert_eq!(&x.row(0)[base..base + 3], &[10.0, 100.0, 1000.0]);
        assert!(build_st_design(&[t], &spec, None, 0.0).is_err());
        assert!(build_st_design(&[t], &spec, Some(&[f64::NAN]), 0.0).is_err());
    }

    #[test]
    fn one_week_apart_differs_only_through_eta() {
        let spec = StDesignSpec::st(vec![0.5]);
        let x = build_st_design(&[100, 268], &spec, None, 0.0).unwrap();
        let (a, b) = (x.row(0), x.row(1));
        // dummy block identical
        let dummy0 = 24 + 24 * 6;
        assert_eq!(&a[dummy0..], &b[dummy0..]);
        // trend differs by exactly 7 days
        let k = calendar::hour_of_day(100) - 1;
        assert_eq!(b[k] - a[k], 7.0);
        // harmonics follow the day index
        let eta = calendar::day_index(268) as f64;
        assert!((b[24 + 6 * k] - (2.0 * PI * eta / 365.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn zeroed_trend_matches_snt_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let st = StDesignSpec::st(vec![0.5]);
        let snt = StDesignSpec::snt(vec![0.5]);
        let times: Vec<usize> = (0..50).map(|_| rng.random_range(1..20_000)).collect();
        let xs = build_st_design(&times, &st, None, 123.5).unwrap();
        let xn = build_st_design(&times, &snt, None, 0.0).unwrap();
        let beta_n: Vec<f64> = (0..snt.width()).map(|_| rng.random::<f64>()).collect();
        let mut beta_s = vec![0.0; 24];
        beta_s.extend(&beta_n);
        for i in 0..times.len() {
            assert_eq!(dot(xs.row(i), &beta_s), dot(xn.row(i), &beta_n));
        }
    }

    #[test]
    fn pinball_median_and_lower_endpoint() {
        let ones = |n| Matrix::from_vec(n, 1, vec![1.0; n]).unwrap();
        assert!((fit_pinball(&ones(5), &[1.0, 2.0, 3.0, 4.0, 5.0], 0.5).unwrap()[0] - 3.0).abs() < 1e-12);
        let y: Vec<f64> = (1..=10).map(f64::from).collect();
        let b = fit_pinball(&ones(10), &y, 0.9).unwrap()[0];
        assert!((b - 9.0).abs() < 1e-9);
        // brute-force scan of the objective agrees
        let scan_min = (0..=10_000)
            .map(|i| pinball_objective(&ones(10), &y, &[i as f64 * 0.001], 0.9))
            .fold(f64::INFINITY, f64::min);
        assert!(pinball_objective(&ones(10), &y, &[b], 0.9) <= scan_min + 1e-9);
    }

    #[test]
    fn median_regression_is_close_to_ols_under_gaussian_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let mut x = Matrix::zeros(n, 2);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let u: f64 = rng.random::<f64>() * 4.0;
            x.set(i, 0, 1.0);
            x.set(i, 1, u);
            let e: f64 = StandardNormal.sample(&mut rng);
            y[i] = 1.5 - 0.7 * u + e;
        }
        let ols = crate::ar::ols_fit(&x, &y).unwrap();
        let b = fit_pinball(&x, &y, 0.5).unwrap();
        for j in 0..2 {
            assert!((b[j] - ols[j]).abs() < 0.05, "{b:?} vs {ols:?}");
        }
        let obj = pinball_objective(&x, &y, &b, 0.5);
        assert!(obj <= pinball_objective(&x, &y, &ols, 0.5) + 1e-9);
        assert!(obj <= pinball_objective(&x, &y, &[0.0, 0.0], 0.5));
    }

    #[test]
    fn noiseless_weekly_signal_is_reproduced() {
        let s = series((1..=10 * 168).map(profile).collect());
        for spec in [StDesignSpec::st(vec![0.1, 0.5, 0.9]), StDesignSpec::snt(vec![0.5])] {
            let model = fit_st_until(&s, &spec, s.len(), None).unwrap();
            for t in [5, 300, 1000, s.len()] {
                for q in model.predict_at(t, None, 1).unwrap() {
                    assert!((q - s.value(t)).abs() < 1e-6, "t={t}: {q} vs {}", s.value(t));
                }
            }
        }
    }

    #[test]
    fn trend_is_tracked_by_st_and_missed_by_snt() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let days = 730 + 14;
        let values: Vec<f64> = (1..=days * 24)
            .map(|t| profile(t) + 0.01 * calendar::day_index(t) as f64 + 0.05 * rng.random::<f64>())
            .collect();
        let s = series(values);
        let split = SplitSpec::from_days(731, 14).unwrap();
        let taus = vec![0.5];
        let st = fit_st(&s, &StDesignSpec::st(taus.clone()), &split, None).unwrap();
        let snt = fit_st(&s, &StDesignSpec::snt(taus), &split, None).unwrap();
        let (mut gap_st, mut gap_snt, mut n) = (0.0, 0.0, 0.0);
        for t in calendar::day_start(731)..=s.len() {
            let truth = profile(t) + 0.01 * calendar::day_index(t) as f64 + 0.025;
            gap_st += truth - st.predict_at(t, None, 1).unwrap()[0];
            gap_snt += truth - snt.predict_at(t, None, 1).unwrap()[0];
            n += 1.0;
        }
        let (gap_st, gap_snt) = (gap_st / n, gap_snt / n);
        let half_trend = 0.5 * 0.01 * 14.0;
        assert!(gap_snt >= half_trend, "SnT lag {gap_snt}");
        assert!(gap_st.abs() < half_trend / 2.0, "ST gap {gap_st}");
    }

    #[test]
    fn interquartile_band_covers_half_out_of_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let train_days = 365;
        let test_hours = 10_000;
        let total = train_days * 24 + test_hours;
        let values: Vec<f64> = (1..=total)
            .map(|t| 5.0 + profile(t) + Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        let s = series(values);
        let model = fit_st_until(&s, &StDesignSpec::snt(vec![0.25, 0.5, 0.75]), train_days * 24, None).unwrap();
        let inside = (train_days * 24 + 1..=total)
            .filter(|&t| {
                let q = model.predict_at(t, None, 1).unwrap();
                q[0] <= s.value(t) && s.value(t) <= q[2]
            })
            .count();
        let cov = inside as f64 / test_hours as f64;
        assert!((cov - 0.5).abs() <= 0.03, "coverage {cov}");
    }

    #[test]
    fn fraction_below_fit_matches_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 16 * 168;
        let values: Vec<f64> = (1..=n).map(|t| profile(t) + 2.0 * rng.random::<f64>()).collect();
        let s = series(values);
        let taus = vec![0.1, 0.5, 0.8];
        let spec = StDesignSpec::st(taus.clone());
        let model = fit_st_until(&s, &spec, n, None).unwrap();
        let k = spec.width() as f64;
        for (i, tau) in taus.iter().enumerate() {
            let below = (1..=n)
                .filter(|&t| s.value(t) < model.predict_at(t, None, 1).unwrap()[i] - 1e-9)
                .count() as f64;
            let frac = below / n as f64;
            assert!((frac - tau).abs() <= k / n as f64 + 1e-9, "tau {tau}: {frac}");
        }
    }

    fn temperature_data(len: usize, days: usize, same_as_actual: bool, rng: &mut ChaCha8Rng) -> TemperatureData {
        let actual: Vec<f64> = (1..=len)
            .map(|t| 10.0 + 6.0 * (t as f64 * 2.0 * PI / 24.0).sin() + rng.random::<f64>())
            .collect();
        let mut forecasts = BTreeMap::new();
        for day in 1..=days {
            let o = calendar::origin_index(day);
            let v: Vec<f64> = (1..=HORIZONS)
                .map(|h| {
                    let a = actual.get(o + h - 1).copied().unwrap_or(10.0);
                    if same_as_actual {
                        a
                    } else {
                        a + 0.5 * rng.random::<f64>()
                    }
                })
                .collect();
            forecasts.insert(day, v);
        }
        TemperatureData::new(actual, forecasts).unwrap()
    }

    #[test]
    fn identical_temperatures_give_identical_ex_ante_and_ex_post_forecasts() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let days = 70;
        let len = days * 24;
        let temps = temperature_data(len, days, true, &mut rng);
        let values: Vec<f64> = (1..=len)
            .map(|t| profile(t) + 0.1 * (15.0 - temps.actual[t - 1]).max(0.0) + 0.3 * rng.random::<f64>())
            .collect();
        // the first days have no vintage for every day-ahead bucket; masking
        // them gives both modes the same training rows
        let mask: Vec<bool> = (1..=len).map(|t| t > 5 * 24).collect();
        let start = NaiveDate::from_ymd_opt(2014, 3, 17).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let s = LoadSeries::new("q", start, values, mask).unwrap();
        let taus = vec![0.1, 0.5, 0.9];
        let split = SplitSpec::from_days(days - 5, 4).unwrap();
        let ante = fit_st(&s, &StDesignSpec::snt(taus.clone()).with_temperature(TemperatureMode::Forecast), &split, Some(&temps)).unwrap();
        let post = fit_st(&s, &StDesignSpec::snt(taus).with_temperature(TemperatureMode::Actual), &split, Some(&temps)).unwrap();
        assert_eq!(ante.variants.len(), 4);
        let origin = calendar::origin_index(split.test_days[0]);
        let fa = predict_st(&ante, origin, Some(&temps)).unwrap();
        let fp = predict_st(&post, origin, Some(&temps)).unwrap();
        assert_eq!(fa, fp);
        assert!(predict_st(&ante, origin, None).is_err());
    }

    #[test]
    fn predictions_are_rearranged() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 9 * 168;
        let values: Vec<f64> = (1..=n).map(|t| profile(t) + 3.0 * rng.random::<f64>()).collect();
        let s = series(values);
        let spec = StDesignSpec::st(crate::series::percentile_grid());
        let model = fit_st_until(&s, &spec, n - 100, None).unwrap();
        let f = predict_st(&model, n - 100, None).unwrap();
        for row in f.rows() {
            assert!(row.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
