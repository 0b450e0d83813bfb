//! Benchmark forecasters: seasonal random walks (LD, LW, LY), seasonal moving
//! averages (SMA-pW and SMA with a validated window) and the fixed empirical
//! distribution per week period.

use crate::calendar::{period_of_week, HOURS_PER_DAY, HOURS_PER_WEEK};
use crate::error::{invalid, Error, Result};
use crate::series::{validate_taus, LoadSeries, QuantileForecast, SplitSpec};

/// Intraday cycle.
pub const S_DAY: usize = HOURS_PER_DAY;
/// Intraweek cycle.
pub const S_WEEK: usize = HOURS_PER_WEEK;
/// Intrayear cycle, 52 weeks.
pub const S_YEAR: usize = 52 * HOURS_PER_WEEK;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkKind {
    LastDay,
    LastWeek,
    LastYear,
    /// Seasonal moving average over a fixed number of weeks.
    SmaP,
    /// Seasonal moving average with a per-feeder validated window.
    SmaOpt,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchmarkSpec {
    pub kind: BenchmarkKind,
    /// Window in weeks; only used by [`BenchmarkKind::SmaP`].
    pub p: usize,
}

impl BenchmarkSpec {
    pub fn new(kind: BenchmarkKind) -> Self {
        Self { kind, p: 4 }
    }

    pub fn sma(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(invalid("SMA window must be at least one week"));
        }
        Ok(Self {
            kind: BenchmarkKind::SmaP,
            p,
        })
    }
}

/// Seasonal random walk `L̂_{o+k} = L_{o+k−m·s}`.
///
/// `m = ⌈k/s⌉` is the smallest number of whole cycles that reaches back to data
/// available at the origin; for `k ≤ s` this is the usual one-cycle lag.
pub fn seasonal_walk(series: &LoadSeries, origin: usize, k: usize, cycle: usize) -> Result<f64> {
    if k == 0 || cycle == 0 {
        return Err(invalid("horizon and cycle must be positive"));
    }
    let cycles = k.div_ceil(cycle);
    let back = cycles * cycle;
    let t = (origin + k)
        .checked_sub(back)
        .filter(|&t| t >= 1)
        .ok_or(Error::InsufficientData {
            required: back - k + 1,
            actual: origin,
        })?;
    if t > series.len() || t > origin {
        return Err(Error::InsufficientData {
            required: t,
            actual: series.len().min(origin),
        });
    }
    if !series.is_observed(t) {
        return Err(invalid(format!("lagged value at index {t} is not observed")));
    }
    Ok(series.value(t))
}

/// Mean of the same week period over the previous `p` weeks, skipping
/// unobserved values.
pub fn sma(series: &LoadSeries, origin: usize, k: usize, p: usize) -> Result<f64> {
    if p == 0 {
        return Err(invalid("SMA window must be at least one week"));
    }
    let target = origin + k;
    let cycles = k.div_ceil(S_WEEK);
    let (mut sum, mut n) = (0.0, 0usize);
    for i in cycles..cycles + p {
        let Some(t) = target.checked_sub(i * S_WEEK).filter(|&t| t >= 1) else {
            break;
        };
        if t <= series.len() && t <= origin && series.is_observed(t) {
            sum += series.value(t);
            n += 1;
        }
    }
    if n == 0 {
        return Err(invalid(format!("no usable same-period values for index {target}")));
    }
    Ok(sum / n as f64)
}

/// Window length (weeks, 1..=12) minimizing the squared error of SMA-p over the
/// last 28 training days. Ties go to the smallest window.
pub fn sma_optimal_p(series: &LoadSeries, split: &SplitSpec) -> Result<usize> {
    const P_MAX: usize = 12;
    const HOLDOUT_DAYS: usize = 28;
    let end = split.train_end.min(series.len());
    let holdout_start = end.saturating_sub(HOLDOUT_DAYS * HOURS_PER_DAY) + 1;
    let required = (P_MAX + 5) * S_WEEK;
    if end < required {
        return Err(Error::InsufficientData {
            required,
            actual: end,
        });
    }
    let mut best = (f64::INFINITY, 1);
    for p in 1..=P_MAX {
        let mut sse = 0.0;
        for t in holdout_start..=end {
            if !series.is_observed(t) {
                continue;
            }
            // one step ahead: origin t − 1, horizon 1
            let f = sma(series, t - 1, 1, p)?;
            sse += (series.value(t) - f).powi(2);
        }
        if sse < best.0 {
            best = (sse, p);
        }
    }
    Ok(best.1)
}

/// Per-week-period empirical quantiles over the final training year, reused
/// unchanged for every test origin.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTemplate {
    taus: Vec<f64>,
    /// `slots[w - 1]` holds the quantiles of week period `w`.
    slots: Vec<Vec<f64>>,
}

impl EmpiricalTemplate {
    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn slot(&self, week_period: usize) -> &[f64] {
        &self.slots[week_period - 1]
    }

    pub fn forecast(&self, origin: usize, horizons: usize) -> Result<QuantileForecast> {
        let rows = (1..=horizons)
            .map(|h| self.slot(period_of_week(origin + h)).to_vec())
            .collect();
        QuantileForecast::new(origin, self.taus.clone(), rows)
    }
}

/// Linear interpolation between order statistics (Hyndman-Fan type 7).
pub fn type7_quantile(sorted: &[f64], tau: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * tau;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn empirical_forecast(series: &LoadSeries, split: &SplitSpec, taus: &[f64]) -> Result<EmpiricalTemplate> {
    validate_taus(taus)?;
    let end = split.train_end.min(series.len());
    let year = 365 * HOURS_PER_DAY;
    if end < year {
        return Err(Error::InsufficientData {
            required: year,
            actual: end,
        });
    }
    let mut by_slot: Vec<Vec<f64>> = vec![Vec::new(); S_WEEK];
    for t in end - year + 1..=end {
        if series.is_observed(t) {
            by_slot[period_of_week(t) - 1].push(series.value(t));
        }
    }
    let mut slots = Vec::with_capacity(S_WEEK);
    for (w, mut values) in by_slot.into_iter().enumerate() {
        if values.is_empty() {
            return Err(invalid(format!("week period {} has no observations", w + 1)));
        }
        values.sort_by(f64::total_cmp);
        slots.push(taus.iter().map(|&t| type7_quantile(&values, t)).collect());
    }
    Ok(EmpiricalTemplate {
        taus: taus.to_vec(),
        slots,
    })
}

/// Point forecasts for horizons `1..=horizons`; a horizon whose lagged inputs
/// are unavailable yields `NaN`.
pub fn point_forecast(
    spec: BenchmarkSpec,
    series: &LoadSeries,
    origin: usize,
    horizons: usize,
    sma_window: Option<usize>,
) -> Vec<f64> {
    (1..=horizons)
        .map(|k| {
            let v = match spec.kind {
                BenchmarkKind::LastDay => seasonal_walk(series, origin, k, S_DAY),
                BenchmarkKind::LastWeek => seasonal_walk(series, origin, k, S_WEEK),
                BenchmarkKind::LastYear => seasonal_walk(series, origin, k, S_YEAR),
                BenchmarkKind::SmaP => sma(series, origin, k, spec.p),
                BenchmarkKind::SmaOpt => sma(series, origin, k, sma_window.unwrap_or(spec.p)),
                BenchmarkKind::Empirical => Err(invalid("empirical forecasts come from a template")),
            };
            v.unwrap_or(f64::NAN)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::percentile_grid;
    use chrono::NaiveDate;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(values: Vec<f64>) -> LoadSeries {
        let start = NaiveDate::from_ymd_opt(2014, 1, 6).unwrap().and_hms_opt(0, 0, 0).unwrap();
        LoadSeries::observed("b", start, values).unwrap()
    }

    fn weekly(weeks: usize) -> Vec<f64> {
        (1..=weeks * S_WEEK)
            .map(|t| 10.0 + (period_of_week(t) as f64 * 0.37).sin() * 3.0 + (period_of_week(t) % 5) as f64)
            .collect()
    }

    #[test]
    fn last_day_index_arithmetic() {
        let s = series((1..=200).map(f64::from).collect());
        assert_eq!(seasonal_walk(&s, 100, 1, S_DAY).unwrap(), 77.0);
        // beyond one cycle, step back whole days
        assert_eq!(seasonal_walk(&s, 100, 30, S_DAY).unwrap(), 82.0);
    }

    #[test]
    fn last_week_exact_on_periodic_data() {
        let s = series(weekly(4));
        let origin = 3 * S_WEEK;
        let full = series(weekly(5));
        for k in 1..=96 {
            assert_eq!(seasonal_walk(&s, origin, k, S_WEEK).unwrap(), full.value(origin + k));
        }
    }

    #[test]
    fn last_year_needs_a_year() {
        let s = series(vec![1.0; 363 * 24]);
        assert!(seasonal_walk(&s, s.len(), 1, S_YEAR).is_err());
        let s = series(vec![1.0; 365 * 24]);
        assert!(seasonal_walk(&s, s.len(), 1, S_YEAR).is_ok());
    }

    #[test]
    fn sma_examples() {
        let mut v = vec![0.0; 5 * S_WEEK];
        let origin = 4 * S_WEEK;
        for (i, x) in [(1, 8.0), (2, 6.0), (3, 4.0), (4, 2.0)] {
            v[origin + 1 - i * S_WEEK - 1] = x;
        }
        let s = series(v.clone());
        assert_eq!(sma(&s, origin, 1, 4).unwrap(), 5.0);
        assert_eq!(sma(&s, origin, 1, 1).unwrap(), seasonal_walk(&s, origin, 1, S_WEEK).unwrap());
        let mut mask = vec![true; v.len()];
        mask[origin + 1 - 2 * S_WEEK - 1] = false;
        let start = s.start();
        let masked = LoadSeries::new("b", start, v, mask).unwrap();
        assert_eq!(sma(&masked, origin, 1, 4).unwrap(), (8.0 + 4.0 + 2.0) / 3.0);
    }

    #[test]
    fn sma_optimal_p_on_periodic_data_is_one() {
        let s = series(weekly(20));
        let split = SplitSpec::new(20 * S_WEEK, vec![141]).unwrap();
        assert_eq!(sma_optimal_p(&s, &split).unwrap(), 1);
    }

    #[test]
    fn sma_optimal_p_prefers_long_windows_under_noise() {
        let mut wins = 0;
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<f64> = weekly(20).into_iter().map(|x| x + rng.random_range(-2.0..2.0)).collect();
            let s = series(v);
            let split = SplitSpec::new(20 * S_WEEK, vec![141]).unwrap();
            if sma_optimal_p(&s, &split).unwrap() > 1 {
                wins += 1;
            }
        }
        assert!(wins >= 40, "{wins}/50");
    }

    #[test]
    fn sma_optimal_p_prefers_short_windows_under_trend() {
        // bias-variance oracle: with a steep trend the squared bias of SMA-p
        // grows like p², so the smallest window wins
        let v: Vec<f64> = weekly(20)
            .into_iter()
            .enumerate()
            .map(|(i, x)| x + 0.05 * i as f64)
            .collect();
        let s = series(v);
        let split = SplitSpec::new(20 * S_WEEK, vec![141]).unwrap();
        assert_eq!(sma_optimal_p(&s, &split).unwrap(), 1);
    }

    #[test]
    fn empirical_examples() {
        assert_eq!(type7_quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.5), 3.0);
        let s = series(vec![7.5; 366 * 24]);
        let split = SplitSpec::new(366 * 24, vec![367]).unwrap();
        let taus = percentile_grid();
        let tpl = empirical_forecast(&s, &split, &taus).unwrap();
        assert!(tpl.slot(17).iter().all(|&q| q == 7.5));
        let f1 = tpl.forecast(100, 96).unwrap();
        let f2 = tpl.forecast(100 + S_WEEK, 96).unwrap();
        assert_eq!(f1.rows(), f2.rows());
    }

    #[test]
    fn empirical_needs_a_year() {
        let s = series(vec![1.0; 300 * 24]);
        let split = SplitSpec::new(300 * 24, vec![301]).unwrap();
        assert!(empirical_forecast(&s, &split, &[0.5]).is_err());
    }

    #[test]
    fn periodic_series_zero_error_benchmarks() {
        let s = series(weekly(60));
        let full = series(weekly(61));
        let origin = 60 * S_WEEK - 24 * 4 + 8;
        let split = SplitSpec::new(60 * S_WEEK - 24 * 5, vec![416]).unwrap();
        let tpl = empirical_forecast(&s, &split, &[0.25, 0.5, 0.75]).unwrap();
        let med = tpl.forecast(origin, 96).unwrap().median();
        let mut ld_err = 0.0;
        for k in 1..=96 {
            let truth = full.value(origin + k);
            assert_eq!(seasonal_walk(&s, origin, k, S_WEEK).unwrap(), truth);
            for p in 1..=6 {
                assert!((sma(&s, origin, k, p).unwrap() - truth).abs() < 1e-12);
            }
            assert!((med[k - 1] - truth).abs() < 1e-12);
            ld_err += (seasonal_walk(&s, origin, k, S_DAY).unwrap() - truth).abs();
        }
        assert!(ld_err > 0.0);
    }

    proptest! {
        #[test]
        fn sma_permutation_invariant(vals in proptest::collection::vec(0.0f64..100.0, 4), rot in 0usize..4) {
            let origin = 4 * S_WEEK;
            let mut a = vec![1.0; 5 * S_WEEK];
            let mut b = a.clone();
            for i in 0..4 {
                a[origin + 1 - (i + 1) * S_WEEK - 1] = vals[i];
                b[origin + 1 - (i + 1) * S_WEEK - 1] = vals[(i + rot) % 4];
            }
            let (sa, sb) = (series(a), series(b));
            prop_assert!((sma(&sa, origin, 1, 4).unwrap() - sma(&sb, origin, 1, 4).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn empirical_brackets_slot_range(vals in proptest::collection::vec(0.0f64..50.0, 53), tau in 0.001f64..0.999) {
            let mut sorted = vals.clone();
            sorted.sort_by(f64::total_cmp);
            let q = type7_quantile(&sorted, tau);
            prop_assert!(q >= sorted[0] && q <= sorted[52]);
        }
    }
}
