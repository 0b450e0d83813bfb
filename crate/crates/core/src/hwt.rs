//! Holt-Winters-Taylor double seasonal exponential smoothing.
//!
//! The state holds a level, 24 intraday indexes and 168 intraweek indexes,
//! addressed by slot. An AR(1) term on the smoothing error adjusts the
//! one-step prediction. Density forecasts come from an ensemble of simulated
//! paths driven by resampled one-step errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::benchmarks::type7_quantile;
use crate::calendar::{hour_of_day, period_of_week, HORIZONS, HOURS_PER_DAY, HOURS_PER_WEEK};
use crate::error::{invalid, Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::series::{validate_taus, LoadSeries, QuantileForecast};

/// Weeks used for initialization; also excluded from the estimation objective.
pub const BURN_IN_WEEKS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HwtParams {
    pub lambda: f64,
    pub delta: f64,
    pub omega: f64,
    pub phi: f64,
}

impl HwtParams {
    pub fn new(lambda: f64, delta: f64, omega: f64, phi: f64) -> Result<Self> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(lambda) && unit(delta) && unit(omega) && (0.0..1.0).contains(&phi)) {
            return Err(invalid(format!(
                "HWT parameters out of range: ({lambda}, {delta}, {omega}, {phi})"
            )));
        }
        Ok(Self {
            lambda,
            delta,
            omega,
            phi,
        })
    }

    fn from_slice(x: &[f64]) -> Self {
        Self {
            lambda: x[0],
            delta: x[1],
            omega: x[2],
            phi: x[3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HwtState {
    pub level: f64,
    /// Intraday indexes by hour-of-day slot.
    pub d: Vec<f64>,
    /// Intraweek indexes by week-period slot.
    pub w: Vec<f64>,
    pub last_error: f64,
}

impl HwtState {
    /// Seasonal-level forecast for index `t`, without the error adjustment.
    pub fn base(&self, t: usize) -> f64 {
        self.level + self.d[hour_of_day(t) - 1] + self.w[period_of_week(t) - 1]
    }

    /// Advances the state with observation `load` at index `t` and returns the
    /// one-step prediction error.
    pub fn step(&mut self, params: &HwtParams, t: usize, load: f64) -> f64 {
        let base = self.base(t);
        let one_step = load - (base + params.phi * self.last_error);
        let e = load - base;
        self.level += params.lambda * e;
        self.d[hour_of_day(t) - 1] += params.delta * e;
        self.w[period_of_week(t) - 1] += params.omega * e;
        self.last_error = e;
        one_step
    }

    /// Masked hour: no update, error reset.
    pub fn skip(&mut self) {
        self.last_error = 0.0;
    }
}

/// Initial decomposition from the first four weeks.
pub fn hwt_init(series: &LoadSeries) -> Result<HwtState> {
    let span = BURN_IN_WEEKS * HOURS_PER_WEEK;
    if series.len() < span {
        return Err(Error::InsufficientData {
            required: span,
            actual: series.len(),
        });
    }
    let level = series
        .observed_mean(1, span)
        .ok_or_else(|| invalid("no observed values in the initialization window"))?;
    let mut w = vec![0.0; HOURS_PER_WEEK];
    let mut w_count = vec![0usize; HOURS_PER_WEEK];
    let mut d_sum = vec![0.0; HOURS_PER_DAY];
    let mut d_count = vec![0usize; HOURS_PER_DAY];
    for t in 1..=span {
        if series.is_observed(t) {
            w[period_of_week(t) - 1] += series.value(t);
            w_count[period_of_week(t) - 1] += 1;
            d_sum[hour_of_day(t) - 1] += series.value(t);
            d_count[hour_of_day(t) - 1] += 1;
        }
    }
    for (v, &n) in w.iter_mut().zip(&w_count) {
        *v = if n > 0 { *v / n as f64 - level } else { 0.0 };
    }
    let d = (0..HOURS_PER_DAY)
        .map(|h| {
            if d_count[h] == 0 {
                return 0.0;
            }
            let slots: Vec<f64> = (0..7).map(|day| w[day * HOURS_PER_DAY + h]).collect();
            d_sum[h] / d_count[h] as f64 - level - slots.iter().sum::<f64>() / 7.0
        })
        .collect();
    Ok(HwtState {
        level,
        d,
        w,
        last_error: 0.0,
    })
}

/// Result of running the filter over `1..=end`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub state: HwtState,
    /// One-step errors `L_t − prediction`, `NaN` where the load is masked.
    pub one_step: Vec<f64>,
}

impl FilterOutput {
    /// Observed one-step errors after the burn-in.
    pub fn post_burn_in(&self) -> impl Iterator<Item = f64> + '_ {
        self.one_step
            .iter()
            .skip(BURN_IN_WEEKS * HOURS_PER_WEEK)
            .copied()
            .filter(|e| !e.is_nan())
    }

    pub fn sse(&self) -> f64 {
        self.post_burn_in().map(|e| e * e).sum()
    }
}

pub fn hwt_filter(series: &LoadSeries, params: &HwtParams, init: &HwtState, end: usize) -> FilterOutput {
    let end = end.min(series.len());
    let mut state = init.clone();
    let mut one_step = Vec::with_capacity(end);
    for t in 1..=end {
        if series.is_observed(t) {
            one_step.push(state.step(params, t, series.value(t)));
        } else {
            state.skip();
            one_step.push(f64::NAN);
        }
    }
    FilterOutput { state, one_step }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HwtFit {
    pub params: HwtParams,
    pub init: HwtState,
    pub sse: f64,
    pub sse_start: f64,
    /// Post-burn-in one-step errors on the training data.
    pub residuals: Vec<f64>,
}

pub const START: [f64; 4] = [0.1, 0.1, 0.1, 0.3];

/// Minimizes the post-burn-in one-step SSE over `1..=end` by bounded
/// Nelder-Mead.
pub fn hwt_estimate(series: &LoadSeries, end: usize) -> Result<HwtFit> {
    let end = end.min(series.len());
    let required = 8 * HOURS_PER_WEEK;
    if end < required {
        return Err(Error::InsufficientData { required, actual: end });
    }
    let init = hwt_init(series)?;
    let opts = NelderMeadOptions {
        lower: vec![0.0; 4],
        upper: vec![1.0, 1.0, 1.0, 0.99],
        tol: 1e-5,
        max_iter: 500,
    };
    let objective = |x: &[f64]| hwt_filter(series, &HwtParams::from_slice(x), &init, end).sse();
    let result = nelder_mead(objective, &START, &opts)?;
    let params = HwtParams::from_slice(&result.x);
    let out = hwt_filter(series, &params, &init, end);
    Ok(HwtFit {
        params,
        sse: result.f,
        sse_start: result.f_start,
        residuals: out.post_burn_in().collect(),
        init,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Innovations {
    /// Resample historical one-step errors.
    Bootstrap,
    /// Gaussian draws with the historical error variance.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleSpec {
    pub n_paths: usize,
    pub seed: u64,
    pub innovations: Innovations,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            n_paths: 1000,
            seed: 0,
            innovations: Innovations::Bootstrap,
        }
    }
}

/// Deterministic path from a state (all future innovations zero).
pub fn hwt_point_path(state: &HwtState, params: &HwtParams, origin: usize, horizons: usize) -> Vec<f64> {
    let mut s = state.clone();
    (1..=horizons)
        .map(|k| {
            let t = origin + k;
            let pred = s.base(t) + params.phi * s.last_error;
            s.step(params, t, pred);
            pred
        })
        .collect()
}

/// Simulated load paths (`n_paths × 96`) from the state at `origin`.
pub fn hwt_ensemble(
    state: &HwtState,
    params: &HwtParams,
    residuals: &[f64],
    origin: usize,
    spec: &EnsembleSpec,
) -> Result<Vec<Vec<f64>>> {
    if residuals.is_empty() || spec.n_paths == 0 {
        return Err(invalid("ensemble needs residuals and at least one path"));
    }
    // the model's innovations are zero-mean, so the pool is centred first
    let centre = residuals.iter().sum::<f64>() / residuals.len() as f64;
    let pool: Vec<f64> = residuals.iter().map(|e| e - centre).collect();
    let sd = (pool.iter().map(|e| e * e).sum::<f64>() / pool.len() as f64).sqrt();
    let normal = Normal::new(0.0, sd).map_err(|e| Error::Numerical(e.to_string()))?;
    let paths = (0..spec.n_paths)
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(p as u64);
            let mut s = state.clone();
            (1..=HORIZONS)
                .map(|k| {
                    let t = origin + k;
                    let eps = match spec.innovations {
                        Innovations::Bootstrap => pool[rng.random_range(0..pool.len())],
                        Innovations::Gaussian => normal.sample(&mut rng),
                    };
                    let load = s.base(t) + params.phi * s.last_error + eps;
                    s.step(params, t, load);
                    load
                })
                .collect()
        })
        .collect();
    Ok(paths)
}

/// Per-horizon empirical quantiles of the simulated ensemble at `origin`.
pub fn hwt_forecast(
    series: &LoadSeries,
    fit: &HwtFit,
    origin: usize,
    taus: &[f64],
    spec: &EnsembleSpec,
) -> Result<QuantileForecast> {
    validate_taus(taus)?;
    if origin > series.len() {
        return Err(Error::InsufficientData {
            required: origin,
            actual: series.len(),
        });
    }
    let state = hwt_filter(series, &fit.params, &fit.init, origin).state;
    let paths = hwt_ensemble(&state, &fit.params, &fit.residuals, origin, spec)?;
    let mut column = vec![0.0; paths.len()];
    let rows = (0..HORIZONS)
        .map(|h| {
            for (c, p) in column.iter_mut().zip(&paths) {
                *c = p[h];
            }
            column.sort_by(f64::total_cmp);
            taus.iter().map(|&tau| type7_quantile(&column, tau)).collect()
        })
        .collect();
    QuantileForecast::new(origin, taus.to_vec(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::percentile_grid;
    use chrono::NaiveDate;
    use rand_distr::StandardNormal;
    use std::f64::consts::PI;

    fn series(values: Vec<f64>) -> LoadSeries {
        let start = NaiveDate::from_ymd_opt(2014, 1, 6).unwrap().and_hms_opt(0, 0, 0).unwrap();
        LoadSeries::observed("h", start, values).unwrap()
    }

    fn weekly(t: usize) -> f64 {
        let w = period_of_week(t) as f64;
        30.0 + 6.0 * (2.0 * PI * w / 24.0).sin() + 2.0 * (2.0 * PI * w / 168.0).cos()
    }

    fn simulate(params: HwtParams, n: usize, seed: u64) -> LoadSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = HwtState {
            level: 30.0,
            d: (0..24).map(|h| 5.0 * (2.0 * PI * h as f64 / 24.0).sin()).collect(),
            w: (0..168).map(|j| 2.0 * (2.0 * PI * j as f64 / 168.0).cos()).collect(),
            last_error: 0.0,
        };
        let v = (1..=n)
            .map(|t| {
                let eps: f64 = StandardNormal.sample(&mut rng);
                let load = s.base(t) + params.phi * s.last_error + eps;
                s.step(&params, t, load);
                load
            })
            .collect();
        series(v)
    }

    #[test]
    fn init_examples() {
        let s = series(vec![7.0; 6 * 168]);
        let st = hwt_init(&s).unwrap();
        assert_eq!(st.level, 7.0);
        assert!(st.d.iter().chain(&st.w).all(|v| v.abs() < 1e-12));

        let s = series((1..=6 * 168).map(weekly).collect());
        let st = hwt_init(&s).unwrap();
        assert!(st.d.iter().all(|v| v.abs() < 1e-9));
        for t in 1..=168 {
            assert!((st.base(t) - weekly(t)).abs() < 1e-9);
        }
        assert!(hwt_init(&series(vec![1.0; 600])).is_err());
    }

    #[test]
    fn single_step_arithmetic() {
        let mut st = HwtState {
            level: 10.0,
            d: vec![2.0; 24],
            w: vec![3.0; 168],
            last_error: 1.0,
        };
        let p = HwtParams::new(0.1, 0.0, 0.0, 0.5).unwrap();
        let one_step = st.step(&p, 1, 16.5);
        assert!((one_step - 1.0).abs() < 1e-12);
        assert!((st.last_error - 1.5).abs() < 1e-12);
        assert!((st.level - 10.15).abs() < 1e-12);
    }

    #[test]
    fn zero_params_and_noiseless_filter() {
        let s = series((1..=6 * 168).map(weekly).collect());
        let init = hwt_init(&s).unwrap();
        let zero = HwtParams::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let out = hwt_filter(&s, &zero, &init, s.len());
        assert!(out.one_step.iter().all(|e| e.abs() < 1e-9));
        assert_eq!(out.state.level, init.level);

        let bumped = series((1..=6 * 168).map(|t| weekly(t) + if t % 5 == 0 { 1.0 } else { 0.0 }).collect());
        let out = hwt_filter(&bumped, &zero, &init, bumped.len());
        for t in 1..=bumped.len() {
            assert!((out.one_step[t - 1] - (bumped.value(t) - init.base(t))).abs() < 1e-12);
        }
    }

    #[test]
    fn filter_is_linear_in_scale() {
        let s = simulate(HwtParams::new(0.2, 0.05, 0.1, 0.4).unwrap(), 8 * 168, 3);
        let p = HwtParams::new(0.3, 0.1, 0.2, 0.5).unwrap();
        let c = 2.5;
        let a = hwt_filter(&s, &p, &hwt_init(&s).unwrap(), s.len());
        let sc = s.scaled(c);
        let b = hwt_filter(&sc, &p, &hwt_init(&sc).unwrap(), sc.len());
        for (x, y) in a.one_step.iter().zip(&b.one_step) {
            assert!((x * c - y).abs() < 1e-9 * (1.0 + y.abs()));
        }
        assert!((a.state.level * c - b.state.level).abs() < 1e-9 * b.state.level.abs());
    }

    #[test]
    fn masked_points_skip_updates() {
        let mut mask = vec![true; 6 * 168];
        mask[800] = false;
        let values: Vec<f64> = (1..=6 * 168).map(weekly).collect();
        let start = NaiveDate::from_ymd_opt(2014, 1, 6).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let s = LoadSeries::new("m", start, values, mask).unwrap();
        let init = hwt_init(&s).unwrap();
        let out = hwt_filter(&s, &HwtParams::new(0.5, 0.5, 0.5, 0.5).unwrap(), &init, s.len());
        assert!(out.one_step[800].is_nan());
        assert_eq!(out.post_burn_in().count(), 6 * 168 - 4 * 168 - 1);
    }

    #[test]
    fn estimation_recovers_generator() {
        let truth = HwtParams::new(0.2, 0.05, 0.1, 0.4).unwrap();
        let s = simulate(truth, 365 * 24, 11);
        let fit = hwt_estimate(&s, s.len()).unwrap();
        let p = fit.params;
        assert!(fit.sse <= fit.sse_start);
        for (got, want) in [(p.lambda, 0.2), (p.delta, 0.05), (p.omega, 0.1), (p.phi, 0.4)] {
            assert!((got - want).abs() < 0.1, "{p:?}");
        }
        // no worse than a 21-point scan of λ with the other parameters held
        for i in 0..=20 {
            let mut q = p;
            q.lambda = i as f64 / 20.0;
            let sse = hwt_filter(&s, &q, &fit.init, s.len()).sse();
            assert!(fit.sse <= sse * (1.0 + 1e-6), "λ={} gives {sse} < {}", q.lambda, fit.sse);
        }
    }

    #[test]
    fn noiseless_periodic_fit_is_exact() {
        let s = series((1..=10 * 168).map(weekly).collect());
        let fit = hwt_estimate(&s, s.len()).unwrap();
        assert!(fit.sse < 1e-6 * s.len() as f64);
    }

    #[test]
    fn ensemble_properties() {
        let truth = HwtParams::new(0.2, 0.05, 0.1, 0.4).unwrap();
        let s = simulate(truth, 12 * 168, 5);
        let fit = hwt_estimate(&s, s.len()).unwrap();
        let origin = s.len();
        let taus = percentile_grid();
        let spec = EnsembleSpec {
            seed: 42,
            ..EnsembleSpec::default()
        };
        let a = hwt_forecast(&s, &fit, origin, &taus, &spec).unwrap();
        let b = hwt_forecast(&s, &fit, origin, &taus, &spec).unwrap();
        assert_eq!(a, b);

        let state = hwt_filter(&s, &fit.params, &fit.init, origin).state;
        let det = hwt_point_path(&state, &fit.params, origin, HORIZONS);
        let paths = hwt_ensemble(&state, &fit.params, &fit.residuals, origin, &spec).unwrap();
        let med = a.median();
        for h in 0..HORIZONS {
            let col: Vec<f64> = paths.iter().map(|p| p[h]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
            // the sample median's standard error is √(π/2) times that of the mean
            let se = (PI / 2.0).sqrt() * sd / (1000f64).sqrt();
            assert!((med[h] - det[h]).abs() <= 3.0 * se, "h={h}");
        }

        let flat = HwtFit {
            residuals: vec![0.0; 50],
            ..fit.clone()
        };
        let q = hwt_forecast(&s, &flat, origin, &[0.1, 0.5, 0.9], &spec).unwrap();
        for h in 1..=HORIZONS {
            assert!(q.row(h).iter().all(|v| (v - det[h - 1]).abs() < 1e-9));
        }
    }
}
