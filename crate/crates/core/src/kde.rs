//! Kernel density forecasts: KDE-W, KDE-Wλ and the conditional CKD family.
//!
//! Loads (and temperatures) are min-max normalized per feeder before any
//! kernel is evaluated, so every bandwidth lives in `(0, 1]`. The week period
//! entering the CKD kernels is normalized the same way, `(w − 1) / 167`.
//!
//! All methods produce a Gaussian mixture `F(x) = Σ w̃_i Φ((x − L_i)/h)` whose
//! quantiles are found by a bracketed Newton/bisection search.

use statrs::function::erf::erfc;

use crate::calendar::{self, HOURS_PER_DAY, HOURS_PER_WEEK, HORIZONS};
use crate::error::{invalid, Error, Result};
use crate::optim::{minimize_scalar, nelder_mead, NelderMeadOptions};
use crate::series::{percentile_grid, validate_taus, LoadSeries, MinMaxScale, QuantileForecast, SplitSpec, TemperatureData, TemperatureMode};

/// CKD training span: one year of hourly data.
pub const CKD_TRAIN_HOURS: usize = 365 * HOURS_PER_DAY;
/// Bracket half-margin, in bandwidths, around the extreme observations.
const BRACKET_MARGIN: f64 = 6.0;
/// Beyond this many bandwidths a kernel's CDF contribution is 0 or 1 to
/// double precision.
const KERNEL_REACH: f64 = 8.5;
/// Mixture components lighter than this fraction of the heaviest are dropped.
const PRUNE: f64 = 1e-12;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn gaussian_kernel(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Annual distance between two weeks of the year (both in `1..=52`).
pub fn decay_exponent(week_t: usize, week_i: usize) -> usize {
    let d = week_t.abs_diff(week_i);
    d.min(52usize.saturating_sub(d))
}

/// Normalized weights `λ^α / Σ λ^α`.
pub fn decay_weights(alphas: &[usize], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(invalid(format!("lambda must lie in (0, 1], got {lambda}")));
    }
    if alphas.is_empty() {
        return Err(invalid("no same-week-period history"));
    }
    let raw: Vec<f64> = alphas.iter().map(|&a| lambda.powi(a as i32)).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KdeMethod {
    KdeW,
    KdeWLambda,
    CkdW,
    /// Conditioned on actual temperatures.
    CkdWTa,
    /// Conditioned on forecast temperatures.
    CkdWTf,
}

impl KdeMethod {
    pub const ALL: [KdeMethod; 5] = [Self::KdeW, Self::KdeWLambda, Self::CkdW, Self::CkdWTa, Self::CkdWTf];

    pub fn name(self) -> &'static str {
        match self {
            Self::KdeW => "KDE-W",
            Self::KdeWLambda => "KDE-WL",
            Self::CkdW => "CKD-W",
            Self::CkdWTa => "CKD-WTa",
            Self::CkdWTf => "CKD-WTf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("KDE-Wλ") || s.eq_ignore_ascii_case("KDE-WLAMBDA") {
            return Some(Self::KdeWLambda);
        }
        Self::ALL.into_iter().find(|m| m.name().eq_ignore_ascii_case(s))
    }

    pub fn is_conditional(self) -> bool {
        matches!(self, Self::CkdW | Self::CkdWTa | Self::CkdWTf)
    }

    pub fn temperature_mode(self) -> TemperatureMode {
        match self {
            Self::CkdWTa => TemperatureMode::Actual,
            Self::CkdWTf => TemperatureMode::Forecast,
            _ => TemperatureMode::None,
        }
    }

    fn uses_temperature(self) -> bool {
        self.temperature_mode() != TemperatureMode::None
    }

    /// Number of free parameters.
    pub fn dimension(self) -> usize {
        match self {
            Self::KdeW => 1,
            Self::KdeWLambda | Self::CkdW => 2,
            Self::CkdWTa | Self::CkdWTf => 3,
        }
    }
}

/// Bandwidths (normalized units) and decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeParams {
    pub h_load: f64,
    pub lambda: Option<f64>,
    pub h_week: Option<f64>,
    pub h_temp: Option<f64>,
}

impl KdeParams {
    pub fn kde_w(h_load: f64) -> Self {
        Self {
            h_load,
            lambda: None,
            h_week: None,
            h_temp: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("h_load", self.h_load)?;
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l <= 1.0) {
                return Err(invalid(format!("lambda must lie in (0, 1], got {l}")));
            }
        }
        if let Some(h) = self.h_week {
            positive("h_week", h)?;
        }
        if let Some(h) = self.h_temp {
            positive("h_temp", h)?;
        }
        Ok(())
    }

    fn from_vector(method: KdeMethod, x: &[f64]) -> Self {
        match method {
            KdeMethod::KdeW => Self::kde_w(x[0]),
            KdeMethod::KdeWLambda => Self {
                lambda: Some(x[1]),
                ..Self::kde_w(x[0])
            },
            KdeMethod::CkdW => Self {
                h_week: Some(x[1]),
                ..Self::kde_w(x[0])
            },
            KdeMethod::CkdWTa | KdeMethod::CkdWTf => Self {
                h_week: Some(x[1]),
                h_temp: Some(x[2]),
                ..Self::kde_w(x[0])
            },
        }
    }
}

/// Inclusive training bounds covering whole days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KdeTrainWindow {
    pub t1: usize,
    pub t2: usize,
}

impl KdeTrainWindow {
    pub fn new(t1: usize, t2: usize) -> Result<Self> {
        if t1 == 0 || t2 < t1 || (t1 - 1) % HOURS_PER_DAY != 0 || t2 % HOURS_PER_DAY != 0 {
            return Err(invalid(format!("training window [{t1}, {t2}] must cover whole days")));
        }
        Ok(Self { t1, t2 })
    }

    /// Window for forecasts issued on `day`: everything before that day, or
    /// only the last year for the conditional methods.
    pub fn before_day(method: KdeMethod, day: usize) -> Result<Self> {
        if day < 2 {
            return Err(Error::InsufficientData { required: HOURS_PER_DAY, actual: 0 });
        }
        let t2 = calendar::day_end(day - 1);
        let t1 = if method.is_conditional() && t2 > CKD_TRAIN_HOURS {
            t2 - CKD_TRAIN_HOURS + 1
        } else {
            1
        };
        Self::new(t1, t2)
    }
}

/// Indices and weights of the same-week-period history used for target `t`.
///
/// KDE-W weights are all 1 (the mixture normalizes them); KDE-Wλ weights are
/// `λ^α(i)` normalized to sum to one. Masked points are skipped.
pub fn kde_weights(
    method: KdeMethod,
    series: &LoadSeries,
    t: usize,
    window: KdeTrainWindow,
    params: &KdeParams,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let period = calendar::period_of_week(t);
    let first = window.t1 + (period + HOURS_PER_WEEK - calendar::period_of_week(window.t1)) % HOURS_PER_WEEK;
    let idx: Vec<usize> = (first..=window.t2.min(series.len()))
        .step_by(HOURS_PER_WEEK)
        .filter(|&i| series.is_observed(i))
        .collect();
    if idx.is_empty() {
        return Err(invalid("no same-week-period history"));
    }
    let weights = match method {
        KdeMethod::KdeW => vec![1.0; idx.len()],
        KdeMethod::KdeWLambda => {
            let lambda = params.lambda.ok_or_else(|| invalid("KDE-Wλ requires lambda"))?;
            let week_t = calendar::week_of_year(series.date_of(t));
            let alphas: Vec<usize> = idx
                .iter()
                .map(|&i| decay_exponent(week_t, calendar::week_of_year(series.date_of(i))))
                .collect();
            decay_weights(&alphas, lambda)?
        }
        _ => return Err(invalid(format!("{} is not a week-period KDE", method.name()))),
    };
    Ok((idx, weights))
}

/// Weighted Gaussian mixture with sorted centres.
#[derive(Debug, Clone)]
struct Mixture {
    centres: Vec<f64>,
    weights: Vec<f64>,
    /// `cum[k]` = total weight of the first `k` centres.
    cum: Vec<f64>,
    h: f64,
}

impl Mixture {
    fn new(obs: &[f64], weights: &[f64], h: f64) -> Result<Self> {
        if obs.len() != weights.len() || obs.is_empty() {
            return Err(invalid("observations and weights must be non-empty and of equal length"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid(format!("bandwidth must be positive, got {h}")));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid("weights must be finite and non-negative"));
        }
        let max_w = weights.iter().copied().fold(0.0, f64::max);
        if max_w <= 0.0 {
            return Err(invalid("weights are all zero"));
        }
        let mut pairs: Vec<(f64, f64)> = obs
            .iter()
            .zip(weights)
            .filter(|(_, w)| **w > PRUNE * max_w)
            .map(|(o, w)| (*o, *w))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // rescale by the heaviest weight first so proportional weight vectors
        // produce bit-identical mixtures
        for p in &mut pairs {
            p.1 /= max_w;
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let mut cum = Vec::with_capacity(pairs.len() + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for p in &pairs {
            acc += p.1 / total;
            cum.push(acc);
        }
        Ok(Self {
            centres: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
            cum,
            h,
        })
    }

    fn cdf_pdf(&self, x: f64) -> (f64, f64) {
        let reach = KERNEL_REACH * self.h;
        let lo = self.centres.partition_point(|&c| c < x - reach);
        let hi = self.centres.partition_point(|&c| c <= x + reach);
        let mut f = self.cum[lo];
        let mut d = 0.0;
        for k in lo..hi {
            let z = (x - self.centres[k]) / self.h;
            f += self.weights[k] * normal_cdf(z);
            d += self.weights[k] * gaussian_kernel(z);
        }
        (f, d / self.h)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.cdf_pdf(x).0
    }

    fn bracket(&self) -> (f64, f64) {
        let m = BRACKET_MARGIN * self.h;
        (self.centres[0] - m, self.centres[self.centres.len() - 1] + m)
    }

    /// Weighted empirical quantile of the centres, a starting guess.
    fn centre_quantile(&self, tau: f64) -> f64 {
        let k = self.cum.partition_point(|&c| c < tau).clamp(1, self.centres.len());
        self.centres[k - 1]
    }

    /// Quantile at `tau`, searching no lower than `lower`. Where the CDF is
    /// flat at level `tau` (a gap between separated centres) the midpoint of
    /// the flat stretch is returned.
    fn quantile(&self, tau: f64, lower: f64) -> f64 {
        let x = self.crossing(tau, lower);
        let (_, d) = self.cdf_pdf(x);
        if d * self.h > 1e-7 {
            return x;
        }
        let (a0, b0) = self.bracket();
        let flat = 1e-9;
        let left = self.bisect(|f| f >= tau - flat, lower.max(a0), b0);
        let right = self.bisect(|f| f > tau + flat, left, b0);
        0.5 * (left + right)
    }

    /// Smallest `x` in `[a, b]` where `pred(F(x))` holds, assuming it is
    /// monotone in `x`.
    fn bisect(&self, pred: impl Fn(f64) -> bool, mut a: f64, mut b: f64) -> f64 {
        if pred(self.cdf(a)) {
            return a;
        }
        let width = b - a;
        while b - a > 1e-13 * width.max(f64::MIN_POSITIVE) {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if pred(self.cdf(m)) {
                b = m;
            } else {
                a = m;
            }
        }
        b
    }

    fn crossing(&self, tau: f64, lower: f64) -> f64 {
        let (a0, b0) = self.bracket();
        let width = b0 - a0;
        let (mut a, mut b) = (lower.max(a0), b0);
        let mut x = self.centre_quantile(tau).clamp(a, b);
        let mut step_old = width;
        let mut step = width;
        for _ in 0..300 {
            let (f, d) = self.cdf_pdf(x);
            let g = f - tau;
            if g.abs() <= 1e-14 {
                return x;
            }
            if g < 0.0 {
                a = x;
            } else {
                b = x;
            }
            if b - a <= 1e-13 * width {
                break;
            }
            let newton = if d > 0.0 { x - g / d } else { f64::NAN };
            let fast = newton > a && newton < b && (2.0 * (newton - x)).abs() <= step_old.abs();
            step_old = step;
            if fast {
                step = newton - x;
                x = newton;
            } else {
                step = 0.5 * (b - a);
                x = a + step;
            }
        }
        x.clamp(a, b)
    }

    /// Approximate quantiles from a cubic Hermite interpolant of the CDF on
    /// nodes at most `h/2` apart (capped at `MAX_NODES`). Used inside the
    /// parameter search, where many mixtures are inverted per evaluation.
    fn quantiles_interpolated(&self, taus: &[f64]) -> Vec<f64> {
        const MAX_NODES: usize = 4096;
        let (a0, b0) = self.bracket();
        let range = b0 - a0;
        let segments = ((range / (0.5 * self.h)).ceil() as usize).clamp(1, MAX_NODES);
        let dx = range / segments as f64;
        let nodes: Vec<(f64, f64, f64)> = (0..=segments)
            .map(|k| {
                let x = a0 + k as f64 * dx;
                let (f, d) = self.cdf_pdf(x);
                (x, f, d)
            })
            .collect();
        let mut k = 0;
        taus.iter()
            .map(|&tau| {
                while k + 1 < segments && nodes[k + 1].1 < tau {
                    k += 1;
                }
                let (x0, f0, d0) = nodes[k];
                let (_, f1, d1) = nodes[k + 1];
                let cubic = |s: f64| {
                    let (s2, s3) = (s * s, s * s * s);
                    (2.0 * s3 - 3.0 * s2 + 1.0) * f0
                        + (s3 - 2.0 * s2 + s) * dx * d0
                        + (-2.0 * s3 + 3.0 * s2) * f1
                        + (s3 - s2) * dx * d1
                };
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..40 {
                    let m = 0.5 * (lo + hi);
                    if cubic(m) < tau {
                        lo = m;
                    } else {
                        hi = m;
                    }
                }
                x0 + 0.5 * (lo + hi) * dx
            })
            .collect()
    }

    fn quantiles(&self, taus: &[f64]) -> Vec<f64> {
        let mut lower = f64::NEG_INFINITY;
        taus.iter()
            .map(|&tau| {
                let q = self.quantile(tau, lower);
                lower = q;
                q
            })
            .collect()
    }
}

/// CDF of the weighted Gaussian mixture at `x` (weights normalized internally).
pub fn mixture_cdf(obs: &[f64], weights: &[f64], h: f64, x: f64) -> Result<f64> {
    Ok(Mixture::new(obs, weights, h)?.cdf(x))
}

/// Quantiles of the weighted Gaussian mixture for an ascending τ grid.
pub fn kde_quantiles(obs: &[f64], weights: &[f64], h: f64, taus: &[f64]) -> Result<Vec<f64>> {
    validate_taus(taus)?;
    Ok(Mixture::new(obs, weights, h)?.quantiles(taus))
}

/// Log-domain conditional weights `K((y_i−y)/h_y)·K((z_i−z)/h_z)`, scaled so
/// the largest is 1. Errors if the unscaled kernel mass underflows.
fn conditional_weights(periods: &[f64], temps: Option<&[f64]>, y: f64, z: Option<f64>, params: &KdeParams) -> Result<Vec<f64>> {
    let h_y = params.h_week.ok_or_else(|| invalid("conditional KDE requires h_week"))?;
    let mut logs: Vec<f64> = periods
        .iter()
        .map(|&yi| {
            let u = (yi - y) / h_y;
            -0.5 * u * u
        })
        .collect();
    let mut norm = INV_SQRT_2PI.ln();
    if let Some(zs) = temps {
        let z = z.ok_or_else(|| invalid("conditioning temperature missing"))?;
        let h_z = params.h_temp.ok_or_else(|| invalid("temperature conditioning requires h_temp"))?;
        for (l, &zi) in logs.iter_mut().zip(zs) {
            let u = (zi - z) / h_z;
            *l -= 0.5 * u * u;
        }
        norm += INV_SQRT_2PI.ln();
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    if !max.is_finite() || norm + max + sum.ln() < 1e-300f64.ln() {
        return Err(Error::Numerical("conditioning too narrow".into()));
    }
    Ok(logs.into_iter().map(|l| (l - max).exp()).collect())
}

/// Conditional KDE quantiles at week-period coordinate `y` (and temperature
/// `z`), weighting every training point by kernel similarity.
pub fn ckd_quantiles(
    loads: &[f64],
    periods: &[f64],
    temps: Option<&[f64]>,
    y: f64,
    z: Option<f64>,
    params: &KdeParams,
    taus: &[f64],
) -> Result<Vec<f64>> {
    validate_taus(taus)?;
    if periods.len() != loads.len() || temps.is_some_and(|z| z.len() != loads.len()) {
        return Err(invalid("conditioning variables must align with the loads"));
    }
    let w = conditional_weights(periods, temps, y, z, params)?;
    Ok(Mixture::new(loads, &w, params.h_load)?.quantiles(taus))
}

/// Week period mapped to `[0, 1]`.
pub fn week_coordinate(t: usize) -> f64 {
    (calendar::period_of_week(t) - 1) as f64 / (HOURS_PER_WEEK - 1) as f64
}

/// A KDE method with optimized parameters and the scaling it was fitted on.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeModel {
    pub method: KdeMethod,
    pub params: KdeParams,
    pub load_scale: MinMaxScale,
    pub temp_scale: Option<MinMaxScale>,
    /// Validation score (mean pinball, normalized units) at the optimum and
    /// at the start point.
    pub score: f64,
    pub start_score: f64,
}

/// Normalized training data for one window.
struct Prepared {
    idx: Vec<usize>,
    loads: Vec<f64>,
    periods: Vec<f64>,
    temps: Option<Vec<f64>>,
}

fn prepare(
    method: KdeMethod,
    series: &LoadSeries,
    temps: Option<&TemperatureData>,
    window: KdeTrainWindow,
    load_scale: &MinMaxScale,
    temp_scale: Option<&MinMaxScale>,
) -> Prepared {
    let mut p = Prepared {
        idx: Vec::new(),
        loads: Vec::new(),
        periods: Vec::new(),
        temps: method.uses_temperature().then(Vec::new),
    };
    for i in window.t1..=window.t2.min(series.len()) {
        if !series.is_observed(i) {
            continue;
        }
        if let Some(zs) = p.temps.as_mut() {
            // history is conditioned on what was observed, in both modes
            match temps.and_then(|td| td.actual_at(i)).filter(|v| v.is_finite()) {
                Some(v) => zs.push(temp_scale.map_or(v, |s| s.normalize(v))),
                None => continue,
            }
        }
        p.idx.push(i);
        p.loads.push(load_scale.normalize(series.value(i)));
        p.periods.push(week_coordinate(i));
    }
    // order by load once so each mixture built from this window is presorted
    let mut order: Vec<usize> = (0..p.idx.len()).collect();
    order.sort_by(|&a, &b| p.loads[a].total_cmp(&p.loads[b]));
    let permute = |v: &[f64]| order.iter().map(|&k| v[k]).collect::<Vec<f64>>();
    Prepared {
        idx: order.iter().map(|&k| p.idx[k]).collect(),
        loads: permute(&p.loads),
        periods: permute(&p.periods),
        temps: p.temps.as_deref().map(permute),
    }
}

/// Normalized predictive mixture for target `t` on a prepared window.
#[allow(clippy::too_many_arguments)]
fn target_mixture(
    method: KdeMethod,
    series: &LoadSeries,
    prepared: &Prepared,
    window: KdeTrainWindow,
    t: usize,
    z: Option<f64>,
    params: &KdeParams,
    load_scale: &MinMaxScale,
) -> Result<Mixture> {
    if method.is_conditional() {
        if prepared.loads.is_empty() {
            return Err(invalid("no training data in the conditional window"));
        }
        let w = conditional_weights(&prepared.periods, prepared.temps.as_deref(), week_coordinate(t), z, params)?;
        Mixture::new(&prepared.loads, &w, params.h_load)
    } else {
        let (idx, w) = kde_weights(method, series, t, window, params)?;
        let obs: Vec<f64> = idx.iter().map(|&i| load_scale.normalize(series.value(i))).collect();
        Mixture::new(&obs, &w, params.h_load)
    }
}

fn conditioning_temperature(
    method: KdeMethod,
    temps: Option<&TemperatureData>,
    temp_scale: Option<&MinMaxScale>,
    day: usize,
    t: usize,
) -> Result<Option<f64>> {
    let mode = method.temperature_mode();
    if mode == TemperatureMode::None {
        return Ok(None);
    }
    let td = temps.ok_or_else(|| invalid("temperature data required"))?;
    let v = td
        .forecast_input(mode, day, t)
        .ok_or_else(|| invalid(format!("no {} temperature for index {t} at day {day}", mode.as_str())))?;
    Ok(Some(temp_scale.map_or(v, |s| s.normalize(v))))
}

/// Mean pinball loss (normalized units) of one-day-ahead forecasts over the
/// validation days.
#[allow(clippy::too_many_arguments)]
fn validation_score(
    method: KdeMethod,
    series: &LoadSeries,
    temps: Option<&TemperatureData>,
    days: &[usize],
    prepared: &[(KdeTrainWindow, Prepared)],
    params: &KdeParams,
    load_scale: &MinMaxScale,
    temp_scale: Option<&MinMaxScale>,
    taus: &[f64],
) -> f64 {
    if params.validate().is_err() {
        return f64::INFINITY;
    }
    let (mut total, mut n) = (0.0, 0usize);
    for (&day, (window, prep)) in days.iter().zip(prepared) {
        let origin = calendar::origin_index(day);
        for t in origin + 1..=origin + HOURS_PER_DAY {
            if t > series.len() || !series.is_observed(t) {
                continue;
            }
            let Ok(z) = conditioning_temperature(method, temps, temp_scale, day, t) else {
                return f64::NAN;
            };
            let Ok(mixture) = target_mixture(method, series, prep, *window, t, z, params, load_scale) else {
                return f64::NAN;
            };
            let q = mixture.quantiles_interpolated(taus);
            let y = load_scale.normalize(series.value(t));
            total += crate::metrics::mean_pinball(y, &q, taus);
            n += 1;
        }
    }
    if n == 0 {
        f64::NAN
    } else {
        total / n as f64
    }
}

/// Optimizes the method's parameters on the validation weeks preceding the
/// first test day.
pub fn optimize_kde_params(
    method: KdeMethod,
    series: &LoadSeries,
    temps: Option<&TemperatureData>,
    split: &SplitSpec,
) -> Result<KdeModel> {
    split.validate()?;
    let first_test = split.test_days[0];
    let val_days = split.validation_weeks * 7;
    let required = split.validation_weeks * HOURS_PER_WEEK + HOURS_PER_WEEK;
    let end = calendar::origin_index(first_test).min(series.len());
    let observed = (1..=end).filter(|&t| series.is_observed(t)).count();
    if first_test <= val_days + 1 || observed < required {
        return Err(Error::InsufficientData { required, actual: observed });
    }
    if method.uses_temperature() && temps.is_none() {
        return Err(invalid(format!("{} requires temperature data", method.name())));
    }
    let load_scale = MinMaxScale::fit(&series.values()[..end], &series.mask()[..end])?;
    let temp_scale = match (method.uses_temperature(), temps) {
        (true, Some(td)) => {
            let upto = end.min(td.actual.len());
            let actual = &td.actual[..upto];
            let mask: Vec<bool> = actual.iter().map(|v| v.is_finite()).collect();
            Some(MinMaxScale::fit(actual, &mask)?)
        }
        _ => None,
    };

    let days: Vec<usize> = (first_test - val_days..first_test).collect();
    let prepared: Vec<(KdeTrainWindow, Prepared)> = days
        .iter()
        .map(|&d| {
            let w = KdeTrainWindow::before_day(method, d)?;
            Ok((w, prepare(method, series, temps, w, &load_scale, temp_scale.as_ref())))
        })
        .collect::<Result<_>>()?;
    let taus = percentile_grid();
    let score = |x: &[f64]| {
        let params = KdeParams::from_vector(method, x);
        validation_score(method, series, temps, &days, &prepared, &params, &load_scale, temp_scale.as_ref(), &taus)
    };

    let lo = 1e-4;
    let start = vec![0.1; method.dimension()];
    let (x, f, f_start) = if method.dimension() == 1 {
        let f_start = score(&start);
        let best = minimize_scalar(|h| score(&[h]), lo, 1.0, 1e-4, 200)?;
        (vec![best.x], best.f, f_start)
    } else {
        let opts = NelderMeadOptions {
            lower: vec![lo; method.dimension()],
            upper: vec![1.0; method.dimension()],
            tol: 1e-4,
            max_iter: 200,
        };
        let r = nelder_mead(score, &start, &opts)?;
        (r.x, r.f, r.f_start)
    };
    if !f.is_finite() {
        return Err(Error::Numerical(format!("validation objective is {f}")));
    }
    // the scalar search never evaluates the start point, keep it if better
    let (x, f) = if f_start < f { (start, f_start) } else { (x, f) };
    Ok(KdeModel {
        method,
        params: KdeParams::from_vector(method, &x),
        load_scale,
        temp_scale,
        score: f,
        start_score: f_start,
    })
}

/// Quantile forecast for horizons `1..=96` after `origin`, in kWh.
pub fn forecast_kde(
    model: &KdeModel,
    series: &LoadSeries,
    temps: Option<&TemperatureData>,
    origin: usize,
    taus: &[f64],
) -> Result<QuantileForecast> {
    validate_taus(taus)?;
    model.params.validate()?;
    let day = calendar::day_index(origin);
    let window = KdeTrainWindow::before_day(model.method, day)?;
    let prepared = if model.method.is_conditional() {
        prepare(model.method, series, temps, window, &model.load_scale, model.temp_scale.as_ref())
    } else {
        Prepared {
            idx: Vec::new(),
            loads: Vec::new(),
            periods: Vec::new(),
            temps: None,
        }
    };
    let mut rows = Vec::with_capacity(HORIZONS);
    for h in 1..=HORIZONS {
        let t = origin + h;
        let z = conditioning_temperature(model.method, temps, model.temp_scale.as_ref(), day, t)?;
        let q = target_mixture(model.method, series, &prepared, window, t, z, &model.params, &model.load_scale)?.quantiles(taus);
        rows.push(q.into_iter().map(|v| model.load_scale.denormalize(v)).collect());
    }
    QuantileForecast::new(origin, taus.to_vec(), rows)
}

/// Largest training index a forecast from `origin` reads.
pub fn last_index_used(method: KdeMethod, origin: usize) -> usize {
    KdeTrainWindow::before_day(method, calendar::day_index(origin)).map_or(0, |w| w.t2)
}
