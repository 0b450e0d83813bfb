//! Scoring rules and the statistics used to compare forecast errors.

use crate::calendar::HOURS_PER_DAY;
use crate::error::{invalid, Error, Result};
use crate::series::LoadSeries;

/// Mean hourly load over the last year of training data, used to turn MAE and
/// CRPS into percentages comparable across feeders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreNormalizer {
    pub mean_hourly_load: f64,
}

impl ScoreNormalizer {
    pub fn new(mean_hourly_load: f64) -> Result<Self> {
        if !(mean_hourly_load > 0.0) || !mean_hourly_load.is_finite() {
            return Err(invalid(format!("normalizer must be positive, got {mean_hourly_load}")));
        }
        Ok(Self { mean_hourly_load })
    }

    /// Observed mean over the 365 days ending at `train_end` (or all training
    /// data when less than a year is available).
    pub fn from_training(series: &LoadSeries, train_end: usize) -> Result<Self> {
        let from = train_end.saturating_sub(365 * HOURS_PER_DAY) + 1;
        let mean = series
            .observed_mean(from, train_end)
            .ok_or_else(|| invalid("no observed training load for the normalizer"))?;
        Self::new(mean)
    }
}

/// MAPE together with the number of pairs skipped for a zero actual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mape {
    pub value: f64,
    pub used: usize,
    pub excluded: usize,
}

/// Mean absolute percentage error; pairs whose actual is zero are skipped.
pub fn mape(actuals: &[f64], forecasts: &[f64]) -> Result<Mape> {
    check_lengths(actuals, forecasts)?;
    let (mut sum, mut used, mut excluded) = (0.0, 0usize, 0usize);
    for (&a, &f) in actuals.iter().zip(forecasts) {
        if a == 0.0 || !a.is_finite() {
            excluded += 1;
            continue;
        }
        sum += (a - f).abs() / a.abs();
        used += 1;
    }
    if used == 0 {
        return Err(invalid("every MAPE pair was excluded"));
    }
    Ok(Mape {
        value: 100.0 * sum / used as f64,
        used,
        excluded,
    })
}

pub fn mae(actuals: &[f64], forecasts: &[f64]) -> Result<f64> {
    check_lengths(actuals, forecasts)?;
    if actuals.is_empty() {
        return Err(invalid("MAE of an empty sample"));
    }
    Ok(actuals.iter().zip(forecasts).map(|(a, f)| (a - f).abs()).sum::<f64>() / actuals.len() as f64)
}

/// MAE as a percentage of the feeder's mean hourly load.
pub fn rmae(actuals: &[f64], forecasts: &[f64], normalizer: ScoreNormalizer) -> Result<f64> {
    Ok(100.0 * mae(actuals, forecasts)? / normalizer.mean_hourly_load)
}

pub fn pinball(actual: f64, predicted: f64, tau: f64) -> f64 {
    if actual >= predicted {
        tau * (actual - predicted)
    } else {
        (1.0 - tau) * (predicted - actual)
    }
}

/// Mean pinball loss over a quantile row.
pub fn mean_pinball(actual: f64, row: &[f64], taus: &[f64]) -> f64 {
    row.iter().zip(taus).map(|(&q, &t)| pinball(actual, q, t)).sum::<f64>() / taus.len() as f64
}

/// CRPS of a quantile forecast through the quantile decomposition
/// `CRPS ≈ (2/|τ|) Σ_q ρ_τq(a − q)`.
pub fn crps_from_quantiles(actual: f64, row: &[f64], taus: &[f64]) -> Result<f64> {
    if row.len() != taus.len() || row.is_empty() {
        return Err(invalid("quantile row and τ grid differ in length"));
    }
    if row.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("quantile row crosses"));
    }
    Ok(2.0 * mean_pinball(actual, row, taus))
}

/// Exact CRPS of an ensemble's empirical distribution:
/// `mean|X − a| − ½ mean|X − X′|` over all ordered pairs.
pub fn crps_from_ensemble(actual: f64, sample: &[f64]) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(invalid("ensemble CRPS needs at least two members"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let spread: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i as f64 + 1.0) - n as f64 - 1.0) * x)
        .sum::<f64>()
        * 2.0;
    let n = n as f64;
    let abs_dev = sorted.iter().map(|x| (x - actual).abs()).sum::<f64>() / n;
    Ok(abs_dev - 0.5 * spread / (n * n))
}

/// Mean CRPS as a percentage of the mean hourly load.
pub fn rcrps(crps: &[f64], normalizer: ScoreNormalizer) -> Result<f64> {
    if crps.is_empty() {
        return Err(invalid("RCRPS of an empty sample"));
    }
    Ok(100.0 * crps.iter().sum::<f64>() / crps.len() as f64 / normalizer.mean_hourly_load)
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (−1)^{j−1} e^{−2j²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // complementary series, fast for small λ
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let mut s = 0.0;
        for j in 0..50 {
            let k = (2 * j + 1) as f64;
            let term = y.powf(k * k);
            s += term;
            if term < 1e-17 {
                break;
            }
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * lambda * lambda).exp();
            s += if j % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl KsResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Two-sample Kolmogorov-Smirnov test.
///
/// The p-value is exact (lattice path count, ties ignored) when
/// `nx·ny < 10000`, and otherwise the asymptotic Kolmogorov tail at
/// `(√n + 0.12 + 0.11/√n)·D` with `n = nx·ny/(nx+ny)`.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    if x.len() < 5 || y.len() < 5 {
        return Err(invalid("KS test needs at least 5 points per sample"));
    }
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let p_value = if a.len() * b.len() < 10_000 {
        ks_exact_p(a.len(), b.len(), d)
    } else {
        let ne = (na * nb / (na + nb)).sqrt();
        kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)
    };
    Ok(KsResult { statistic: d, p_value })
}

/// `P(D ≥ d)` for samples of sizes `n` and `m` under the null: one minus the
/// share of monotone lattice paths from (0,0) to (n,m) that keep
/// `|i·m − j·n| < d·n·m` throughout.
fn ks_exact_p(n: usize, m: usize, d: f64) -> f64 {
    let k = (d * (n * m) as f64).round() as i64;
    if k <= 0 {
        return 1.0;
    }
    let inside = |i: usize, j: usize| ((i * m) as i64 - (j * n) as i64).abs() < k;
    let mut prob = vec![0.0f64; m + 1];
    for j in 0..=m {
        prob[j] = if inside(0, j) && (j == 0 || prob[j - 1] > 0.0) { 1.0 } else { 0.0 };
    }
    // prob[j] after row i = (#paths to (i,j)) / C(i+j, j)
    for i in 1..=n {
        let mut next = vec![0.0f64; m + 1];
        for j in 0..=m {
            if !inside(i, j) {
                continue;
            }
            let (fi, fj) = (i as f64, j as f64);
            // #(i,j) = #(i−1,j) + #(i,j−1); C(i−1+j,j)/C(i+j,j) = i/(i+j)
            let from_left = prob[j] * fi / (fi + fj);
            let from_below = if j > 0 { next[j - 1] * fj / (fi + fj) } else { 0.0 };
            next[j] = from_left + from_below;
        }
        prob = next;
    }
    (1.0 - prob[m]).clamp(0.0, 1.0)
}

/// `error ≈ prefactor · size^exponent`, fitted by least squares in log-log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

impl PowerLaw {
    pub fn predict(&self, size: f64) -> f64 {
        self.prefactor * size.powf(self.exponent)
    }
}

pub fn power_law_fit(sizes: &[f64], errors: &[f64]) -> Result<PowerLaw> {
    check_lengths(sizes, errors)?;
    if sizes.len() < 3 {
        return Err(invalid("power-law fit needs at least 3 points"));
    }
    if sizes.iter().chain(errors).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(invalid("power-law inputs must be positive"));
    }
    let lx: Vec<f64> = sizes.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(invalid("power-law fit needs at least two distinct sizes"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(PowerLaw {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
    })
}

/// Pearson correlation of two score vectors.
pub fn score_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    if x.len() < 3 {
        return Err(invalid("correlation needs at least 3 points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Numerical("correlation of a zero-variance vector".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(invalid(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    Ok(())
}
