//! Probabilistic AR forecasts: lasso mean on cumulative dummies, Yule-Walker
//! residual AR, and a lasso scale model for the innovations.

use super::estimation::{aic_select, default_p_max, lasso_hqc, yule_walker, LassoFit};
use super::point::{annual_terms, residual_path, TRAIN_SPAN};
use crate::benchmarks::type7_quantile;
use crate::calendar::{hour_of_day, period_of_week, HORIZONS, HOURS_PER_DAY, HOURS_PER_WEEK};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::series::{validate_taus, LoadSeries, QuantileForecast, SplitSpec};

/// Cumulative week dummies `𝕎_1..𝕎_168`, cumulative day dummies `𝔻_1..𝔻_24`
/// and, for each `j`, `𝔻_j·sin`, `𝔻_j·cos` for annual harmonics `1..=k`.
pub fn build_cumulative_design(t: usize, k: usize) -> Vec<f64> {
    let w = period_of_week(t);
    let h = hour_of_day(t);
    let mut row = Vec::with_capacity(HOURS_PER_WEEK + HOURS_PER_DAY * (1 + 2 * k));
    row.extend((1..=HOURS_PER_WEEK).map(|j| f64::from(u8::from(w <= j))));
    row.extend((1..=HOURS_PER_DAY).map(|j| f64::from(u8::from(h <= j))));
    let annual: Vec<f64> = annual_terms(t, k).collect();
    for j in 1..=HOURS_PER_DAY {
        let on = f64::from(u8::from(h <= j));
        row.extend(annual.iter().map(|a| on * a));
    }
    row
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArProbModel {
    pub fourier_order: usize,
    pub mean: LassoFit,
    pub ar_coeffs: Vec<f64>,
    /// Lasso fit of `|ε_t|`, i.e. of `C·σ_t`.
    pub sigma: LassoFit,
    /// Lower bound applied to the fitted `C·σ_t`.
    pub sigma_floor: f64,
    pub c: f64,
    pub taus: Vec<f64>,
    pub z_quantiles: Vec<f64>,
}

impl ArProbModel {
    pub fn mu(&self, t: usize) -> f64 {
        self.mean.predict(&build_cumulative_design(t, self.fourier_order))
    }

    /// Conditional standard deviation `σ_t`.
    pub fn sigma_at(&self, t: usize) -> f64 {
        self.scaled_sigma(&build_cumulative_design(t, self.fourier_order)) / self.c
    }

    fn scaled_sigma(&self, row: &[f64]) -> f64 {
        self.sigma.predict(row).max(self.sigma_floor)
    }

    /// Mean forecast `μ_{o+k} + r̂_{o+k}` for horizons `1..=96`.
    pub fn mean_path(&self, series: &LoadSeries, origin: usize) -> Vec<f64> {
        let path = residual_path(&self.ar_coeffs, origin, |t| {
            (t <= series.len() && series.is_observed(t)).then(|| series.value(t) - self.mu(t))
        });
        (1..=HORIZONS).map(|h| self.mu(origin + h) + path[h - 1]).collect()
    }
}

/// Standardized innovations and the quantities derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub c: f64,
    pub z: Vec<f64>,
}

/// Estimates `C` from innovations `ε` and fitted `g = C·σ` so that
/// `z = ε·C/g` has unit variance.
pub fn standardize(eps: &[f64], g: &[f64]) -> Result<Standardized> {
    let u: Vec<f64> = eps.iter().zip(g).map(|(e, g)| e / g).collect();
    let n = u.len() as f64;
    let mean = u.iter().sum::<f64>() / n;
    let sd = (u.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::Numerical("standardized residuals have no spread".into()));
    }
    let c = 1.0 / sd;
    Ok(Standardized {
        c,
        z: u.iter().map(|v| v * c).collect(),
    })
}

/// Fits the probabilistic AR model on the year ending at `split.train_end`.
pub fn fit_ar_prob(series: &LoadSeries, split: &SplitSpec, fourier_order: usize, taus: &[f64]) -> Result<ArProbModel> {
    validate_taus(taus)?;
    let end = split.train_end.min(series.len());
    if end < TRAIN_SPAN {
        return Err(Error::InsufficientData {
            required: TRAIN_SPAN,
            actual: end,
        });
    }
    let start = end - TRAIN_SPAN + 1;
    let rows: Vec<Vec<f64>> = (start..=end).map(|t| build_cumulative_design(t, fourier_order)).collect();
    let observed: Vec<usize> = (start..=end).filter(|&t| series.is_observed(t)).collect();

    let x = Matrix::from_rows(&observed.iter().map(|&t| rows[t - start].clone()).collect::<Vec<_>>())?;
    let y: Vec<f64> = observed.iter().map(|&t| series.value(t)).collect();
    let mean = lasso_hqc(&x, &y)?;

    let residuals: Vec<f64> = (start..=end)
        .map(|t| {
            if series.is_observed(t) {
                series.value(t) - mean.predict(&rows[t - start])
            } else {
                0.0
            }
        })
        .collect();
    let order = aic_select(&residuals, default_p_max(residuals.len()))?;
    let ar_coeffs = yule_walker(&residuals, order)?;

    let innov_t: Vec<usize> = (start + order..=end).filter(|&t| series.is_observed(t)).collect();
    let eps: Vec<f64> = innov_t
        .iter()
        .map(|&t| {
            let i = t - start;
            residuals[i] - ar_coeffs.iter().enumerate().map(|(k, c)| c * residuals[i - k - 1]).sum::<f64>()
        })
        .collect();
    let abs_eps: Vec<f64> = eps.iter().map(|e| e.abs()).collect();
    let mean_abs = abs_eps.iter().sum::<f64>() / abs_eps.len().max(1) as f64;
    if !(mean_abs > 0.0) {
        return Err(Error::Numerical("innovations vanish; no scale to model".into()));
    }
    let xs = Matrix::from_rows(&innov_t.iter().map(|&t| rows[t - start].clone()).collect::<Vec<_>>())?;
    let sigma = lasso_hqc(&xs, &abs_eps)?;
    let raw: Vec<f64> = (0..xs.rows()).map(|i| sigma.predict(xs.row(i))).collect();
    let non_positive = raw.iter().filter(|g| **g <= 0.0).count();
    if non_positive as f64 > 0.01 * raw.len() as f64 {
        return Err(Error::Numerical(format!(
            "scale model is non-positive at {non_positive} of {} points",
            raw.len()
        )));
    }
    let sigma_floor = 1e-6 * mean_abs;
    let g: Vec<f64> = raw.iter().map(|g| g.max(sigma_floor)).collect();
    let Standardized { c, mut z } = standardize(&eps, &g)?;
    z.sort_by(f64::total_cmp);
    let z_quantiles = taus.iter().map(|&tau| type7_quantile(&z, tau)).collect();
    Ok(ArProbModel {
        fourier_order,
        mean,
        ar_coeffs,
        sigma,
        sigma_floor,
        c,
        taus: taus.to_vec(),
        z_quantiles,
    })
}

/// Quantiles `μ + r̂ + σ·q_Z(τ)` for horizons `1..=96` after `origin`.
pub fn forecast_ar_prob(model: &ArProbModel, series: &LoadSeries, origin: usize) -> Result<QuantileForecast> {
    let centre = model.mean_path(series, origin);
    let rows = centre
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let s = model.sigma_at(origin + i + 1);
            model.z_quantiles.iter().map(|q| m + s * q).collect()
        })
        .collect();
    QuantileForecast::new(origin, model.taus.clone(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::origin_index;
    use crate::series::percentile_grid;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal, StudentT};
    use std::f64::consts::PI;

    fn series(values: Vec<f64>) -> LoadSeries {
        let start = NaiveDate::from_ymd_opt(2014, 1, 6).unwrap().and_hms_opt(0, 0, 0).unwrap();
        LoadSeries::observed("p", start, values).unwrap()
    }

    fn level(t: usize) -> f64 {
        40.0 + 10.0 * (2.0 * PI * hour_of_day(t) as f64 / 24.0).sin() + if period_of_week(t) > 120 { 5.0 } else { 0.0 }
    }

    fn scale(t: usize) -> f64 {
        0.5 + 0.1 * hour_of_day(t) as f64
    }

    fn simulate(days: usize, seed: u64, mut draw: impl FnMut(&mut ChaCha8Rng) -> f64) -> LoadSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        series((1..=days * 24).map(|t| level(t) + scale(t) * draw(&mut rng)).collect())
    }

    #[test]
    fn design_examples() {
        let row = build_cumulative_design(1, 2);
        assert_eq!(row.len(), 168 + 24 + 96);
        assert!(row[..168].iter().all(|v| *v == 1.0));
        let last = build_cumulative_design(168, 0);
        assert_eq!(last[..168].iter().filter(|v| **v == 1.0).count(), 1);
        assert_eq!(last[167], 1.0);
        let (a, b) = (build_cumulative_design(30, 0), build_cumulative_design(30 + 168, 0));
        assert_eq!(a, b);
    }

    #[test]
    fn gaussian_innovations_give_half_normal_constant() {
        let s = simulate(366, 1, |r| StandardNormal.sample(r));
        let split = SplitSpec::from_days(366, 1).unwrap();
        let m = fit_ar_prob(&s, &split, 2, &percentile_grid()).unwrap();
        assert!((m.c - (2.0 / PI).sqrt()).abs() < 0.02, "C = {}", m.c);
        assert!(m.z_quantiles.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn standardized_residuals_have_unit_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eps: Vec<f64> = (0..5000).map(|i| (1.0 + (i % 7) as f64) * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
        let g: Vec<f64> = (0..5000).map(|i| 0.8 * (1.0 + (i % 7) as f64)).collect();
        let st = standardize(&eps, &g).unwrap();
        let n = st.z.len() as f64;
        let mean = st.z.iter().sum::<f64>() / n;
        let var = st.z.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 1e-9);
        let mean_abs = st.z.iter().map(|z| z.abs()).sum::<f64>() / n;
        assert!((mean_abs - st.c).abs() < 0.05, "mean |z| {mean_abs} vs C {}", st.c);
    }

    #[test]
    fn heavy_tails_shrink_the_constant() {
        let t5 = StudentT::new(5.0).unwrap();
        let unit = (5.0f64 / 3.0).sqrt();
        let s = simulate(366, 2, |r| t5.sample(r) / unit);
        let split = SplitSpec::from_days(366, 1).unwrap();
        let m = fit_ar_prob(&s, &split, 0, &[0.1, 0.5, 0.9]).unwrap();
        assert!(m.c < (2.0 / PI).sqrt(), "C = {}", m.c);
    }

    #[test]
    fn band_coverage_with_hourly_scale() {
        let days = 366 + 110;
        let s = simulate(days, 4, |r| StandardNormal.sample(r));
        let split = SplitSpec::from_days(367, 105).unwrap();
        let m = fit_ar_prob(&s, &split, 0, &[0.1, 0.5, 0.9]).unwrap();
        let (mut inside, mut total) = (0usize, 0usize);
        for day in 367..367 + 105 {
            let origin = origin_index(day);
            let f = forecast_ar_prob(&m, &s.truncated(origin), origin).unwrap();
            for h in 1..=96 {
                let t = origin + h;
                if t > s.len() {
                    continue;
                }
                let row = f.row(h);
                let a = s.value(t);
                total += 1;
                if a >= row[0] && a <= row[2] {
                    inside += 1;
                }
                // band width is proportional to the modelled scale
                let width = row[2] - row[0];
                let expect = m.sigma_at(t) * (m.z_quantiles[2] - m.z_quantiles[0]);
                assert!((width - expect).abs() < 1e-9);
            }
        }
        let cov = 100.0 * inside as f64 / total as f64;
        assert!(total >= 10_000);
        assert!((cov - 80.0).abs() <= 4.0, "coverage {cov:.2}% over {total}");
    }
}
