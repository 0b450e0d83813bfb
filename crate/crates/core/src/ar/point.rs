//! ARWD and ARWDY point forecasts.

use std::f64::consts::PI;

use super::estimation::{aic_select, burg, default_p_max, ols_fit};
use crate::calendar::{day_index, horizon_day, period_of_week, HORIZONS, HOURS_PER_WEEK};
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, Matrix};
use crate::series::{LoadSeries, SplitSpec, TemperatureData, TemperatureMode};

/// Annual period in hours (365 days).
pub const ANNUAL_PERIOD: f64 = 8760.0;
/// Number of annual Fourier pairs used by ARWDY.
pub const FOURIER_ORDER: usize = 2;
/// Training span in hours.
pub const TRAIN_SPAN: usize = 8760;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArVariant {
    /// Weekly-mean profile.
    Arwd,
    /// Weekly mean plus annual Fourier terms.
    Arwdy,
}

impl ArVariant {
    pub fn fourier_order(self) -> usize {
        match self {
            Self::Arwd => 0,
            Self::Arwdy => FOURIER_ORDER,
        }
    }
}

/// Annual `sin, cos` pairs for harmonics `1..=k` at index `t`.
pub(crate) fn annual_terms(t: usize, k: usize) -> impl Iterator<Item = f64> {
    (1..=k).flat_map(move |j| {
        let w = 2.0 * PI * t as f64 * j as f64 / ANNUAL_PERIOD;
        [w.sin(), w.cos()]
    })
}

fn mean_row(variant: ArVariant, t: usize, temp: Option<f64>) -> Vec<f64> {
    let mut row = vec![0.0; HOURS_PER_WEEK];
    row[period_of_week(t) - 1] = 1.0;
    row.extend(annual_terms(t, variant.fourier_order()));
    row.extend(temp);
    row
}

/// Mean profile and residual AR model for one day-ahead bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct ArComponent {
    /// Weekly `β_j` followed by `α_{1,k}, α_{2,k}` pairs for ARWDY.
    pub mean_coeffs: Vec<f64>,
    pub temperature_coeff: Option<f64>,
    /// `φ_1..φ_p`.
    pub ar_coeffs: Vec<f64>,
    pub residual_variance: f64,
}

impl ArComponent {
    pub fn ar_order(&self) -> usize {
        self.ar_coeffs.len()
    }

    fn mean(&self, variant: ArVariant, t: usize, temp: Option<f64>) -> f64 {
        let row = mean_row(variant, t, None);
        dot(&row, &self.mean_coeffs) + self.temperature_coeff.zip(temp).map_or(0.0, |(c, x)| c * x)
    }
}

/// Fitted ARWD/ARWDY model. Without temperature there is a single component;
/// with temperature there is one per day-ahead bucket 1..4.
#[derive(Debug, Clone, PartialEq)]
pub struct ArPointModel {
    pub variant: ArVariant,
    pub temperature: TemperatureMode,
    pub components: Vec<ArComponent>,
}

impl ArPointModel {
    pub fn component(&self, days_ahead: usize) -> &ArComponent {
        if self.components.len() == 1 {
            &self.components[0]
        } else {
            &self.components[days_ahead - 1]
        }
    }
}

fn temps_for(mode: TemperatureMode, temps: Option<&TemperatureData>) -> Result<Option<&TemperatureData>> {
    match (mode, temps) {
        (TemperatureMode::None, _) => Ok(None),
        (_, Some(t)) => Ok(Some(t)),
        (_, None) => Err(invalid("temperature mode requires temperature data")),
    }
}

/// Fits the mean profile by least squares on the year ending at
/// `split.train_end`, then an AIC-selected Burg AR model on the residuals.
pub fn fit_ar_point(
    series: &LoadSeries,
    variant: ArVariant,
    temps: Option<&TemperatureData>,
    mode: TemperatureMode,
    split: &SplitSpec,
) -> Result<ArPointModel> {
    let temps = temps_for(mode, temps)?;
    let end = split.train_end.min(series.len());
    if end < TRAIN_SPAN {
        return Err(Error::InsufficientData {
            required: TRAIN_SPAN,
            actual: end,
        });
    }
    let start = end - TRAIN_SPAN + 1;
    let buckets = if temps.is_some() { 4 } else { 1 };
    let mut components = Vec::with_capacity(buckets);
    for d in 1..=buckets {
        let temp_at = |t: usize| temps.and_then(|td| td.training_input(mode, t, d));
        let mut x = Matrix::zeros(0, 0);
        let mut y = Vec::new();
        for t in start..=end {
            if !series.is_observed(t) {
                continue;
            }
            let temp = temp_at(t);
            if temps.is_some() && temp.is_none() {
                continue;
            }
            x.push_row(&mean_row(variant, t, temp))?;
            y.push(series.value(t));
        }
        let beta = ols_fit(&x, &y)?;
        let (mean_coeffs, temperature_coeff) = if temps.is_some() {
            (beta[..beta.len() - 1].to_vec(), Some(beta[beta.len() - 1]))
        } else {
            (beta, None)
        };
        let mut component = ArComponent {
            mean_coeffs,
            temperature_coeff,
            ar_coeffs: Vec::new(),
            residual_variance: 0.0,
        };
        let residuals: Vec<f64> = (start..=end)
            .map(|t| {
                let temp = temp_at(t);
                if series.is_observed(t) && (temps.is_none() || temp.is_some()) {
                    series.value(t) - component.mean(variant, t, temp)
                } else {
                    0.0
                }
            })
            .collect();
        let (order, variance) = select_ar(&residuals, &y)?;
        if order > 0 {
            let (phi, var) = burg(&residuals, order)?;
            component.ar_coeffs = phi;
            component.residual_variance = var;
        } else {
            component.residual_variance = variance;
        }
        components.push(component);
    }
    Ok(ArPointModel {
        variant,
        temperature: mode,
        components,
    })
}

/// AIC order for a residual series, treating numerically zero residuals as
/// white noise of order 0.
fn select_ar(residuals: &[f64], loads: &[f64]) -> Result<(usize, f64)> {
    let n = residuals.len() as f64;
    let energy = residuals.iter().map(|r| r * r).sum::<f64>() / n;
    let scale = loads.iter().map(|v| v * v).sum::<f64>() / loads.len().max(1) as f64;
    if energy <= 1e-20 * scale.max(f64::MIN_POSITIVE) {
        return Ok((0, energy));
    }
    Ok((aic_select(residuals, default_p_max(residuals.len()))?, energy))
}

/// Residual predictions for steps `1..=HORIZONS` after `origin`.
///
/// History residuals come from observed loads; an unobserved hour (or one
/// without a temperature input) is replaced by its one-step prediction.
pub(crate) fn residual_path(
    phi: &[f64],
    origin: usize,
    mut history: impl FnMut(usize) -> Option<f64>,
) -> Vec<f64> {
    let p = phi.len();
    if p == 0 {
        return vec![0.0; HORIZONS];
    }
    // a week of slack lets the recursion bridge gaps shortly before the origin
    let lo = origin.saturating_sub(p + HOURS_PER_WEEK - 1).max(1);
    let mut buf: Vec<f64> = Vec::with_capacity(origin + 1 - lo + HORIZONS);
    let predict = |buf: &[f64]| -> f64 {
        phi.iter()
            .enumerate()
            .map(|(k, c)| buf.len().checked_sub(k + 1).map_or(0.0, |i| c * buf[i]))
            .sum()
    };
    for t in lo..=origin {
        let r = history(t).unwrap_or_else(|| predict(&buf));
        buf.push(r);
    }
    for _ in 0..HORIZONS {
        let r = predict(&buf);
        buf.push(r);
    }
    buf.split_off(buf.len() - HORIZONS)
}

/// Forecasts for horizons `1..=96` after `origin`: mean profile plus the AR
/// recursion on residuals.
pub fn forecast_ar_point(
    model: &ArPointModel,
    series: &LoadSeries,
    temps: Option<&TemperatureData>,
    origin: usize,
) -> Result<Vec<f64>> {
    let temps = temps_for(model.temperature, temps)?;
    if origin > series.len() {
        return Err(Error::InsufficientData {
            required: origin,
            actual: series.len(),
        });
    }
    let day = day_index(origin);
    let mode = model.temperature;
    let mut out = vec![f64::NAN; HORIZONS];
    for (c, component) in model.components.iter().enumerate() {
        let d = c + 1;
        let hist_temp = |t: usize| temps.and_then(|td| td.training_input(mode, t, d));
        let path = residual_path(&component.ar_coeffs, origin, |t| {
            let temp = hist_temp(t);
            (series.is_observed(t) && (temps.is_none() || temp.is_some()))
                .then(|| series.value(t) - component.mean(model.variant, t, temp))
        });
        for h in 1..=HORIZONS {
            if model.components.len() > 1 && horizon_day(h) != d {
                continue;
            }
            let t = origin + h;
            let temp = match temps {
                Some(td) => Some(td.forecast_input(mode, day, t).ok_or_else(|| {
                    invalid(format!("no {} temperature for index {t} at day {day}", mode.as_str()))
                })?),
                None => None,
            };
            out[h - 1] = component.mean(model.variant, t, temp) + path[h - 1];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::origin_index;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::collections::BTreeMap;

    fn profile(t: usize) -> f64 {
        let w = period_of_week(t) as f64;
        20.0 + 5.0 * (2.0 * PI * w / 24.0).sin() + if w > 120.0 { 3.0 } else { 0.0 }
    }

    fn series(values: Vec<f64>) -> LoadSeries {
        let start = NaiveDate::from_ymd_opt(2014, 1, 6).unwrap().and_hms_opt(0, 0, 0).unwrap();
        LoadSeries::observed("ar", start, values).unwrap()
    }

    fn ar2_noise(n: usize, phi: [f64; 2], sd: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sd).unwrap();
        let mut x = vec![0.0; n + 200];
        for t in 2..x.len() {
            x[t] = phi[0] * x[t - 1] + phi[1] * x[t - 2] + normal.sample(&mut rng);
        }
        x.split_off(200)
    }

    const DAYS: usize = 380;

    #[test]
    fn noiseless_weekly_signal() {
        let s = series((1..=DAYS * 24).map(profile).collect());
        let split = SplitSpec::from_days(370, 5).unwrap();
        let m = fit_ar_point(&s, ArVariant::Arwd, None, TemperatureMode::None, &split).unwrap();
        assert_eq!(m.components[0].ar_order(), 0);
        for w in 1..=168 {
            assert!((m.components[0].mean_coeffs[w - 1] - profile(w)).abs() < 1e-9);
        }
        let origin = origin_index(370);
        let f = forecast_ar_point(&m, &s, None, origin).unwrap();
        for h in 1..=96 {
            assert!((f[h - 1] - profile(origin + h)).abs() < 1e-9);
        }
    }

    #[test]
    fn annual_terms_reduce_residual_variance() {
        let noise = ar2_noise(DAYS * 24, [0.0, 0.0], 0.5, 3);
        let v: Vec<f64> = (1..=DAYS * 24)
            .map(|t| profile(t) + 4.0 * (2.0 * PI * t as f64 / ANNUAL_PERIOD).cos() + noise[t - 1])
            .collect();
        let s = series(v);
        let split = SplitSpec::from_days(370, 5).unwrap();
        let wd = fit_ar_point(&s, ArVariant::Arwd, None, TemperatureMode::None, &split).unwrap();
        let wdy = fit_ar_point(&s, ArVariant::Arwdy, None, TemperatureMode::None, &split).unwrap();
        assert_eq!(wdy.components[0].mean_coeffs.len(), 172);
        assert!(wdy.components[0].residual_variance < wd.components[0].residual_variance);
    }

    #[test]
    fn recovers_ar2_residual_coefficients() {
        let noise = ar2_noise(DAYS * 24, [0.6, -0.25], 1.0, 5);
        let s = series((1..=DAYS * 24).map(|t| profile(t) + noise[t - 1]).collect());
        let split = SplitSpec::from_days(370, 5).unwrap();
        let m = fit_ar_point(&s, ArVariant::Arwd, None, TemperatureMode::None, &split).unwrap();
        let phi = &m.components[0].ar_coeffs;
        assert!(phi.len() >= 2, "{phi:?}");
        assert!((phi[0] - 0.6).abs() < 0.05 && (phi[1] + 0.25).abs() < 0.05, "{phi:?}");
    }

    #[test]
    fn residual_recursion_is_geometric() {
        let path = residual_path(&[0.8], 10, |t| Some(if t == 10 { 1.0 } else { 0.0 }));
        for (k, r) in path.iter().take(5).enumerate() {
            assert!((r - 0.8f64.powi(k as i32 + 1)).abs() < 1e-12);
        }
        assert!(path.windows(2).all(|w| w[1].abs() <= w[0].abs()));
        assert!(residual_path(&[], 10, |_| Some(1.0)).iter().all(|r| *r == 0.0));
    }

    #[test]
    fn residual_recursion_fills_gaps_with_predictions() {
        // the last observed residual is 1.0 two hours before the origin
        let path = residual_path(&[0.5], 10, |t| match t {
            8 => Some(1.0),
            9 | 10 => None,
            _ => Some(0.0),
        });
        assert!((path[0] - 0.125).abs() < 1e-12);
    }

    #[test]
    fn temperature_enters_linearly_per_bucket() {
        let n = DAYS * 24;
        let actual: Vec<f64> = (1..=n).map(|t| 10.0 + 8.0 * (2.0 * PI * t as f64 / 240.0).sin()).collect();
        let mut vintages = BTreeMap::new();
        for day in 1..DAYS - 4 {
            let o = origin_index(day);
            vintages.insert(day, (1..=96).map(|h| actual[o + h - 1]).collect());
        }
        let temps = TemperatureData::new(actual.clone(), vintages).unwrap();
        let s = series((1..=n).map(|t| profile(t) - 0.7 * actual[t - 1]).collect());
        let split = SplitSpec::from_days(370, 5).unwrap();
        let m = fit_ar_point(&s, ArVariant::Arwd, Some(&temps), TemperatureMode::Forecast, &split).unwrap();
        assert_eq!(m.components.len(), 4);
        for c in &m.components {
            assert!((c.temperature_coeff.unwrap() + 0.7).abs() < 1e-8);
        }
        let origin = origin_index(371);
        let ex_ante = forecast_ar_point(&m, &s, Some(&temps), origin).unwrap();
        let ma = fit_ar_point(&s, ArVariant::Arwd, Some(&temps), TemperatureMode::Actual, &split).unwrap();
        let ex_post = forecast_ar_point(&ma, &s, Some(&temps), origin).unwrap();
        for h in 1..=96 {
            let truth = s.value(origin + h);
            assert!((ex_ante[h - 1] - truth).abs() < 1e-6);
            assert!((ex_ante[h - 1] - ex_post[h - 1]).abs() < 1e-6);
        }
        assert!(fit_ar_point(&s, ArVariant::Arwd, None, TemperatureMode::Actual, &split).is_err());
    }

    #[test]
    fn needs_a_year_of_history() {
        let s = series(vec![1.0; 200 * 24]);
        let split = SplitSpec::from_days(190, 5).unwrap();
        assert!(matches!(
            fit_ar_point(&s, ArVariant::Arwd, None, TemperatureMode::None, &split),
            Err(Error::InsufficientData { .. })
        ));
    }
}
