//! Synthetic LV feeders.
//!
//! A feeder is the sum of `n_customers` household processes plus optional
//! feeder-wide components. Weather depends on the seed only, so every feeder
//! generated with one seed shares the same temperature record; household
//! randomness is drawn from a stream keyed by `(seed, feeder_id)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal, StandardNormal};

use crate::calendar::{origin_index, HORIZONS, HOURS_PER_DAY};
use crate::error::{invalid, Result};
use crate::series::{LoadSeries, TemperatureData};

/// Hinge temperature below which heating demand appears.
const HEATING_BASE_C: f64 = 15.0;
/// Mean household scale in kWh per hour.
const HOUSEHOLD_SCALE: f64 = 0.4;
/// Overnight storage heater block size in kWh per hour at full winter demand.
const OSH_BLOCK_KWH: f64 = 3.0;
/// Length of the nightly storage heater charge.
const OSH_HOURS: usize = 5;

#[rustfmt::skip]
const WEEKDAY_PROFILE: [f64; 24] = [
    0.55, 0.45, 0.40, 0.38, 0.38, 0.42, 0.65, 0.95, 0.85, 0.65, 0.60, 0.62,
    0.68, 0.62, 0.60, 0.66, 0.85, 1.25, 1.55, 1.50, 1.30, 1.10, 0.90, 0.70,
];
#[rustfmt::skip]
const WEEKEND_PROFILE: [f64; 24] = [
    0.62, 0.50, 0.44, 0.40, 0.38, 0.40, 0.48, 0.62, 0.85, 1.00, 1.05, 1.08,
    1.05, 0.95, 0.88, 0.90, 1.00, 1.30, 1.50, 1.45, 1.28, 1.10, 0.92, 0.75,
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub feeder_id: String,
    pub n_customers: usize,
    pub days: usize,
    pub seed: u64,
    /// First day of the series (00:00).
    pub start: NaiveDate,
    /// Relative amplitude of the annual cycle, peaking in mid-January.
    pub annual_amplitude: f64,
    /// kWh per °C per customer below the heating base.
    pub temp_sensitivity: f64,
    pub osh_fraction: f64,
    pub noise_ar1: f64,
    /// Stationary standard deviation of household noise, relative to the household scale.
    pub noise_sd: f64,
    /// Per customer-hour probability of an appliance spike.
    pub spike_rate: f64,
    /// AR(2) coefficients of a feeder-wide residual.
    pub common_ar: [f64; 2],
    /// Innovation standard deviation of the feeder-wide residual, per customer.
    pub common_noise: f64,
    /// Stationary standard deviation of a slow daily AR(1) in the log of the feeder level.
    pub level_sd: f64,
    /// Day-to-day coefficient of that AR(1), in [0, 1).
    pub level_ar: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            feeder_id: "feeder".into(),
            n_customers: 50,
            days: 120,
            seed: 0,
            start: NaiveDate::from_ymd_opt(2014, 3, 17).expect("valid date"),
            annual_amplitude: 0.25,
            temp_sensitivity: 0.0,
            osh_fraction: 0.0,
            noise_ar1: 0.5,
            noise_sd: 0.3,
            spike_rate: 0.02,
            common_ar: [0.0, 0.0],
            common_noise: 0.0,
            level_sd: 0.0,
            level_ar: 0.95,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_customers == 0 {
            return Err(invalid("n_customers must be at least 1"));
        }
        if self.days < 35 {
            return Err(invalid(format!("days must be at least 35, got {}", self.days)));
        }
        for (name, v) in [
            ("annual_amplitude", self.annual_amplitude),
            ("osh_fraction", self.osh_fraction),
            ("spike_rate", self.spike_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        for (name, v) in [("noise_ar1", self.noise_ar1), ("level_ar", self.level_ar)] {
            if !(0.0..1.0).contains(&v) {
                return Err(invalid(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        for (name, v) in [
            ("temp_sensitivity", self.temp_sensitivity),
            ("noise_sd", self.noise_sd),
            ("common_noise", self.common_noise),
            ("level_sd", self.level_sd),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        let [a1, a2] = self.common_ar;
        // AR(2) stationarity triangle.
        if !(a2.abs() < 1.0 && a1 + a2 < 1.0 && a2 - a1 < 1.0) {
            return Err(invalid(format!("common_ar {:?} is not stationary", self.common_ar)));
        }
        Ok(())
    }

    fn start_time(&self) -> NaiveDateTime {
        self.start.and_hms_opt(0, 0, 0).expect("midnight exists")
    }
}

/// FNV-1a over the seed and the feeder id.
pub(crate) fn stream_key(seed: u64, feeder_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(feeder_id.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Seasonal phase of a date: 1 in mid-January, −1 in mid-July.
fn winter_phase(date: NaiveDate) -> f64 {
    (2.0 * PI * (date.ordinal0() as f64 - 14.0) / 365.0).cos()
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("finite sd")
}

/// Hourly temperature for `days` days from `start`, with one 96-hour vintage
/// per day issued at that day's origin.
pub fn generate_weather(seed: u64, start: NaiveDate, days: usize) -> TemperatureData {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_key(seed, "\u{0}weather"));
    let n = days * HOURS_PER_DAY;
    let total = n + HORIZONS;
    let phi: f64 = 0.95;
    let shock = normal(0.7);
    let mut ar = shock.sample(&mut rng) / (1.0 - phi * phi).sqrt();
    let mut temps = Vec::with_capacity(total);
    for i in 0..total {
        let date = start + Duration::days((i / HOURS_PER_DAY) as i64);
        let hour = (i % HOURS_PER_DAY) as f64;
        ar = phi * ar + shock.sample(&mut rng);
        let daily = 3.0 * (2.0 * PI * (hour - 9.0) / 24.0).sin();
        temps.push(10.0 - 7.0 * winter_phase(date) + daily + ar);
    }
    let step = normal(0.25);
    let mut forecasts = BTreeMap::new();
    for day in 1..=days {
        let origin = origin_index(day);
        let mut err = 0.2 * rng.sample::<f64, _>(StandardNormal);
        let vintage = (1..=HORIZONS)
            .map(|h| {
                err += step.sample(&mut rng);
                temps[origin + h - 1] + err
            })
            .collect();
        forecasts.insert(day, vintage);
    }
    temps.truncate(n);
    TemperatureData { actual: temps, forecasts }
}

struct Household {
    scale: f64,
    shift: isize,
    osh: bool,
    noise: f64,
}

/// Generates one feeder and the weather it was exposed to.
pub fn generate_synthetic_feeder(cfg: &SynthConfig) -> Result<(LoadSeries, TemperatureData)> {
    cfg.validate()?;
    let weather = generate_weather(cfg.seed, cfg.start, cfg.days);
    let mut rng = ChaCha8Rng::seed_from_u64(stream_key(cfg.seed, &cfg.feeder_id));
    let n = cfg.days * HOURS_PER_DAY;

    let scale_dist = LogNormal::new(HOUSEHOLD_SCALE.ln() - 0.045, 0.3).expect("valid lognormal");
    let n_osh = (cfg.osh_fraction * cfg.n_customers as f64).round() as usize;
    let mut households: Vec<Household> = (0..cfg.n_customers)
        .map(|c| Household {
            scale: scale_dist.sample(&mut rng),
            shift: rng.random_range(-1i64..=1) as isize,
            osh: c < n_osh,
            noise: rng.sample::<f64, _>(StandardNormal),
        })
        .collect();

    let innov_sd = (1.0 - cfg.noise_ar1 * cfg.noise_ar1).sqrt();
    let spike_size = Exp::new(1.0 / (2.5 * HOUSEHOLD_SCALE)).expect("positive rate");
    let common_shock = normal(cfg.common_noise * HOUSEHOLD_SCALE * cfg.n_customers as f64);
    let level_shock = normal(cfg.level_sd * (1.0 - cfg.level_ar * cfg.level_ar).sqrt());
    let (mut c1, mut c2) = (0.0f64, 0.0f64);
    let mut log_level = normal(cfg.level_sd).sample(&mut rng);
    let mut osh_start = 1isize;

    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let date = cfg.start + Duration::days((i / HOURS_PER_DAY) as i64);
        let hour = (i % HOURS_PER_DAY) as isize;
        if hour == 0 {
            log_level = cfg.level_ar * log_level + level_shock.sample(&mut rng);
            // Storage heaters switch on by a feeder-wide tariff signal that moves night to night.
            osh_start = rng.random_range(-1i64..=3) as isize;
        }
        let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        let profile = if weekend { &WEEKEND_PROFILE } else { &WEEKDAY_PROFILE };
        let season = 1.0 + cfg.annual_amplitude * winter_phase(date);
        let osh_factor = 0.4 + 0.3 * (1.0 + winter_phase(date));
        let heating = cfg.temp_sensitivity * (HEATING_BASE_C - weather.actual[i]).max(0.0);
        let in_osh_block = (0..OSH_HOURS as isize).any(|k| (osh_start + k).rem_euclid(24) == hour);

        let mut total = 0.0;
        for hh in &mut households {
            hh.noise = cfg.noise_ar1 * hh.noise + innov_sd * rng.sample::<f64, _>(StandardNormal);
            let slot = (hour + hh.shift).rem_euclid(24) as usize;
            let mut load = hh.scale * (profile[slot] * season + cfg.noise_sd * hh.noise) + heating;
            if rng.random::<f64>() < cfg.spike_rate {
                load += spike_size.sample(&mut rng);
            }
            if hh.osh && in_osh_block {
                load += OSH_BLOCK_KWH * osh_factor;
            }
            total += load.max(0.0);
        }
        let common = cfg.common_ar[0] * c1 + cfg.common_ar[1] * c2 + common_shock.sample(&mut rng);
        c2 = c1;
        c1 = common;
        values.push((total * log_level.exp() + common).max(0.0));
    }
    let series = LoadSeries::observed(cfg.feeder_id.clone(), cfg.start_time(), values)?;
    Ok((series, weather))
}

/// Mean kWh per day over the observed hours of a series.
pub fn mean_daily_demand(series: &LoadSeries) -> Option<f64> {
    series.observed_mean(1, series.len()).map(|m| m * HOURS_PER_DAY as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_load_csv, parse_temperature_csv, write_load_csv, write_temperature_csv};
    use tempfile::tempdir;

    fn cfg(n: usize, days: usize, seed: u64) -> SynthConfig {
        SynthConfig { n_customers: n, days, seed, ..SynthConfig::default() }
    }

    fn autocorrelation(x: &[f64], lag: usize) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let var: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
        let cov: f64 = x.windows(lag + 1).map(|w| (w[0] - m) * (w[lag] - m)).sum();
        cov / var
    }

    fn correlation(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn same_config_same_output() {
        let c = SynthConfig { osh_fraction: 0.2, temp_sensitivity: 0.05, common_noise: 0.1, common_ar: [1.2, -0.3], level_sd: 0.05, ..cfg(20, 40, 9) };
        let (a, ta) = generate_synthetic_feeder(&c).unwrap();
        let (b, tb) = generate_synthetic_feeder(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (other, _) = generate_synthetic_feeder(&SynthConfig { seed: 10, ..c.clone() }).unwrap();
        assert_ne!(a.values(), other.values());
    }

    #[test]
    fn feeders_share_weather_but_not_households() {
        let a = SynthConfig { feeder_id: "a".into(), ..cfg(10, 35, 4) };
        let b = SynthConfig { feeder_id: "b".into(), ..cfg(10, 35, 4) };
        let (la, ta) = generate_synthetic_feeder(&a).unwrap();
        let (lb, tb) = generate_synthetic_feeder(&b).unwrap();
        assert_eq!(ta, tb);
        assert_ne!(la.values(), lb.values());
    }

    #[test]
    fn larger_feeders_are_more_weekly() {
        let small = generate_synthetic_feeder(&cfg(10, 140, 1)).unwrap().0;
        let large = generate_synthetic_feeder(&cfg(1000, 140, 1)).unwrap().0;
        let (rs, rl) = (autocorrelation(small.values(), 168), autocorrelation(large.values(), 168));
        assert!(rl > rs, "lag-168 autocorrelation {rl} (n=1000) vs {rs} (n=10)");
    }

    #[test]
    fn no_temperature_link_without_sensitivity() {
        let days = 420;
        let c = SynthConfig { annual_amplitude: 0.0, ..cfg(20, days, 3) };
        let (load, temps) = generate_synthetic_feeder(&c).unwrap();
        let r = correlation(load.values(), &temps.actual);
        // The daily temperature cycle and the load profile are both diurnal, so
        // compare within a single hour of the day.
        let at_hour = |x: &[f64]| x.iter().skip(3).step_by(24).copied().collect::<Vec<_>>();
        let r3 = correlation(&at_hour(load.values()), &at_hour(&temps.actual));
        assert!(r3.abs() < 4.0 / (days as f64).sqrt(), "hour-3 correlation {r3}");
        let sensitive = SynthConfig { temp_sensitivity: 0.1, ..c };
        let (load_s, _) = generate_synthetic_feeder(&sensitive).unwrap();
        let rs = correlation(&at_hour(load_s.values()), &at_hour(&temps.actual));
        assert!(rs < -0.5, "sensitive feeder correlation {rs}, insensitive {r}");
    }

    #[test]
    fn relative_noise_falls_like_inverse_root_n() {
        let sizes = [1usize, 4, 16, 64, 256];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &n in &sizes {
            let c = SynthConfig { annual_amplitude: 0.0, ..cfg(n, 35, 11) };
            let (load, _) = generate_synthetic_feeder(&c).unwrap();
            let v = load.values();
            // Deviation from the hour-of-week mean isolates the noise.
            let mut mean = [0.0; 168];
            for (i, x) in v.iter().enumerate() {
                mean[i % 168] += x / 5.0;
            }
            let resid: Vec<f64> = v.iter().enumerate().map(|(i, x)| x - mean[i % 168]).collect();
            let sd = (resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64).sqrt();
            let m = v.iter().sum::<f64>() / v.len() as f64;
            xs.push(n as f64);
            ys.push(sd / m);
        }
        let fit = crate::metrics::power_law_fit(&xs, &ys).unwrap();
        assert!((-0.6..=-0.4).contains(&fit.exponent), "slope {}", fit.exponent);
    }

    #[test]
    fn loads_are_non_negative() {
        let c = SynthConfig { osh_fraction: 0.5, noise_sd: 2.0, common_noise: 0.5, ..cfg(3, 60, 5) };
        let (load, _) = generate_synthetic_feeder(&c).unwrap();
        assert!(load.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn storage_heaters_dominate_nights() {
        let base = SynthConfig { feeder_id: "x".into(), ..cfg(20, 35, 2) };
        let (plain, _) = generate_synthetic_feeder(&base).unwrap();
        let (osh, _) = generate_synthetic_feeder(&SynthConfig { osh_fraction: 1.0, ..base }).unwrap();
        let night = |s: &LoadSeries| s.values().iter().skip(2).step_by(24).sum::<f64>();
        assert!(night(&osh) > 3.0 * night(&plain));
    }

    #[test]
    fn vintages_drift_away_with_horizon() {
        let w = generate_weather(8, NaiveDate::from_ymd_opt(2014, 3, 17).unwrap(), 200);
        assert_eq!(w.forecasts.len(), 200);
        let mut err = [0.0; 4];
        let mut count = [0usize; 4];
        for day in 1..=195 {
            for h in 1..=HORIZONS {
                let t = origin_index(day) + h;
                err[(h - 1) / 24] += (w.forecast_at(day, t).unwrap() - w.actual_at(t).unwrap()).abs();
                count[(h - 1) / 24] += 1;
            }
        }
        let mae: Vec<f64> = err.iter().zip(count).map(|(e, c)| e / c as f64).collect();
        assert!(mae.windows(2).all(|p| p[1] > p[0]), "{mae:?}");
    }

    #[test]
    fn invalid_configs() {
        assert!(generate_synthetic_feeder(&cfg(0, 40, 1)).is_err());
        assert!(generate_synthetic_feeder(&cfg(5, 34, 1)).is_err());
        assert!(generate_synthetic_feeder(&SynthConfig { noise_ar1: 1.0, ..cfg(5, 40, 1) }).is_err());
        assert!(generate_synthetic_feeder(&SynthConfig { osh_fraction: 1.5, ..cfg(5, 40, 1) }).is_err());
        assert!(generate_synthetic_feeder(&SynthConfig { common_ar: [1.0, 0.2], ..cfg(5, 40, 1) }).is_err());
        assert!(generate_synthetic_feeder(&SynthConfig { level_ar: 1.0, ..cfg(5, 40, 1) }).is_err());
        assert!(generate_synthetic_feeder(&SynthConfig { level_sd: -0.1, ..cfg(5, 40, 1) }).is_err());
    }

    #[test]
    fn level_wander_is_a_persistent_daily_factor() {
        let calm = cfg(50, 200, 4);
        let wandering = SynthConfig { level_sd: 0.1, level_ar: 0.95, ..calm.clone() };
        let (a, _) = generate_synthetic_feeder(&calm).unwrap();
        let (b, _) = generate_synthetic_feeder(&wandering).unwrap();
        // the draws are shared, so the ratio is the level factor itself
        let log_ratio: Vec<f64> = a
            .values()
            .chunks(24)
            .zip(b.values().chunks(24))
            .map(|(x, y)| (y.iter().sum::<f64>() / x.iter().sum::<f64>()).ln())
            .collect();
        let n = log_ratio.len() as f64;
        let m = log_ratio.iter().sum::<f64>() / n;
        let sd = (log_ratio.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
        assert!((0.04..0.2).contains(&sd), "sd {sd}");
        let lag1 = correlation(&log_ratio[..log_ratio.len() - 1], &log_ratio[1..]);
        assert!(lag1 > 0.8, "lag-1 correlation {lag1}");
    }

    #[test]
    fn generated_data_round_trips_through_csv() {
        let c = SynthConfig { feeder_id: "f07".into(), ..cfg(5, 36, 21) };
        let (load, temps) = generate_synthetic_feeder(&c).unwrap();
        let d = tempdir().unwrap();
        let lp = d.path().join("f07.csv");
        write_load_csv(&load, &lp).unwrap();
        let (ap, fp) = (d.path().join("a.csv"), d.path().join("f.csv"));
        write_temperature_csv(&temps, load.start(), &ap, &fp).unwrap();
        let back = parse_load_csv(&lp).unwrap();
        assert_eq!(back, load);
        let tb = parse_temperature_csv(&ap, &fp, load.start()).unwrap();
        assert_eq!(tb, temps);
    }
}
