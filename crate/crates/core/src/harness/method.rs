//! Method specifications as written in configs, and the fitted state each
//! method carries through a rolling evaluation.

use std::fmt;

use crate::ar::{self, ArPointModel, ArProbModel, ArVariant};
use crate::benchmarks::{self, BenchmarkKind, BenchmarkSpec, EmpiricalTemplate};
use crate::calendar::{self, HORIZONS};
use crate::error::{invalid, Error, Result};
use crate::hwt::{self, EnsembleSpec, HwtFit};
use crate::kde::{self, KdeMethod, KdeModel};
use crate::seasonal_qr::{self, StDesignSpec};
use crate::series::{LoadSeries, QuantileForecast, SplitSpec, TemperatureData, TemperatureMode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodKind {
    Benchmark(BenchmarkSpec),
    Ar(ArVariant),
    Hwt,
    /// ST when `trend` is set, SnT otherwise.
    St { trend: bool },
    Kde(KdeMethod),
}

/// A forecasting method plus the temperature input it receives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSpec {
    pub kind: MethodKind,
    pub temperature: TemperatureMode,
}

impl MethodSpec {
    /// Parses `NAME` or `NAME@mode`; `default_mode` applies to
    /// temperature-capable methods written without a mode.
    pub fn parse(text: &str, default_mode: TemperatureMode) -> Result<Self> {
        let text = text.trim();
        let (name, mode) = match text.split_once('@') {
            Some((n, m)) => (n.trim(), Some(TemperatureMode::parse(m)?)),
            None => (text, None),
        };
        let upper = name.to_ascii_uppercase();
        let kind = match upper.as_str() {
            "LD" => MethodKind::Benchmark(BenchmarkSpec::new(BenchmarkKind::LastDay)),
            "LW" => MethodKind::Benchmark(BenchmarkSpec::new(BenchmarkKind::LastWeek)),
            "LY" => MethodKind::Benchmark(BenchmarkSpec::new(BenchmarkKind::LastYear)),
            "SMA-OPT" => MethodKind::Benchmark(BenchmarkSpec::new(BenchmarkKind::SmaOpt)),
            "EMPIRICAL" => MethodKind::Benchmark(BenchmarkSpec::new(BenchmarkKind::Empirical)),
            "ARWD" => MethodKind::Ar(ArVariant::Arwd),
            "ARWDY" => MethodKind::Ar(ArVariant::Arwdy),
            "HWT" => MethodKind::Hwt,
            "ST" => MethodKind::St { trend: true },
            "SNT" => MethodKind::St { trend: false },
            _ => {
                if let Some(p) = upper.strip_prefix("SMA-").and_then(|r| r.strip_suffix('W')) {
                    let p: usize = p.parse().map_err(|_| invalid(format!("unknown method '{name}'")))?;
                    MethodKind::Benchmark(BenchmarkSpec::sma(p)?)
                } else if let Some(k) = KdeMethod::parse(name) {
                    MethodKind::Kde(k)
                } else {
                    return Err(invalid(format!("unknown method '{name}'")));
                }
            }
        };
        let temperature = match kind {
            MethodKind::Ar(_) | MethodKind::St { .. } => mode.unwrap_or(default_mode),
            MethodKind::Kde(k) => match mode {
                Some(m) if m != k.temperature_mode() => {
                    return Err(invalid(format!("{} has a fixed temperature input ({})", k.name(), k.temperature_mode().as_str())))
                }
                _ => k.temperature_mode(),
            },
            _ => match mode {
                Some(m) if m != TemperatureMode::None => {
                    return Err(invalid(format!("{name} does not use temperature")))
                }
                _ => TemperatureMode::None,
            },
        };
        Ok(Self { kind, temperature })
    }

    /// Whether the method can be run with each of the three temperature inputs.
    pub fn supports_temperature(&self) -> bool {
        matches!(self.kind, MethodKind::Ar(_) | MethodKind::St { .. })
            || matches!(self.kind, MethodKind::Kde(k) if k.is_conditional())
    }

    /// The same method run with another temperature input. CKD variants map
    /// onto CKD-W, CKD-WTf and CKD-WTa.
    pub fn with_temperature(&self, mode: TemperatureMode) -> Result<Self> {
        match self.kind {
            MethodKind::Ar(_) | MethodKind::St { .. } => Ok(Self { kind: self.kind, temperature: mode }),
            MethodKind::Kde(k) if k.is_conditional() => {
                let k = match mode {
                    TemperatureMode::None => KdeMethod::CkdW,
                    TemperatureMode::Forecast => KdeMethod::CkdWTf,
                    TemperatureMode::Actual => KdeMethod::CkdWTa,
                };
                Ok(Self { kind: MethodKind::Kde(k), temperature: mode })
            }
            _ => Err(invalid(format!("{self} does not use temperature"))),
        }
    }

    /// Name of the method family, without the temperature input.
    pub fn base_name(&self) -> String {
        match self.kind {
            MethodKind::Benchmark(b) => match b.kind {
                BenchmarkKind::LastDay => "LD".into(),
                BenchmarkKind::LastWeek => "LW".into(),
                BenchmarkKind::LastYear => "LY".into(),
                BenchmarkKind::SmaP => format!("SMA-{}W", b.p),
                BenchmarkKind::SmaOpt => "SMA-opt".into(),
                BenchmarkKind::Empirical => "Empirical".into(),
            },
            MethodKind::Ar(ArVariant::Arwd) => "ARWD".into(),
            MethodKind::Ar(ArVariant::Arwdy) => "ARWDY".into(),
            MethodKind::Hwt => "HWT".into(),
            MethodKind::St { trend: true } => "ST".into(),
            MethodKind::St { trend: false } => "SnT".into(),
            MethodKind::Kde(k) if k.is_conditional() => "CKD".into(),
            MethodKind::Kde(k) => k.name().into(),
        }
    }

    pub fn uses_temperature(&self) -> bool {
        self.temperature != TemperatureMode::None
    }

    /// Whether the method issues a full quantile grid.
    pub fn is_probabilistic(&self) -> bool {
        !matches!(
            self.kind,
            MethodKind::Benchmark(BenchmarkSpec {
                kind: BenchmarkKind::LastDay | BenchmarkKind::LastWeek | BenchmarkKind::LastYear | BenchmarkKind::SmaP | BenchmarkKind::SmaOpt,
                ..
            })
        )
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            MethodKind::Kde(k) => f.write_str(k.name()),
            MethodKind::Ar(_) | MethodKind::St { .. } if self.uses_temperature() => {
                write!(f, "{}@{}", self.base_name(), self.temperature.as_str())
            }
            _ => f.write_str(&self.base_name()),
        }
    }
}

/// One issued forecast: the point path always, the quantile grid for
/// probabilistic methods.
#[derive(Debug, Clone, PartialEq)]
pub struct IssuedForecast {
    pub origin: usize,
    pub point: Vec<f64>,
    pub quantiles: Option<QuantileForecast>,
}

/// Median of a quantile row, interpolating when 0.5 is not on the grid.
pub fn row_median(row: &[f64], taus: &[f64]) -> f64 {
    match taus.iter().position(|&t| t >= 0.5) {
        Some(0) => row[0],
        Some(i) if taus[i] == 0.5 => row[i],
        Some(i) => {
            let w = (0.5 - taus[i - 1]) / (taus[i] - taus[i - 1]);
            row[i - 1] + w * (row[i] - row[i - 1])
        }
        None => row[row.len() - 1],
    }
}

fn with_median(q: QuantileForecast) -> IssuedForecast {
    let point = q.rows().iter().map(|r| row_median(r, q.taus())).collect();
    IssuedForecast { origin: q.origin(), point, quantiles: Some(q) }
}

/// State fitted once per feeder before the first test origin.
#[derive(Debug, Clone)]
pub(crate) enum Fitted {
    Benchmark { spec: BenchmarkSpec, sma_window: Option<usize>, empirical: Option<EmpiricalTemplate> },
    Ar { point: ArPointModel, prob: ArProbModel },
    Hwt(Box<HwtFit>),
    /// Refitted at every origin.
    St(StDesignSpec),
    Kde(Box<KdeModel>),
}

impl Fitted {
    /// Fits on `series`, which must already end at the first test origin.
    pub(crate) fn fit(
        method: &MethodSpec,
        series: &LoadSeries,
        temps: Option<&TemperatureData>,
        split: &SplitSpec,
        taus: &[f64],
    ) -> Result<Self> {
        Ok(match method.kind {
            MethodKind::Benchmark(spec) => {
                let sma_window = match spec.kind {
                    BenchmarkKind::SmaOpt => Some(benchmarks::sma_optimal_p(series, split)?),
                    _ => None,
                };
                let empirical = match spec.kind {
                    BenchmarkKind::Empirical => Some(benchmarks::empirical_forecast(series, split, taus)?),
                    _ => None,
                };
                Self::Benchmark { spec, sma_window, empirical }
            }
            MethodKind::Ar(variant) => {
                let point = ar::fit_ar_point(series, variant, temps, method.temperature, split)?;
                let prob = ar::fit_ar_prob(series, split, variant.fourier_order(), taus)?;
                Self::Ar { point, prob }
            }
            MethodKind::Hwt => Self::Hwt(Box::new(hwt::hwt_estimate(series, split.train_end)?)),
            MethodKind::St { trend } => {
                let base = if trend { StDesignSpec::st(taus.to_vec()) } else { StDesignSpec::snt(taus.to_vec()) };
                let spec = base.with_temperature(method.temperature);
                spec.validate()?;
                Self::St(spec)
            }
            MethodKind::Kde(k) => Self::Kde(Box::new(kde::optimize_kde_params(k, series, temps, split)?)),
        })
    }

    /// Forecast from `origin`; `series` ends at the origin.
    pub(crate) fn forecast(
        &self,
        series: &LoadSeries,
        temps: Option<&TemperatureData>,
        origin: usize,
        taus: &[f64],
        seed: u64,
    ) -> Result<IssuedForecast> {
        match self {
            Self::Benchmark { spec, sma_window, empirical } => match empirical {
                Some(template) => Ok(with_median(template.forecast(origin, HORIZONS)?)),
                None => Ok(IssuedForecast {
                    origin,
                    point: benchmarks::point_forecast(*spec, series, origin, HORIZONS, *sma_window),
                    quantiles: None,
                }),
            },
            Self::Ar { point, prob } => Ok(IssuedForecast {
                origin,
                point: ar::forecast_ar_point(point, series, temps, origin)?,
                quantiles: Some(ar::forecast_ar_prob(prob, series, origin)?),
            }),
            Self::Hwt(fit) => {
                let spec = EnsembleSpec { seed: seed ^ origin as u64, ..EnsembleSpec::default() };
                let q = hwt::hwt_forecast(series, fit, origin, taus, &spec)?;
                let state = hwt::hwt_filter(series, &fit.params, &fit.init, origin).state;
                let point = hwt::hwt_point_path(&state, &fit.params, origin, HORIZONS);
                Ok(IssuedForecast { origin, point, quantiles: Some(q) })
            }
            Self::St(spec) => {
                let model = seasonal_qr::fit_st_until(series, spec, origin, temps)?;
                Ok(with_median(seasonal_qr::predict_st(&model, origin, temps)?))
            }
            Self::Kde(model) => Ok(with_median(kde::forecast_kde(model, series, temps, origin, taus)?)),
        }
    }
}

/// Temperature data visible at the origin of `day`: actuals through the
/// origin hour and vintages issued up to that day.
pub(crate) fn temperature_view(temps: &TemperatureData, day: usize) -> TemperatureData {
    let origin = calendar::origin_index(day);
    TemperatureData {
        actual: temps.actual[..origin.min(temps.actual.len())].to_vec(),
        forecasts: temps.forecasts.range(..=day).map(|(d, v)| (*d, v.clone())).collect(),
    }
}

pub(crate) fn require_temperature<'a>(method: &MethodSpec, temps: Option<&'a TemperatureData>) -> Result<Option<&'a TemperatureData>> {
    if !method.uses_temperature() {
        return Ok(None);
    }
    temps
        .map(Some)
        .ok_or_else(|| Error::InvalidInput(format!("{method} needs temperature data")))
}
