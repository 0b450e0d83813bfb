//! Line-based `key = value` evaluation configs.
//!
//! ```text
//! # comments and blank lines are ignored
//! data_dir = data
//! methods = LW, SMA-4W, ARWD@forecast, KDE-W
//! test_start = 2015-04-01      # or a 1-based day number
//! test_days = 14
//! train_end = 2015-03-31       # optional; a date, or an hourly index
//! taus = percentiles           # or a comma-separated list
//! temperature_mode = none      # default input for ST, SnT, ARWD, ARWDY
//! seed = 7
//! output_dir = out
//! ```

use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::calendar;
use crate::error::{invalid, Error, Result};
use crate::harness::method::MethodSpec;
use crate::series::{percentile_grid, validate_taus, LoadSeries, SplitSpec, TemperatureMode};

/// A day given either by date or by 1-based day number on the load clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DayRef {
    Day(usize),
    Date(NaiveDate),
}

impl DayRef {
    fn parse(s: &str) -> Result<Self> {
        if let Ok(d) = s.parse::<usize>() {
            return if d == 0 { Err(invalid("day numbers start at 1")) } else { Ok(Self::Day(d)) };
        }
        NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map(Self::Date)
            .map_err(|_| invalid(format!("'{s}' is neither a day number nor a YYYY-MM-DD date")))
    }

    pub fn resolve(&self, series: &LoadSeries) -> Result<usize> {
        match *self {
            Self::Day(d) => Ok(d),
            Self::Date(date) => series
                .day_of_date(date)
                .ok_or_else(|| invalid(format!("{date} is outside feeder {}", series.feeder_id()))),
        }
    }
}

/// Last training hour: a date (its final hour) or an hourly index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainEnd {
    Index(usize),
    Date(NaiveDate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub methods: Vec<MethodSpec>,
    pub test_start: DayRef,
    pub test_days: usize,
    /// Defaults to the end of the day before `test_start`.
    pub train_end: Option<TrainEnd>,
    pub taus: Vec<f64>,
    pub seed: u64,
    pub temperature_mode: TemperatureMode,
    pub data_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl EvalConfig {
    pub fn new(methods: Vec<MethodSpec>, test_start: DayRef, test_days: usize) -> Self {
        Self {
            methods,
            test_start,
            test_days,
            train_end: None,
            taus: percentile_grid(),
            seed: 0,
            temperature_mode: TemperatureMode::None,
            data_dir: None,
            output_dir: PathBuf::from("out"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(invalid("at least one method is required"));
        }
        if self.test_days == 0 {
            return Err(invalid("test_days must be at least 1"));
        }
        validate_taus(&self.taus)
    }

    /// Train/test split on a feeder's own clock.
    pub fn split_for(&self, series: &LoadSeries) -> Result<SplitSpec> {
        let first = self.test_start.resolve(series)?;
        let train_end = match self.train_end {
            None => {
                if first < 2 {
                    return Err(invalid("test_start leaves no training data"));
                }
                calendar::day_end(first - 1)
            }
            Some(TrainEnd::Index(t)) => t,
            Some(TrainEnd::Date(d)) => calendar::day_end(DayRef::Date(d).resolve(series)?),
        };
        SplitSpec::new(train_end, (first..first + self.test_days).collect())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::parse(&text, base)
    }

    /// Parses config text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut methods: Option<Vec<String>> = None;
        let mut test_start = None;
        let mut test_days = None;
        let mut train_end = None;
        let mut taus = None;
        let mut seed = 0u64;
        let mut temperature_mode = TemperatureMode::None;
        let mut data_dir = None;
        let mut output_dir = None;
        let mut seen = std::collections::BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let row = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { row, msg: format!("expected 'key = value', found '{line}'") })?;
            let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
            if !seen.insert(key.clone()) {
                return Err(Error::Parse { row, msg: format!("duplicate key '{key}'") });
            }
            let at = |e: Error| Error::Parse { row, msg: e.to_string() };
            let int = |v: &str| -> Result<u64> {
                v.parse().map_err(|_| Error::Parse { row, msg: format!("'{v}' is not a non-negative integer") })
            };
            match key.as_str() {
                "methods" => methods = Some(value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()),
                "test_start" => test_start = Some(DayRef::parse(value).map_err(at)?),
                "test_days" => test_days = Some(int(value)? as usize),
                "train_end" => {
                    train_end = Some(match value.parse::<usize>() {
                        Ok(t) => TrainEnd::Index(t),
                        Err(_) => match DayRef::parse(value).map_err(at)? {
                            DayRef::Date(d) => TrainEnd::Date(d),
                            DayRef::Day(_) => unreachable!("integers parsed above"),
                        },
                    })
                }
                "taus" => {
                    taus = Some(if value.eq_ignore_ascii_case("percentiles") {
                        percentile_grid()
                    } else {
                        value
                            .split(',')
                            .map(|s| {
                                s.trim()
                                    .parse::<f64>()
                                    .map_err(|_| Error::Parse { row, msg: format!("'{}' is not a number", s.trim()) })
                            })
                            .collect::<Result<Vec<_>>>()?
                    })
                }
                "seed" => seed = int(value)?,
                "temperature_mode" => temperature_mode = TemperatureMode::parse(value).map_err(at)?,
                "data_dir" => data_dir = Some(base.join(value)),
                "output_dir" => output_dir = Some(base.join(value)),
                other => return Err(Error::Parse { row, msg: format!("unknown key '{other}'") }),
            }
        }
        let missing = |k: &str| invalid(format!("missing required key '{k}'"));
        let methods = methods
            .ok_or_else(|| missing("methods"))?
            .iter()
            .map(|m| MethodSpec::parse(m, temperature_mode))
            .collect::<Result<Vec<_>>>()?;
        let config = Self {
            methods,
            test_start: test_start.ok_or_else(|| missing("test_start"))?,
            test_days: test_days.ok_or_else(|| missing("test_days"))?,
            train_end,
            taus: taus.unwrap_or_else(percentile_grid),
            seed,
            temperature_mode,
            data_dir,
            output_dir: output_dir.ok_or_else(|| missing("output_dir"))?,
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "\
# evaluation
data_dir = data
methods = LW, SMA-4W, ARWD, ST@forecast
test_start = 2015-04-01
test_days = 14
taus = 0.1, 0.5, 0.9
temperature_mode = actual
seed = 7
output_dir = out   # trailing comment
";

    #[test]
    fn parses_all_keys() {
        let c = EvalConfig::parse(TEXT, Path::new("/cfg")).unwrap();
        let names: Vec<String> = c.methods.iter().map(ToString::to_string).collect();
        assert_eq!(names, ["LW", "SMA-4W", "ARWD@actual", "ST@forecast"]);
        assert_eq!(c.test_start, DayRef::Date(NaiveDate::from_ymd_opt(2015, 4, 1).unwrap()));
        assert_eq!(c.test_days, 14);
        assert_eq!(c.taus, vec![0.1, 0.5, 0.9]);
        assert_eq!(c.seed, 7);
        assert_eq!(c.data_dir, Some(PathBuf::from("/cfg/data")));
        assert_eq!(c.output_dir, PathBuf::from("/cfg/out"));
        assert_eq!(c.train_end, None);
    }

    #[test]
    fn split_defaults_to_day_before_test() {
        let c = EvalConfig::parse("methods = LW\ntest_start = 40\ntest_days = 3\noutput_dir = o\n", Path::new("")).unwrap();
        let start = NaiveDate::from_ymd_opt(2014, 3, 17).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let s = LoadSeries::observed("f", start, vec![1.0; 24 * 60]).unwrap();
        let split = c.split_for(&s).unwrap();
        assert_eq!(split.train_end, 39 * 24);
        assert_eq!(split.test_days, vec![40, 41, 42]);
        let dated = EvalConfig {
            test_start: DayRef::Date(NaiveDate::from_ymd_opt(2014, 4, 25).unwrap()),
            train_end: Some(TrainEnd::Date(NaiveDate::from_ymd_opt(2014, 4, 20).unwrap())),
            ..c
        };
        let split = dated.split_for(&s).unwrap();
        assert_eq!(split.test_days[0], 40);
        assert_eq!(split.train_end, 35 * 24);
    }

    #[test]
    fn errors_point_at_lines() {
        let bad = "methods = LW\ntest_days = x\n";
        assert!(matches!(EvalConfig::parse(bad, Path::new("")), Err(Error::Parse { row: 2, .. })));
        let unknown = "methods = LW\ncolour = red\n";
        assert!(matches!(EvalConfig::parse(unknown, Path::new("")), Err(Error::Parse { row: 2, .. })));
        let dup = "methods = LW\nmethods = LD\n";
        assert!(matches!(EvalConfig::parse(dup, Path::new("")), Err(Error::Parse { row: 2, .. })));
        let no_eq = "methods LW\n";
        assert!(matches!(EvalConfig::parse(no_eq, Path::new("")), Err(Error::Parse { row: 1, .. })));
        assert!(EvalConfig::parse("methods = LW\ntest_start = 3\noutput_dir = o\n", Path::new("")).is_err());
        assert!(EvalConfig::parse("methods =\ntest_start = 3\ntest_days = 1\noutput_dir = o\n", Path::new("")).is_err());
        assert!(EvalConfig::parse("methods = LW\ntest_start = 3\ntest_days = 1\ntaus = 0.5, 0.2\noutput_dir = o\n", Path::new("")).is_err());
    }
}
