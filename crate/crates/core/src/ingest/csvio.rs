//! Readers and writers for the fixed CSV layouts.
//!
//! Row numbers in errors are file line numbers (the header is line 1).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};

use crate::calendar::HORIZONS;
use crate::error::{invalid, Error, Result};
use crate::series::{LoadSeries, QuantileForecast, TemperatureData};

pub const LOAD_HEADER: [&str; 3] = ["timestamp", "load_kwh", "interpolated"];
pub const TEMPERATURE_HEADER: [&str; 2] = ["timestamp", "temp_c"];
pub const VINTAGE_HEADER: [&str; 3] = ["origin_date", "horizon_hours", "temp_c"];
pub const FORECAST_HEADER: [&str; 4] = ["origin", "horizon", "tau", "value"];
pub const REPORT_HEADER: [&str; 5] = ["feeder", "method", "metric", "horizon_day", "value"];

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";
const DATE_FORMAT: &str = "%Y-%m-%d";

pub fn format_timestamp(ts: NaiveDateTime) -> String {
    ts.format("%Y-%m-%dT%H:00").to_string()
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let ts = NaiveDateTime::parse_from_str(s.trim(), TIMESTAMP_FORMAT).ok()?;
    (ts.minute() == 0).then_some(ts)
}

fn parse_err(row: usize, msg: impl Into<String>) -> Error {
    Error::Parse { row, msg: msg.into() }
}

fn reader(path: &Path, expected: &[&str]) -> Result<csv::Reader<File>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != expected {
        return Err(parse_err(1, format!("expected header {}, found {}", expected.join(","), header.join(","))));
    }
    Ok(rdr)
}

fn line_of(record: &csv::StringRecord, fallback: usize) -> usize {
    record.position().map_or(fallback, |p| p.line() as usize)
}

fn field<'a>(record: &'a csv::StringRecord, i: usize, row: usize, name: &str) -> Result<&'a str> {
    record.get(i).ok_or_else(|| parse_err(row, format!("missing {name}")))
}

fn number(record: &csv::StringRecord, i: usize, row: usize, name: &str) -> Result<f64> {
    let s = field(record, i, row, name)?;
    let v: f64 = s.parse().map_err(|_| parse_err(row, format!("{name} '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(row, format!("{name} is not finite")));
    }
    Ok(v)
}

/// Hourly load file. The feeder id is the file stem.
pub fn parse_load_csv(path: &Path) -> Result<LoadSeries> {
    let feeder = path.file_stem().and_then(|s| s.to_str()).unwrap_or("feeder").to_string();
    let mut rdr = reader(path, &LOAD_HEADER)?;
    let (mut values, mut mask) = (Vec::new(), Vec::new());
    let mut start: Option<NaiveDateTime> = None;
    let mut previous: Option<NaiveDateTime> = None;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = line_of(&rec, k + 2);
        let ts_text = field(&rec, 0, row, "timestamp")?;
        let ts = parse_timestamp(ts_text).ok_or_else(|| parse_err(row, format!("malformed timestamp '{ts_text}'")))?;
        if let Some(p) = previous {
            if ts != p + Duration::hours(1) {
                return Err(parse_err(row, format!("non-contiguous timestamp at row {row}")));
            }
        }
        let load = number(&rec, 1, row, "load_kwh")?;
        if load < 0.0 {
            return Err(parse_err(row, format!("negative load {load}")));
        }
        let interpolated = match field(&rec, 2, row, "interpolated")? {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(row, format!("interpolated flag '{other}' must be 0 or 1"))),
        };
        start.get_or_insert(ts);
        previous = Some(ts);
        values.push(load);
        mask.push(!interpolated);
    }
    let start = start.ok_or_else(|| invalid(format!("{} has no data rows", path.display())))?;
    LoadSeries::new(feeder, start, values, mask)
}

/// Actual temperatures aligned to a load clock starting at `load_start`, plus
/// forecast vintages keyed by load-clock day.
///
/// Hours not covered by the actuals file are NaN. Vintage origins may be
/// written as a date or as that date at 07:00.
pub fn parse_temperature_csv(actual_path: &Path, forecast_path: &Path, load_start: NaiveDateTime) -> Result<TemperatureData> {
    let mut rdr = reader(actual_path, &TEMPERATURE_HEADER)?;
    let mut actual: Vec<f64> = Vec::new();
    let mut previous: Option<NaiveDateTime> = None;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = line_of(&rec, k + 2);
        let ts_text = field(&rec, 0, row, "timestamp")?;
        let ts = parse_timestamp(ts_text).ok_or_else(|| parse_err(row, format!("malformed timestamp '{ts_text}'")))?;
        if let Some(p) = previous {
            if ts != p + Duration::hours(1) {
                return Err(parse_err(row, format!("non-contiguous timestamp at row {row}")));
            }
        }
        previous = Some(ts);
        let v = number(&rec, 1, row, "temp_c")?;
        let offset = (ts - load_start).num_hours();
        if offset < 0 {
            continue;
        }
        let i = offset as usize;
        if actual.len() < i {
            actual.resize(i, f64::NAN);
        }
        actual.push(v);
    }

    let mut rdr = reader(forecast_path, &VINTAGE_HEADER)?;
    let mut vintages: BTreeMap<usize, (NaiveDate, Vec<Option<f64>>)> = BTreeMap::new();
    let start_date = load_start.date();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = line_of(&rec, k + 2);
        let origin_text = field(&rec, 0, row, "origin_date")?;
        let date = match NaiveDate::parse_from_str(origin_text, DATE_FORMAT) {
            Ok(d) => d,
            Err(_) => {
                let ts = parse_timestamp(origin_text)
                    .ok_or_else(|| parse_err(row, format!("malformed origin '{origin_text}'")))?;
                if ts.hour() != 7 {
                    return Err(parse_err(row, format!("vintage origin {origin_text} is not at 07:00")));
                }
                ts.date()
            }
        };
        let h_text = field(&rec, 1, row, "horizon_hours")?;
        let h: usize = h_text
            .parse()
            .ok()
            .filter(|h| (1..=HORIZONS).contains(h))
            .ok_or_else(|| parse_err(row, format!("horizon '{h_text}' outside 1..={HORIZONS}")))?;
        let v = number(&rec, 2, row, "temp_c")?;
        let days = (date - start_date).num_days();
        if days < 0 {
            continue;
        }
        let day = days as usize + 1;
        let slot = &mut vintages.entry(day).or_insert_with(|| (date, vec![None; HORIZONS])).1[h - 1];
        if slot.is_some() {
            return Err(parse_err(row, format!("duplicate horizon {h} for origin {date}")));
        }
        *slot = Some(v);
    }
    let mut forecasts = BTreeMap::new();
    for (day, (date, values)) in vintages {
        let filled = values.iter().filter(|v| v.is_some()).count();
        if filled != HORIZONS {
            return Err(invalid(format!("vintage {date} has {filled} horizons, expected {HORIZONS}")));
        }
        forecasts.insert(day, values.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect());
    }
    TemperatureData::new(actual, forecasts)
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?)
}

pub fn write_load_csv(series: &LoadSeries, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(LOAD_HEADER)?;
    for t in 1..=series.len() {
        let flag = if series.is_observed(t) { "0" } else { "1" };
        w.write_record([format_timestamp(series.timestamp(t)), series.value(t).to_string(), flag.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes actuals (from `start`) and every vintage, origins as dates.
pub fn write_temperature_csv(temps: &TemperatureData, start: NaiveDateTime, actual_path: &Path, forecast_path: &Path) -> Result<()> {
    let mut w = create(actual_path)?;
    w.write_record(TEMPERATURE_HEADER)?;
    for (i, v) in temps.actual.iter().enumerate() {
        w.write_record([format_timestamp(start + Duration::hours(i as i64)), v.to_string()])?;
    }
    w.flush()?;
    let mut w = create(forecast_path)?;
    w.write_record(VINTAGE_HEADER)?;
    for (day, values) in &temps.forecasts {
        let date = (start.date() + Duration::days(*day as i64 - 1)).format(DATE_FORMAT).to_string();
        for (h, v) in values.iter().enumerate() {
            w.write_record([date.clone(), (h + 1).to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_forecast_csv(forecasts: &[QuantileForecast], path: &Path) -> Result<()> {
    if forecasts.is_empty() {
        return Err(invalid("no forecasts to write"));
    }
    let mut w = create(path)?;
    w.write_record(FORECAST_HEADER)?;
    for f in forecasts {
        for h in 1..=f.horizons() {
            for (tau, v) in f.taus().iter().zip(f.row(h)) {
                w.write_record([f.origin().to_string(), h.to_string(), tau.to_string(), v.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads forecasts back, grouped by origin in file order.
pub fn parse_forecast_csv(path: &Path) -> Result<Vec<QuantileForecast>> {
    let mut rdr = reader(path, &FORECAST_HEADER)?;
    // origin -> horizon -> (tau, value)
    let mut groups: Vec<(usize, BTreeMap<usize, Vec<(f64, f64)>>)> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = line_of(&rec, k + 2);
        let int = |i: usize, name: &str| -> Result<usize> {
            let s = field(&rec, i, row, name)?;
            s.parse().map_err(|_| parse_err(row, format!("{name} '{s}' is not an integer")))
        };
        let origin = int(0, "origin")?;
        let h = int(1, "horizon")?;
        let tau = number(&rec, 2, row, "tau")?;
        let v = number(&rec, 3, row, "value")?;
        if groups.last().is_none_or(|g| g.0 != origin) {
            groups.push((origin, BTreeMap::new()));
        }
        groups.last_mut().expect("just pushed").1.entry(h).or_default().push((tau, v));
    }
    if groups.is_empty() {
        return Err(invalid(format!("{} has no forecast rows", path.display())));
    }
    groups
        .into_iter()
        .map(|(origin, rows)| {
            let taus: Vec<f64> = rows.values().next().map(|r| r.iter().map(|p| p.0).collect()).unwrap_or_default();
            let values = rows
                .into_values()
                .map(|r| {
                    if r.len() != taus.len() || r.iter().zip(&taus).any(|(p, t)| p.0 != *t) {
                        return Err(invalid(format!("origin {origin} has inconsistent tau grids")));
                    }
                    Ok(r.into_iter().map(|p| p.1).collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()?;
            QuantileForecast::new(origin, taus, values)
        })
        .collect()
}

/// One line of an error report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub feeder: String,
    pub method: String,
    pub metric: String,
    /// `all`, `d1`..`d4` (day-ahead bucket) or `h1`..`h96` (single horizon).
    pub horizon_day: String,
    pub value: f64,
}

pub fn write_report_csv(rows: &[ReportRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(invalid("empty report"));
    }
    let mut w = create(path)?;
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        w.write_record([r.feeder.as_str(), &r.method, &r.metric, &r.horizon_day, &r.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut rdr = reader(path, &REPORT_HEADER)?;
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = line_of(&rec, k + 2);
        let text = |i: usize, name: &str| field(&rec, i, row, name).map(str::to_string);
        let value_text = field(&rec, 4, row, "value")?;
        let value: f64 = value_text
            .parse()
            .map_err(|_| parse_err(row, format!("value '{value_text}' is not a number")))?;
        out.push(ReportRow {
            feeder: text(0, "feeder")?,
            method: text(1, "method")?,
            metric: text(2, "metric")?,
            horizon_day: text(3, "horizon_day")?,
            value,
        });
    }
    Ok(out)
}

/// Writes a plain text file, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
