//! The `lvload` command line.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags, unreadable or
//! malformed config), 2 for data errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::harness::analysis::temperature_mode_sweep;
use crate::harness::config::EvalConfig;
use crate::harness::evaluate::{load_data_dir, run_rolling_evaluation, slice_rank, METRIC_MAPE};
use crate::ingest::{self, mean_daily_demand, ReportRow, SynthConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Customers per synthetic feeder, cycled over feeder numbers.
const CUSTOMER_LADDER: [usize; 4] = [8, 32, 128, 512];

#[derive(Debug, Parser)]
#[command(name = "lvload", version, about = "Probabilistic load forecasting for LV feeders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GroupBy {
    Horizon,
    Day,
    Feeder,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic feeders and their weather.
    Synth {
        #[arg(long)]
        feeders: usize,
        #[arg(long)]
        days: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Customers on every feeder (default: cycles 8, 32, 128, 512).
        #[arg(long)]
        customers: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        temp_sensitivity: f64,
        #[arg(long, default_value_t = 0.0)]
        osh_fraction: f64,
    },
    /// Rolling-origin evaluation of the configured methods.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Summarize a report written by `evaluate`.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        by: Option<GroupBy>,
    },
    /// Compare runs without temperature, with forecast and with actual temperature.
    SweepTemp {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Data(e.to_string())
    }
}

fn load_config(path: &Path) -> Result<EvalConfig, Failure> {
    let config = EvalConfig::from_file(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if config.data_dir.is_none() {
        return Err(Failure::Usage(format!("{}: missing required key 'data_dir'", path.display())));
    }
    Ok(config)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Synth { feeders, days, seed, out: dir, customers, temp_sensitivity, osh_fraction } => {
            synth(feeders, days, seed, &dir, customers, temp_sensitivity, osh_fraction, out)
        }
        Command::Evaluate { config } => evaluate(&config, out, err),
        Command::Report { input, by } => report(&input, by, out),
        Command::SweepTemp { config } => sweep(&config, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "usage error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Data(m)) => {
            let _ = writeln!(err, "data error: {m}");
            EXIT_DATA
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn synth(
    feeders: usize,
    days: usize,
    seed: u64,
    dir: &Path,
    customers: Option<usize>,
    temp_sensitivity: f64,
    osh_fraction: f64,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    if feeders == 0 {
        return Err(Failure::Usage("--feeders must be at least 1".into()));
    }
    let mut manifest = String::from("feeder,n_customers,mean_daily_kwh\n");
    let mut weather = None;
    for k in 0..feeders {
        let cfg = SynthConfig {
            feeder_id: format!("f{:03}", k + 1),
            n_customers: customers.unwrap_or(CUSTOMER_LADDER[k % CUSTOMER_LADDER.len()]),
            days,
            seed,
            temp_sensitivity,
            osh_fraction,
            ..SynthConfig::default()
        };
        cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        let (series, temps) = ingest::generate_synthetic_feeder(&cfg)?;
        ingest::write_load_csv(&series, &dir.join("load").join(format!("{}.csv", cfg.feeder_id)))?;
        let demand = mean_daily_demand(&series).unwrap_or(0.0);
        manifest.push_str(&format!("{},{},{demand}\n", cfg.feeder_id, cfg.n_customers));
        weather.get_or_insert((temps, series.start()));
    }
    if let Some((temps, start)) = weather {
        ingest::write_temperature_csv(
            &temps,
            start,
            &dir.join("temperature_actual.csv"),
            &dir.join("temperature_forecast.csv"),
        )?;
    }
    ingest::write_text(&dir.join("feeders.csv"), &manifest)?;
    let _ = writeln!(out, "wrote {feeders} feeders x {days} days to {}", dir.display());
    Ok(())
}

fn evaluate(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let config = load_config(path)?;
    let data = load_data_dir(config.data_dir.as_deref().expect("checked in load_config"))?;
    let report = run_rolling_evaluation(&data, &config)?;
    for f in &report.failures {
        let _ = writeln!(err, "warning: {} on {}: {}", f.method, f.feeder, f.message);
    }
    if report.rows.is_empty() {
        return Err(Failure::Data("every method failed on every feeder".into()));
    }
    report.write(&config.output_dir)?;
    let _ = writeln!(out, "method,mean_MAPE");
    for m in &config.methods {
        if let Some(v) = report.mean_over_feeders(&m.to_string(), METRIC_MAPE, "all") {
            let _ = writeln!(out, "{m},{v:.4}");
        }
    }
    let violations = report.leakage_violations();
    if violations > 0 {
        return Err(Failure::Data(format!("{violations} forecasts read data past their origin")));
    }
    Ok(())
}

fn report(dir: &Path, by: Option<GroupBy>, out: &mut dyn Write) -> Result<(), Failure> {
    let path = dir.join("report.csv");
    if !path.exists() {
        return Err(Failure::Data(format!("{} does not exist", path.display())));
    }
    let rows = ingest::parse_report_csv(&path)?;
    let text = summarize(&rows, by);
    let name = match by {
        None => "summary.csv",
        Some(GroupBy::Feeder) => "summary_by_feeder.csv",
        Some(GroupBy::Day) => "summary_by_day.csv",
        Some(GroupBy::Horizon) => "summary_by_horizon.csv",
    };
    ingest::write_text(&dir.join(name), &text)?;
    let _ = out.write_all(text.as_bytes());
    Ok(())
}

/// Means over feeders (or per feeder) of the report rows.
fn summarize(rows: &[ReportRow], by: Option<GroupBy>) -> String {
    let keep = |r: &ReportRow| match by {
        None | Some(GroupBy::Feeder) => r.horizon_day == "all",
        Some(GroupBy::Day) => r.horizon_day.starts_with('d'),
        Some(GroupBy::Horizon) => r.horizon_day.starts_with('h'),
    };
    type Key = (String, String, String, (u8, usize), String);
    let mut groups: BTreeMap<Key, (f64, usize)> = BTreeMap::new();
    for r in rows.iter().filter(|r| keep(r)) {
        let feeder = if by == Some(GroupBy::Feeder) { r.feeder.clone() } else { String::new() };
        let key = (feeder, r.method.clone(), r.metric.clone(), slice_rank(&r.horizon_day), r.horizon_day.clone());
        let e = groups.entry(key).or_insert((0.0, 0));
        e.0 += r.value;
        e.1 += 1;
    }
    let mut text = match by {
        None => "method,metric,value\n",
        Some(GroupBy::Feeder) => "feeder,method,metric,value\n",
        Some(_) => "method,metric,horizon_day,value\n",
    }
    .to_string();
    for ((feeder, method, metric, _, slice), (sum, n)) in groups {
        let v = sum / n as f64;
        text.push_str(&match by {
            None => format!("{method},{metric},{v}\n"),
            Some(GroupBy::Feeder) => format!("{feeder},{method},{metric},{v}\n"),
            Some(_) => format!("{method},{metric},{slice},{v}\n"),
        });
    }
    text
}

fn sweep(path: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let config = load_config(path)?;
    let data = load_data_dir(config.data_dir.as_deref().expect("checked in load_config"))?;
    let sweep = temperature_mode_sweep(&data, &config)?;
    sweep.report.write(&config.output_dir)?;
    ingest::write_text(&config.output_dir.join("ks.csv"), &sweep.ks_csv())?;
    let summary = sweep.summary_csv();
    ingest::write_text(&config.output_dir.join("sweep_summary.csv"), &summary)?;
    let _ = out.write_all(summary.as_bytes());
    Ok(())
}
