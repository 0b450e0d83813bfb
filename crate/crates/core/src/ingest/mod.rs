//! Getting data in and out: the CSV layouts and a seeded synthetic feeder
//! generator used in place of metered data.

mod csvio;
pub(crate) mod synth;

pub use csvio::{
    format_timestamp, parse_forecast_csv, parse_load_csv, parse_report_csv, parse_temperature_csv, parse_timestamp,
    write_forecast_csv, write_load_csv, write_report_csv, write_temperature_csv, write_text, ReportRow,
    FORECAST_HEADER, LOAD_HEADER, REPORT_HEADER, TEMPERATURE_HEADER, VINTAGE_HEADER,
};
pub use synth::{generate_synthetic_feeder, generate_weather, mean_daily_demand, SynthConfig};
