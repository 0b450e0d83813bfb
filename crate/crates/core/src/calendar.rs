//! Calendar arithmetic on the hourly time index.
//!
//! Time indices are 1-based: `t = 1` is the 00:00–01:00 hour of day 1. All
//! modular periods use `((t - 1) mod m) + 1`, so every hour of a day shares one
//! day index and every period lies in `1..=m`.

use chrono::{Datelike, NaiveDate};

use crate::error::{invalid, Result};

/// Hours per day.
pub const HOURS_PER_DAY: usize = 24;
/// Hours per week.
pub const HOURS_PER_WEEK: usize = 168;
/// Number of forecast horizons issued at each origin.
pub const HORIZONS: usize = 96;
/// Hour-of-day of the last observation available at a daily forecast origin.
///
/// The origin hour is the 07:00–08:00 slot, so horizon 1 is the 08:00–09:00 hour.
pub const ORIGIN_HOUR: usize = 8;

pub fn hour_of_day(t: usize) -> usize {
    debug_assert!(t >= 1);
    (t - 1) % HOURS_PER_DAY + 1
}

pub fn period_of_week(t: usize) -> usize {
    debug_assert!(t >= 1);
    (t - 1) % HOURS_PER_WEEK + 1
}

pub fn day_index(t: usize) -> usize {
    debug_assert!(t >= 1);
    (t - 1) / HOURS_PER_DAY + 1
}

/// First time index of a (1-based) day.
pub fn day_start(day: usize) -> usize {
    (day - 1) * HOURS_PER_DAY + 1
}

/// Last time index of a (1-based) day.
pub fn day_end(day: usize) -> usize {
    day * HOURS_PER_DAY
}

/// Time index of the forecast origin on `day`.
pub fn origin_index(day: usize) -> usize {
    (day - 1) * HOURS_PER_DAY + ORIGIN_HOUR
}

/// Day-ahead bucket (1..=4) of a horizon in hours.
pub fn horizon_day(h: usize) -> usize {
    (h - 1) / HOURS_PER_DAY + 1
}

/// Monday-started week of the year, counted from the first Monday.
///
/// Days before the first Monday belong to week 52 and anything past 52 is
/// clamped, so the result always lies in `1..=52`.
pub fn week_of_year(date: NaiveDate) -> usize {
    let jan1 = NaiveDate::from_ymd_opt(date.year(), 1, 1).expect("January 1st exists");
    let offset = (7 - jan1.weekday().num_days_from_monday()) % 7;
    let first_monday = jan1 + chrono::Duration::days(offset as i64);
    if date < first_monday {
        return 52;
    }
    let week = (date - first_monday).num_days() / 7 + 1;
    week.min(52) as usize
}

pub fn week_of_year_ymd(year: i32, month: u32, day: u32) -> Result<usize> {
    let date = NaiveDate::from_ymd_opt(year, month, day)
        .ok_or_else(|| invalid(format!("invalid date {year:04}-{month:02}-{day:02}")))?;
    Ok(week_of_year(date))
}
