//! Data ingestion: hourly-to-daily aggregation, leap-day removal, log
//! transform, residual winsorization and timeline segmentation.
//!
//! Consumption is carried in GWh from this point on. Hourly demand arrives
//! in MWh and is converted during aggregation.

mod io;
pub mod synthetic;

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    read_daily_csv, read_holidays, read_hourly_csv, write_daily_csv, DailyRow,
};

pub const HOURS_PER_DAY: usize = 24;
const MWH_PER_GWH: f64 = 1000.0;

/// Number of days in a year once February 29 has been removed.
pub const DAYS_PER_YEAR: usize = 365;

/// One hour of aggregate demand with the concurrent weather readings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourlyRecord {
    pub date: NaiveDate,
    pub hour: u8,
    /// Demand in MWh.
    pub demand: f64,
    pub dry_bulb: f64,
    pub wet_bulb: f64,
}

impl HourlyRecord {
    pub fn new(date: NaiveDate, hour: u8, demand: f64, dry_bulb: f64, wet_bulb: f64) -> Result<Self> {
        if hour as usize >= HOURS_PER_DAY {
            return Err(Error::InvalidInput(format!("hour {hour} out of range on {date}")));
        }
        if !(demand >= 0.0) {
            return Err(Error::InvalidInput(format!("negative demand {demand} on {date} hour {hour}")));
        }
        Ok(Self { date, hour, demand, dry_bulb, wet_bulb })
    }
}

/// One calendar day: total consumption (GWh) and mean temperatures (°F).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub date: NaiveDate,
    pub consumption: f64,
    pub dry_bulb: f64,
    pub wet_bulb: f64,
    pub is_saturday: bool,
    pub is_sunday: bool,
    pub is_holiday: bool,
}

impl DailyRecord {
    /// Builds a record, deriving the calendar flags from `date` and `holidays`.
    pub fn new(
        date: NaiveDate,
        consumption: f64,
        dry_bulb: f64,
        wet_bulb: f64,
        holidays: &HolidayCalendar,
    ) -> Self {
        Self {
            date,
            consumption,
            dry_bulb,
            wet_bulb,
            is_saturday: date.weekday() == Weekday::Sat,
            is_sunday: date.weekday() == Weekday::Sun,
            is_holiday: holidays.contains(date),
        }
    }
}

/// Set of dates treated as holidays by the calendar dummies.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HolidayCalendar {
    dates: BTreeSet<NaiveDate>,
}

impl HolidayCalendar {
    pub fn new(dates: impl IntoIterator<Item = NaiveDate>) -> Self {
        Self { dates: dates.into_iter().collect() }
    }

    /// Fixed-date US federal holidays (New Year, Juneteenth from 2021,
    /// Independence Day, Veterans Day, Christmas) for every year in `years`.
    /// Floating holidays and observed-day shifts are not included.
    pub fn us_fixed_federal(years: RangeInclusive<i32>) -> Self {
        let mut dates = BTreeSet::new();
        for year in years {
            for (month, day) in [(1, 1), (7, 4), (11, 11), (12, 25)] {
                dates.insert(NaiveDate::from_ymd_opt(year, month, day).expect("valid fixed date"));
            }
            if year >= 2021 {
                dates.insert(NaiveDate::from_ymd_opt(year, 6, 19).expect("valid fixed date"));
            }
        }
        Self { dates }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.dates.contains(&date)
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.dates.iter().copied()
    }
}

/// A day aggregated from fewer than 24 hourly rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IncompleteDay {
    pub date: NaiveDate,
    pub hours: usize,
}

/// Daily records plus the warning channel for incomplete days.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    pub days: Vec<DailyRecord>,
    pub incomplete: Vec<IncompleteDay>,
}

/// Sums hourly demand (MWh to GWh) and averages the temperatures per date.
///
/// Rows must be strictly increasing in `(date, hour)`; a duplicated hour is
/// reported as non-monotone. Days with missing hours are aggregated from the
/// hours present and listed in [`Aggregation::incomplete`].
pub fn aggregate_daily(hourly: &[HourlyRecord], holidays: &HolidayCalendar) -> Result<Aggregation> {
    if hourly.is_empty() {
        return Err(Error::EmptyInput("hourly records"));
    }
    for pair in hourly.windows(2) {
        if (pair[1].date, pair[1].hour) <= (pair[0].date, pair[0].hour) {
            return Err(Error::NonMonotone { date: pair[1].date, hour: pair[1].hour });
        }
    }

    let mut days = Vec::new();
    let mut incomplete = Vec::new();
    for group in hourly.chunk_by(|a, b| a.date == b.date) {
        let count = group.len();
        let demand: f64 = group.iter().map(|r| r.demand).sum();
        let dry = group.iter().map(|r| r.dry_bulb).sum::<f64>() / count as f64;
        let wet = group.iter().map(|r| r.wet_bulb).sum::<f64>() / count as f64;
        let date = group[0].date;
        if count < HOURS_PER_DAY {
            incomplete.push(IncompleteDay { date, hours: count });
        }
        days.push(DailyRecord::new(date, demand / MWH_PER_GWH, dry, wet, holidays));
    }
    Ok(Aggregation { days, incomplete })
}

pub fn is_leap_day(date: NaiveDate) -> bool {
    date.month() == 2 && date.day() == 29
}

/// Drops every February 29 record, preserving the order of the rest.
pub fn remove_leap_days(days: Vec<DailyRecord>) -> Vec<DailyRecord> {
    days.into_iter().filter(|d| !is_leap_day(d.date)).collect()
}

/// Zero-based day of year on a 365-day calendar (February 29 removed).
///
/// February 29 itself maps onto March 1.
pub fn day_of_year_365(date: NaiveDate) -> usize {
    let ordinal = date.ordinal0() as usize;
    if date.leap_year() && ordinal >= 59 {
        ordinal - 1
    } else {
        ordinal
    }
}

/// Natural log of daily consumption, indexed by the retained-day count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl LogSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Day index `t`: 0 on the first date, +1 per retained day.
    pub fn time_index(&self) -> impl Iterator<Item = usize> {
        0..self.values.len()
    }
}

pub fn log_transform(days: &[DailyRecord]) -> Result<LogSeries> {
    let mut dates = Vec::with_capacity(days.len());
    let mut values = Vec::with_capacity(days.len());
    for day in days {
        if !(day.consumption > 0.0) {
            return Err(Error::NonPositiveConsumption { date: day.date, value: day.consumption });
        }
        dates.push(day.date);
        values.push(day.consumption.ln());
    }
    Ok(LogSeries { dates, values })
}

/// Threshold multiple of the residual standard deviation used by
/// [`treat_outliers`].
pub const OUTLIER_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutlierDay {
    pub date: NaiveDate,
    pub residual: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OutlierReport {
    pub days: Vec<OutlierDay>,
}

impl OutlierReport {
    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }
}

/// Winsorizes the log series where the deseasonalized residual exceeds
/// three sample standard deviations, moving it to the boundary. One pass.
pub fn treat_outliers(series: &LogSeries, residuals: &[f64]) -> Result<(LogSeries, OutlierReport)> {
    if residuals.is_empty() {
        return Err(Error::EmptyInput("residual series"));
    }
    if residuals.len() != series.len() {
        return Err(Error::LengthMismatch { expected: series.len(), actual: residuals.len() });
    }
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let var = if residuals.len() > 1 {
        residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let bound = OUTLIER_SIGMAS * var.sqrt();

    let mut treated = series.clone();
    let mut report = OutlierReport::default();
    for (i, &r) in residuals.iter().enumerate() {
        if r.abs() > bound {
            treated.values[i] = series.values[i] - r + bound.copysign(r);
            report.days.push(OutlierDay { date: series.dates[i], residual: r, bound });
        }
    }
    Ok((treated, report))
}

/// Inclusive date interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::InvalidInput(format!("date range {start}..{end} is reversed")));
        }
        Ok(Self { start, end })
    }

    /// January 1 to December 31 of `year`.
    pub fn year(year: i32) -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year"),
            end: NaiveDate::from_ymd_opt(year, 12, 31).expect("valid year"),
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

/// Calibration, validation, test and robustness windows on the timeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    pub calibration: DateRange,
    pub validation: DateRange,
    pub test: DateRange,
    pub robustness: Vec<DateRange>,
}

impl Segmentation {
    pub fn new(
        calibration: DateRange,
        validation: DateRange,
        test: DateRange,
        robustness: Vec<DateRange>,
    ) -> Result<Self> {
        let seg = Self { calibration, validation, test, robustness };
        let ordered: Vec<&DateRange> = seg.ranges().collect();
        for pair in ordered.windows(2) {
            if pair[1].start <= pair[0].end {
                return Err(Error::InvalidInput(format!(
                    "segments overlap or are out of order: {}..{} then {}..{}",
                    pair[0].start, pair[0].end, pair[1].start, pair[1].end
                )));
            }
        }
        Ok(seg)
    }

    /// Whole-year segmentation: calibration from `first_year` up to the
    /// validation year, then one year each for validation and test, then the
    /// robustness years.
    pub fn yearly(first_year: i32, validation_year: i32, test_year: i32, robustness_years: &[i32]) -> Result<Self> {
        if validation_year <= first_year {
            return Err(Error::InvalidInput("validation year must follow the calibration years".into()));
        }
        let calibration = DateRange::new(
            DateRange::year(first_year).start,
            DateRange::year(validation_year - 1).end,
        )?;
        Self::new(
            calibration,
            DateRange::year(validation_year),
            DateRange::year(test_year),
            robustness_years.iter().map(|&y| DateRange::year(y)).collect(),
        )
    }

    fn ranges(&self) -> impl Iterator<Item = &DateRange> {
        [&self.calibration, &self.validation, &self.test]
            .into_iter()
            .chain(self.robustness.iter())
    }
}
