//! Calendar and weather features, and min-max scaling anchored on the
//! training window.

use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate, Weekday};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::HolidayCalendar;

/// Angular frequency of the annual harmonic, in radians per day.
pub const OMEGA: f64 = 2.0 * PI / 365.0;

/// Number of calendar inputs seen by the network.
pub const CALENDAR_INPUTS: usize = 8;
/// Number of weather inputs seen by the network.
pub const WEATHER_INPUTS: usize = 2;
/// Exogenous input dimension of the network.
pub const EXOGENOUS_INPUTS: usize = WEATHER_INPUTS + CALENDAR_INPUTS;

/// Column names of the network's exogenous input, in order.
pub const INPUT_COLUMNS: [&str; EXOGENOUS_INPUTS] = [
    "dry_bulb", "wet_bulb", "t", "sin_wt", "cos_wt", "sin_2wt", "cos_2wt", "d_sat", "d_sun", "d_hol",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalendarFeatures {
    pub t: f64,
    pub sin1: f64,
    pub cos1: f64,
    pub sin2: f64,
    pub cos2: f64,
    pub d_sat: f64,
    pub d_sun: f64,
    pub d_hol: f64,
}

impl CalendarFeatures {
    /// The eight calendar inputs in network order.
    pub fn to_array(&self) -> [f64; CALENDAR_INPUTS] {
        [self.t, self.sin1, self.cos1, self.sin2, self.cos2, self.d_sat, self.d_sun, self.d_hol]
    }
}

fn dummy(flag: bool) -> f64 {
    if flag {
        1.0
    } else {
        0.0
    }
}

/// Harmonics at `ωt` and `2ωt` on the raw day count, plus day-type dummies.
pub fn calendar_features(date: NaiveDate, t: usize, holidays: &HolidayCalendar) -> CalendarFeatures {
    let x = t as f64;
    let (sin1, cos1) = (OMEGA * x).sin_cos();
    let (sin2, cos2) = (2.0 * OMEGA * x).sin_cos();
    CalendarFeatures {
        t: x,
        sin1,
        cos1,
        sin2,
        cos2,
        d_sat: dummy(date.weekday() == Weekday::Sat),
        d_sun: dummy(date.weekday() == Weekday::Sun),
        d_hol: dummy(holidays.contains(date)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherFeatures {
    pub dry_bulb: f64,
    pub wet_bulb: f64,
}

/// Concatenates weather and calendar features into one network input row.
pub fn input_row(weather: WeatherFeatures, calendar: &CalendarFeatures) -> Vec<f64> {
    let mut row = Vec::with_capacity(EXOGENOUS_INPUTS);
    row.push(weather.dry_bulb);
    row.push(weather.wet_bulb);
    row.extend_from_slice(&calendar.to_array());
    row
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

/// Per-column min-max scaler. Immutable once fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MinMaxScaler {
    columns: IndexMap<String, Bounds>,
}

impl MinMaxScaler {
    /// Learns column-wise bounds from `rows`. Every column needs at least two
    /// distinct values.
    pub fn fit<S: AsRef<str>>(names: &[S], rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("scaler training rows"));
        }
        let mut columns = IndexMap::with_capacity(names.len());
        for (j, name) in names.iter().enumerate() {
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for row in rows {
                if row.len() != names.len() {
                    return Err(Error::LengthMismatch { expected: names.len(), actual: row.len() });
                }
                min = min.min(row[j]);
                max = max.max(row[j]);
            }
            if !(max > min) || !min.is_finite() || !max.is_finite() {
                return Err(Error::ConstantColumn { column: name.as_ref().to_string() });
            }
            columns.insert(name.as_ref().to_string(), Bounds { min, max });
        }
        Ok(Self { columns })
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn bounds(&self, column: usize) -> Bounds {
        self.columns[column]
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    fn check(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::LengthMismatch { expected: self.columns.len(), actual: row.len() });
        }
        Ok(())
    }

    pub fn scale_value(&self, column: usize, x: f64) -> f64 {
        let b = self.columns[column];
        (x - b.min) / (b.max - b.min)
    }

    pub fn unscale_value(&self, column: usize, x: f64) -> f64 {
        let b = self.columns[column];
        b.min + x * (b.max - b.min)
    }

    /// Scale factor `max - min` of a column; maps normalized spreads back.
    pub fn range(&self, column: usize) -> f64 {
        let b = self.columns[column];
        b.max - b.min
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check(row)?;
        Ok(row.iter().enumerate().map(|(j, &x)| self.scale_value(j, x)).collect())
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }

    pub fn inverse_transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter()
            .map(|r| {
                self.check(r)?;
                Ok(r.iter().enumerate().map(|(j, &x)| self.unscale_value(j, x)).collect())
            })
            .collect()
    }
}
