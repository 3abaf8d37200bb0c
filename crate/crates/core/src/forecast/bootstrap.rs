//! Seasonal block bootstrap of daily temperatures.
//!
//! A path is tiled left to right by blocks. Each block draws a length
//! uniformly from `[m − Δ, m + Δ]`, a source year uniformly from the source
//! years, and a day-of-year shift uniformly from `[−Δ, Δ]`; it then copies
//! that many consecutive days of the source year starting at the target day
//! of year plus the shift (wrapping modulo 365 inside the source year). No
//! noise is added.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::WeatherFeatures;
use crate::ingest::{day_of_year_365, DailyRecord, DAYS_PER_YEAR};

const MAX_BLOCK_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Mean block length in days.
    pub mean_block: usize,
    /// Half-range of the block length and of the day-of-year shift.
    pub half_range: usize,
    pub paths: usize,
    pub source_years: Vec<i32>,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(source_years: Vec<i32>, seed: u64) -> Self {
        Self { mean_block: 7, half_range: 3, paths: 2000, source_years, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean_block <= self.half_range {
            return Err(Error::Config(format!(
                "mean block length {} must exceed the half-range {}",
                self.mean_block, self.half_range
            )));
        }
        if self.paths == 0 {
            return Err(Error::Config("at least one bootstrap path is required".into()));
        }
        if self.source_years.is_empty() {
            return Err(Error::Config("no bootstrap source years".into()));
        }
        Ok(())
    }
}

/// Daily temperatures keyed by `(year, day of year on a 365-day calendar)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemperatureHistory {
    years: BTreeMap<i32, Vec<Option<WeatherFeatures>>>,
}

impl TemperatureHistory {
    /// February 29 records are ignored.
    pub fn from_days(days: &[DailyRecord]) -> Self {
        let mut years: BTreeMap<i32, Vec<Option<WeatherFeatures>>> = BTreeMap::new();
        for d in days.iter().filter(|d| !crate::ingest::is_leap_day(d.date)) {
            let slot = years.entry(d.date.year()).or_insert_with(|| vec![None; DAYS_PER_YEAR]);
            slot[day_of_year_365(d.date)] = Some(WeatherFeatures { dry_bulb: d.dry_bulb, wet_bulb: d.wet_bulb });
        }
        Self { years }
    }

    pub fn get(&self, year: i32, day_of_year: usize) -> Option<WeatherFeatures> {
        self.years.get(&year).and_then(|v| v.get(day_of_year).copied().flatten())
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.years.keys().copied()
    }
}

/// Where one block of a path came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockProvenance {
    /// Index of the block's first day within the horizon.
    pub target_start: usize,
    pub source_year: i32,
    /// Day of year (0..365) of the block's first source day.
    pub source_start: usize,
    /// Drawn block length; the last block may use fewer days.
    pub length: usize,
    pub shift: i64,
}

impl BlockProvenance {
    /// Source day of year of the block's `offset`-th day.
    pub fn source_day(&self, offset: usize) -> usize {
        (self.source_start + offset) % DAYS_PER_YEAR
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperaturePath {
    pub days: Vec<WeatherFeatures>,
    pub blocks: Vec<BlockProvenance>,
}

fn draw_path(history: &TemperatureHistory, horizon: &[NaiveDate], config: &BootstrapConfig, path: usize) -> Result<TemperaturePath> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(path as u64);
    let (m, delta) = (config.mean_block, config.half_range);
    let mut days = Vec::with_capacity(horizon.len());
    let mut blocks = Vec::new();
    let mut pos = 0;
    while pos < horizon.len() {
        let mut attempts = 0;
        let block = loop {
            attempts += 1;
            if attempts > MAX_BLOCK_ATTEMPTS {
                return Err(Error::MissingData(format!(
                    "no complete temperature block found for {} in the source years",
                    horizon[pos]
                )));
            }
            let length = rng.random_range(m - delta..=m + delta);
            let source_year = config.source_years[rng.random_range(0..config.source_years.len())];
            let shift = rng.random_range(-(delta as i64)..=delta as i64);
            let target_day = day_of_year_365(horizon[pos]) as i64;
            let source_start = (target_day + shift).rem_euclid(DAYS_PER_YEAR as i64) as usize;
            let block = BlockProvenance { target_start: pos, source_year, source_start, length, shift };
            let used = length.min(horizon.len() - pos);
            let values: Option<Vec<WeatherFeatures>> =
                (0..used).map(|k| history.get(source_year, block.source_day(k))).collect();
            if let Some(values) = values {
                days.extend(values);
                break block;
            }
        };
        pos += block.length.min(horizon.len() - pos);
        blocks.push(block);
    }
    Ok(TemperaturePath { days, blocks })
}

/// Draws `config.paths` temperature paths covering `horizon`.
///
/// Path `i` uses its own random stream derived from `(seed, i)`, so the
/// output does not depend on the degree of parallelism.
pub fn bootstrap_temperatures(
    history: &TemperatureHistory,
    horizon: &[NaiveDate],
    config: &BootstrapConfig,
) -> Result<Vec<TemperaturePath>> {
    config.validate()?;
    if horizon.is_empty() {
        return Err(Error::EmptyInput("bootstrap horizon"));
    }
    (0..config.paths).into_par_iter().map(|i| draw_path(history, horizon, config, i)).collect()
}
