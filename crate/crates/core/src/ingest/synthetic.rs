//! Seeded synthetic data with a planted ground truth.
//!
//! Log consumption is a known linear trend/seasonality/dummy combination plus
//! a residual whose mean responds to temperature (heating and cooling arms)
//! and whose spread grows with temperature extremes and with the season.
//! Temperatures are an annual cosine plus AR(1) noise.

use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{is_leap_day, DailyRecord, HolidayCalendar, HourlyRecord, DAYS_PER_YEAR, HOURS_PER_DAY};
use crate::error::{Error, Result};
use crate::features::calendar_features;
use crate::glm::{GlmCoefficients, GLM_COEFFICIENTS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureProcess {
    pub mean: f64,
    pub amplitude: f64,
    /// Zero-based day of year of the seasonal minimum.
    pub coldest_day: f64,
    pub noise_std: f64,
    /// AR(1) coefficient of the daily anomaly.
    pub persistence: f64,
    /// Average gap between dry and wet bulb.
    pub wet_offset: f64,
    pub wet_noise_std: f64,
}

impl Default for TemperatureProcess {
    fn default() -> Self {
        Self {
            mean: 50.0,
            amplitude: 22.0,
            coldest_day: 15.0,
            noise_std: 5.0,
            persistence: 0.7,
            wet_offset: 4.0,
            wet_noise_std: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualProcess {
    /// Log-consumption increase per °F below `heating_base`.
    pub heating: f64,
    pub heating_base: f64,
    /// Log-consumption increase per °F above `cooling_base`.
    pub cooling: f64,
    pub cooling_base: f64,
    pub base_sigma: f64,
    /// Relative growth of σ per 20 °F away from 62 °F.
    pub temperature_sigma: f64,
    /// Relative amplitude of the semiannual σ cycle.
    pub seasonal_sigma: f64,
}

impl Default for ResidualProcess {
    fn default() -> Self {
        Self {
            heating: 0.004,
            heating_base: 55.0,
            cooling: 0.008,
            cooling_base: 70.0,
            base_sigma: 0.015,
            temperature_sigma: 0.6,
            seasonal_sigma: 0.3,
        }
    }
}

/// A permanent jump in log consumption from `from` onwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelShift {
    pub from: NaiveDate,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub start: NaiveDate,
    /// Inclusive.
    pub end: NaiveDate,
    pub beta: [f64; GLM_COEFFICIENTS],
    pub temperature: TemperatureProcess,
    pub residual: ResidualProcess,
    pub level_shift: Option<LevelShift>,
    /// Emit February 29 records (copies of February 28) that carry no day index.
    pub include_leap_days: bool,
}

impl SyntheticConfig {
    /// Daily data for the calendar years `first..=last`.
    pub fn years(first: i32, last: i32) -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(first, 1, 1).expect("valid year"),
            end: NaiveDate::from_ymd_opt(last, 12, 31).expect("valid year"),
            beta: [335f64.ln(), 2e-5, 0.01, 0.05, 0.04, -0.02, -0.12, -0.146, -0.06],
            temperature: TemperatureProcess::default(),
            residual: ResidualProcess::default(),
            level_shift: None,
            include_leap_days: false,
        }
    }

    /// Residual switched off: consumption is exactly `exp(T_t + S_t)`.
    pub fn noise_free(mut self) -> Self {
        self.residual = ResidualProcess {
            heating: 0.0,
            cooling: 0.0,
            base_sigma: 0.0,
            ..self.residual
        };
        self
    }
}

/// Ground truth for one retained day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedDay {
    pub date: NaiveDate,
    pub t: usize,
    /// `T_t + S_t` from the planted coefficients, including any level shift.
    pub glm_mean: f64,
    pub residual_mean: f64,
    pub residual_sigma: f64,
}

impl PlantedDay {
    /// Mean of log consumption.
    pub fn log_mean(&self) -> f64 {
        self.glm_mean + self.residual_mean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub days: Vec<DailyRecord>,
    /// One entry per non-leap day, aligned with the leap-free series.
    pub truth: Vec<PlantedDay>,
    pub coefficients: GlmCoefficients,
    pub holidays: HolidayCalendar,
}

impl ResidualProcess {
    fn mean(&self, dry: f64) -> f64 {
        self.heating * (self.heating_base - dry).max(0.0) + self.cooling * (dry - self.cooling_base).max(0.0)
    }

    fn sigma(&self, dry: f64, t: usize) -> f64 {
        let season = (4.0 * PI * t as f64 / DAYS_PER_YEAR as f64).cos();
        self.base_sigma * (1.0 + self.temperature_sigma * (dry - 62.0).abs() / 20.0) * (1.0 + self.seasonal_sigma * season)
    }
}

pub fn generate_synthetic(config: &SyntheticConfig, seed: u64) -> Result<SyntheticData> {
    if config.end < config.start {
        return Err(Error::InvalidInput(format!("synthetic range {}..{} is reversed", config.start, config.end)));
    }
    let tp = &config.temperature;
    if !(0.0..1.0).contains(&tp.persistence.abs()) {
        return Err(Error::InvalidInput("temperature persistence must lie in (-1, 1)".into()));
    }
    let holidays = HolidayCalendar::us_fixed_federal(config.start.year()..=config.end.year());
    let coefficients = GlmCoefficients::from_estimates(config.beta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let innovation = tp.noise_std * (1.0 - tp.persistence * tp.persistence).sqrt();

    let mut days: Vec<DailyRecord> = Vec::new();
    let mut truth = Vec::new();
    let mut anomaly = tp.noise_std * Distribution::<f64>::sample(&StandardNormal, &mut rng);
    let mut t = 0usize;
    for date in config.start.iter_days().take_while(|d| *d <= config.end) {
        if is_leap_day(date) {
            if config.include_leap_days {
                if let Some(prev) = days.last().copied() {
                    days.push(DailyRecord::new(date, prev.consumption, prev.dry_bulb, prev.wet_bulb, &holidays));
                }
            }
            continue;
        }
        let doy = super::day_of_year_365(date) as f64;
        let z_temp: f64 = StandardNormal.sample(&mut rng);
        let z_wet: f64 = StandardNormal.sample(&mut rng);
        let z_res: f64 = StandardNormal.sample(&mut rng);
        if t > 0 {
            anomaly = tp.persistence * anomaly + innovation * z_temp;
        }
        let climate = tp.mean - tp.amplitude * (2.0 * PI * (doy - tp.coldest_day) / DAYS_PER_YEAR as f64).cos();
        let dry = climate + anomaly;
        let wet = dry - tp.wet_offset + tp.wet_noise_std * z_wet;

        let features = calendar_features(date, t, &holidays);
        let mut glm_mean = coefficients.predict_one(&features);
        if let Some(shift) = config.level_shift {
            if date >= shift.from {
                glm_mean += shift.delta;
            }
        }
        let residual_mean = config.residual.mean(dry);
        let residual_sigma = config.residual.sigma(dry, t);
        let log_consumption = glm_mean + residual_mean + residual_sigma * z_res;

        days.push(DailyRecord::new(date, log_consumption.exp(), dry, wet, &holidays));
        truth.push(PlantedDay { date, t, glm_mean, residual_mean, residual_sigma });
        t += 1;
    }
    Ok(SyntheticData { days, truth, coefficients, holidays })
}

fn diurnal(hour: usize) -> f64 {
    (2.0 * PI * (hour as f64 - 9.0) / HOURS_PER_DAY as f64).sin()
}

/// Splits daily records into 24 hourly rows with a diurnal load and
/// temperature shape that aggregates back to the daily values.
pub fn to_hourly(days: &[DailyRecord]) -> Vec<HourlyRecord> {
    let weights: Vec<f64> = (0..HOURS_PER_DAY).map(|h| 1.0 + 0.3 * diurnal(h)).collect();
    let total: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(days.len() * HOURS_PER_DAY);
    for d in days {
        for (h, w) in weights.iter().enumerate() {
            let swing = 6.0 * diurnal(h);
            out.push(HourlyRecord {
                date: d.date,
                hour: h as u8,
                demand: d.consumption * 1000.0 * w / total,
                dry_bulb: d.dry_bulb + swing,
                wet_bulb: d.wet_bulb + 0.5 * swing,
            });
        }
    }
    out
}
