//! Ex-post and ex-ante density forecasts.
//!
//! Ex post, the trained network runs across the horizon on realized weather
//! and each day's forecast is a Gaussian in log space with mean
//! `T_t + S_t + μ_t` and standard deviation `σ_t`. Ex ante, the network runs
//! once per bootstrapped temperature path and each day's forecast is the
//! equal-weight mixture of the per-path Gaussians.

mod bootstrap;
mod density;
mod io;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{input_row, CalendarFeatures, MinMaxScaler, WeatherFeatures};
use crate::glm::GlmCoefficients;
use crate::nax::{forward, NaxConfig, NaxParams, OUTPUTS};

pub use bootstrap::{bootstrap_temperatures, BlockProvenance, BootstrapConfig, TemperatureHistory, TemperaturePath};
pub use density::{
    mixture_cdf, mixture_pdf, mixture_quantile, Component, DayDensity, DayForecast, DensityForecast,
    QUANTILE_TOLERANCE,
};
pub use io::{
    read_forecast_csv, read_mixture_csv, slice_dates, write_density_slices, write_forecast_csv, write_mixture_csv,
    ForecastRow, FORECAST_PERCENTILES,
};

/// Calendar position of one forecast day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalendarDay {
    pub date: NaiveDate,
    pub t: usize,
    pub calendar: CalendarFeatures,
}

/// Everything known about a forecast day except its consumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExogenousDay {
    pub date: NaiveDate,
    pub t: usize,
    pub weather: WeatherFeatures,
    pub calendar: CalendarFeatures,
}

impl ExogenousDay {
    pub fn calendar_day(&self) -> CalendarDay {
        CalendarDay { date: self.date, t: self.t, calendar: self.calendar }
    }
}

/// A fitted GLM + network pair with the scalers of its training window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub config: NaxConfig,
    pub glm: GlmCoefficients,
    pub glm_residual_std: f64,
    pub params: NaxParams,
    pub input_scaler: MinMaxScaler,
    /// Single-column scaler of the GLM residuals.
    pub target_scaler: MinMaxScaler,
    /// Network output after the last training day, in normalized space.
    pub feedback: [f64; OUTPUTS],
    pub training_start: NaiveDate,
    pub training_end: NaiveDate,
    /// Day index of the first day after the training window.
    pub next_t: usize,
}

impl TrainedModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.params.inputs() != model.input_scaler.width() || model.target_scaler.width() != 1 {
            return Err(Error::InvalidInput("model scalers do not match the network shape".into()));
        }
        Ok(model)
    }

    /// Log-space Gaussian per day for one weather sequence.
    pub fn components(&self, days: &[CalendarDay], weather: &[WeatherFeatures]) -> Result<Vec<Component>> {
        check_horizon(self, days)?;
        if weather.len() != days.len() {
            return Err(Error::MissingData(format!("{} weather rows for {} forecast days", weather.len(), days.len())));
        }
        let inputs = days
            .iter()
            .zip(weather)
            .map(|(d, w)| {
                if !(w.dry_bulb.is_finite() && w.wet_bulb.is_finite()) {
                    return Err(Error::MissingData(format!("weather missing on {}", d.date)));
                }
                self.input_scaler.transform_row(&input_row(*w, &d.calendar))
            })
            .collect::<Result<Vec<_>>>()?;
        let pass = forward(&self.params, self.config.activation, &inputs, self.feedback)?;
        let range = self.target_scaler.range(0);
        Ok(days
            .iter()
            .zip(pass.outputs())
            .map(|(d, out)| Component {
                mu: self.glm.predict_one(&d.calendar) + self.target_scaler.unscale_value(0, out.mu),
                sigma: out.sigma * range,
            })
            .collect())
    }
}

fn check_horizon(model: &TrainedModel, days: &[CalendarDay]) -> Result<()> {
    let Some(first) = days.first() else {
        return Err(Error::EmptyInput("forecast horizon"));
    };
    if first.t != model.next_t {
        return Err(Error::MissingData(format!(
            "forecast starts at day index {} but the model ends before index {}",
            first.t, model.next_t
        )));
    }
    for pair in days.windows(2) {
        if pair[1].t != pair[0].t + 1 {
            return Err(Error::MissingData(format!("day rows missing between {} and {}", pair[0].date, pair[1].date)));
        }
    }
    Ok(())
}

/// Forecast with realized out-of-sample weather.
pub fn forecast_expost(model: &TrainedModel, days: &[ExogenousDay]) -> Result<DensityForecast> {
    let calendar: Vec<CalendarDay> = days.iter().map(ExogenousDay::calendar_day).collect();
    let weather: Vec<WeatherFeatures> = days.iter().map(|d| d.weather).collect();
    let components = model.components(&calendar, &weather)?;
    Ok(DensityForecast {
        days: calendar
            .iter()
            .zip(components)
            .map(|(d, c)| DayForecast { date: d.date, density: DayDensity::Gaussian(c) })
            .collect(),
    })
}

/// Forecast as an equal-weight mixture over simulated temperature paths.
pub fn forecast_exante(model: &TrainedModel, paths: &[TemperaturePath], days: &[CalendarDay]) -> Result<DensityForecast> {
    if paths.is_empty() {
        return Err(Error::EmptyInput("temperature paths"));
    }
    let per_path: Vec<Vec<Component>> =
        paths.par_iter().map(|p| model.components(days, &p.days)).collect::<Result<_>>()?;
    let forecast = DensityForecast {
        days: days
            .iter()
            .enumerate()
            .map(|(i, d)| DayForecast {
                date: d.date,
                density: DayDensity::Mixture(per_path.iter().map(|path| path[i]).collect()),
            })
            .collect(),
    };
    for day in &forecast.days {
        if day.density.variance_log() < day.density.mean_component_variance() {
            return Err(Error::Degenerate(format!("mixture variance below mean component variance on {}", day.date)));
        }
    }
    Ok(forecast)
}
