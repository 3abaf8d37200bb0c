//! Linear comparison models: the calendar-only GLM and an ARX regression
//! with one autoregressive lag plus weather.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{CalendarFeatures, WeatherFeatures};
use crate::forecast::{CalendarDay, Component, DayDensity, DayForecast, DensityForecast, ExogenousDay};
use crate::glm::{design_row, GlmCoefficients, GlmFit, GLM_COEFFICIENTS};
use crate::linalg::least_squares;

/// GLM design, `Y_{t−1}`, dry bulb, wet bulb.
pub const ARX_COEFFICIENTS: usize = GLM_COEFFICIENTS + 3;
const AR_INDEX: usize = GLM_COEFFICIENTS;
const DRY_INDEX: usize = GLM_COEFFICIENTS + 1;
const WET_INDEX: usize = GLM_COEFFICIENTS + 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArxFit {
    pub coefficients: [f64; ARX_COEFFICIENTS],
    pub std_errors: [f64; ARX_COEFFICIENTS],
    pub residual_variance: f64,
    /// Fitted values for days `1..n` of the training series.
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl ArxFit {
    pub fn phi(&self) -> f64 {
        self.coefficients[AR_INDEX]
    }

    pub fn weather_coefficients(&self) -> [f64; 2] {
        [self.coefficients[DRY_INDEX], self.coefficients[WET_INDEX]]
    }

    /// The calendar part on its own, as GLM coefficients.
    pub fn calendar_part(&self) -> GlmCoefficients {
        let mut estimates = [0.0; GLM_COEFFICIENTS];
        estimates.copy_from_slice(&self.coefficients[..GLM_COEFFICIENTS]);
        GlmCoefficients::from_estimates(estimates)
    }

    /// One-step conditional mean given the previous log consumption.
    pub fn mean_one(&self, calendar: &CalendarFeatures, weather: WeatherFeatures, previous: f64) -> f64 {
        self.calendar_part().predict_one(calendar)
            + self.phi() * previous
            + self.coefficients[DRY_INDEX] * weather.dry_bulb
            + self.coefficients[WET_INDEX] * weather.wet_bulb
    }

    /// Variance `h` steps ahead: `σ² Σ_{j<h} φ^{2j}`.
    pub fn variance_at(&self, h: usize) -> f64 {
        let phi2 = self.phi() * self.phi();
        let mut term = 1.0;
        let mut sum = 0.0;
        for _ in 0..h {
            sum += term;
            term *= phi2;
        }
        self.residual_variance * sum
    }
}

pub fn arx_design_row(calendar: &CalendarFeatures, weather: WeatherFeatures, previous: f64) -> Vec<f64> {
    let mut row = design_row(calendar).to_vec();
    row.extend([previous, weather.dry_bulb, weather.wet_bulb]);
    row
}

/// OLS of `Y_t` on the GLM design, `Y_{t−1}` and weather. The first day has
/// no lag and only serves as a regressor.
pub fn fit_arx(y: &[f64], calendar: &[CalendarFeatures], weather: &[WeatherFeatures]) -> Result<ArxFit> {
    if y.len() < 2 {
        return Err(Error::InsufficientHistory(format!("ARX needs at least 2 days, got {}", y.len())));
    }
    for len in [calendar.len(), weather.len()] {
        if len != y.len() {
            return Err(Error::LengthMismatch { expected: y.len(), actual: len });
        }
    }
    let rows: Vec<Vec<f64>> = (1..y.len()).map(|t| arx_design_row(&calendar[t], weather[t], y[t - 1])).collect();
    let ls = least_squares(&rows, &y[1..])?;
    if !(ls.residual_variance > 0.0) {
        return Err(Error::Degenerate("ARX residual variance is zero".into()));
    }
    let mut coefficients = [0.0; ARX_COEFFICIENTS];
    let mut std_errors = [0.0; ARX_COEFFICIENTS];
    coefficients.copy_from_slice(&ls.coefficients);
    std_errors.copy_from_slice(&ls.std_errors);
    Ok(ArxFit { coefficients, std_errors, residual_variance: ls.residual_variance, fitted: ls.fitted, residuals: ls.residuals })
}

/// Iterated forecast feeding each predicted mean back as the next lag.
pub fn forecast_arx(fit: &ArxFit, days: &[ExogenousDay], last_observed: f64) -> DensityForecast {
    let mut previous = last_observed;
    let days = days
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mu = fit.mean_one(&d.calendar, d.weather, previous);
            previous = mu;
            DayForecast { date: d.date, density: DayDensity::Gaussian(Component { mu, sigma: fit.variance_at(i + 1).sqrt() }) }
        })
        .collect();
    DensityForecast { days }
}

/// Calendar-only forecast with the training residual spread.
pub fn glm_density(coefficients: &GlmCoefficients, sigma: f64, days: &[CalendarDay]) -> Result<DensityForecast> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Degenerate(format!("GLM residual standard deviation is {sigma}")));
    }
    Ok(DensityForecast {
        days: days
            .iter()
            .map(|d| DayForecast {
                date: d.date,
                density: DayDensity::Gaussian(Component { mu: coefficients.predict_one(&d.calendar), sigma }),
            })
            .collect(),
    })
}

pub fn forecast_glm_density(fit: &GlmFit, days: &[CalendarDay]) -> Result<DensityForecast> {
    glm_density(&fit.coefficients, fit.residual_std(), days)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::calendar_features;
    use crate::glm::glm_predict;
    use crate::ingest::HolidayCalendar;
    use chrono::NaiveDate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    struct Inputs {
        dates: Vec<NaiveDate>,
        calendar: Vec<CalendarFeatures>,
        weather: Vec<WeatherFeatures>,
    }

    fn inputs(n: usize, seed: u64) -> Inputs {
        let hol = HolidayCalendar::us_fixed_federal(2010..=2020);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dates: Vec<NaiveDate> = NaiveDate::from_ymd_opt(2011, 1, 1).unwrap().iter_days().take(n).collect();
        let calendar = dates.iter().enumerate().map(|(t, d)| calendar_features(*d, t, &hol)).collect();
        let weather = (0..n)
            .map(|_| {
                let dry = rng.random_range(10.0..90.0);
                WeatherFeatures { dry_bulb: dry, wet_bulb: dry - rng.random_range(0.0..8.0) }
            })
            .collect();
        Inputs { dates, calendar, weather }
    }

    fn simulate(x: &Inputs, coef: &[f64; ARX_COEFFICIENTS], noise: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y = vec![coef[0] / (1.0 - coef[AR_INDEX])];
        for t in 1..x.calendar.len() {
            let row = arx_design_row(&x.calendar[t], x.weather[t], y[t - 1]);
            let mean: f64 = row.iter().zip(coef).map(|(a, b)| a * b).sum();
            let e: f64 = StandardNormal.sample(&mut rng);
            y.push(mean + noise * e);
        }
        y
    }

    fn horizon(x: &Inputs, from: usize) -> Vec<ExogenousDay> {
        (from..x.dates.len())
            .map(|t| ExogenousDay { date: x.dates[t], t, weather: x.weather[t], calendar: x.calendar[t] })
            .collect()
    }

    #[test]
    fn recovers_ar1_within_two_standard_errors() {
        let x = inputs(1500, 1);
        let mut coef = [0.0; ARX_COEFFICIENTS];
        coef[0] = 1.2;
        coef[AR_INDEX] = 0.8;
        let y = simulate(&x, &coef, 0.05, 2);
        let fit = fit_arx(&y, &x.calendar, &x.weather).unwrap();
        assert!((fit.phi() - 0.8).abs() < 2.0 * fit.std_errors[AR_INDEX], "phi {} se {}", fit.phi(), fit.std_errors[AR_INDEX]);
        for (k, g) in fit.weather_coefficients().iter().enumerate() {
            assert!(g.abs() < 3.0 * fit.std_errors[DRY_INDEX + k], "weather coefficient {g}");
        }
        assert!((fit.residual_variance.sqrt() - 0.05).abs() < 0.005);
    }

    #[test]
    fn noise_free_recovery_is_exact() {
        let x = inputs(800, 3);
        let coef = [2.0, 1e-4, 0.02, 0.05, -0.01, 0.03, -0.1, -0.15, -0.07, 0.6, 0.004, -0.002];
        let y = simulate(&x, &coef, 0.0, 0);
        let fit = fit_arx(&y, &x.calendar, &x.weather).unwrap();
        for (a, b) in fit.coefficients.iter().zip(&coef) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_short_series() {
        let x = inputs(1, 0);
        assert!(fit_arx(&[5.0], &x.calendar, &x.weather).is_err());
    }

    fn fitted(coefficients: [f64; ARX_COEFFICIENTS], variance: f64) -> ArxFit {
        ArxFit { coefficients, std_errors: [0.0; ARX_COEFFICIENTS], residual_variance: variance, fitted: vec![], residuals: vec![] }
    }

    #[test]
    fn intercept_only_is_flat() {
        let x = inputs(40, 5);
        let mut coef = [0.0; ARX_COEFFICIENTS];
        coef[0] = 5.9;
        let f = forecast_arx(&fitted(coef, 0.01), &horizon(&x, 10), 100.0);
        for d in &f.days {
            assert_eq!(d.density.mean_log(), 5.9);
            assert_eq!(d.density.sigma_log(), 0.1);
        }
    }

    #[test]
    fn recursion_and_variance() {
        let x = inputs(60, 6);
        let coef = [2.0, 1e-4, 0.02, 0.05, -0.01, 0.03, -0.1, -0.15, -0.07, 0.6, 0.004, -0.002];
        let fit = fitted(coef, 0.0004);
        let days = horizon(&x, 20);
        let f = forecast_arx(&fit, &days, 5.7);
        let row = arx_design_row(&days[0].calendar, days[0].weather, 5.7);
        let direct: f64 = row.iter().zip(&coef).map(|(a, b)| a * b).sum();
        assert!((f.days[0].density.mean_log() - direct).abs() < 1e-12);
        let mut prev = 5.7;
        let mut var = 0.0;
        for (h, (d, exo)) in f.days.iter().zip(&days).enumerate() {
            let r = arx_design_row(&exo.calendar, exo.weather, prev);
            prev = r.iter().zip(&coef).map(|(a, b)| a * b).sum();
            var += 0.0004 * 0.36f64.powi(h as i32);
            assert!((d.density.mean_log() - prev).abs() < 1e-12);
            assert!((d.density.sigma_log() - var.sqrt()).abs() < 1e-12);
        }
        let mut no_ar = coef;
        no_ar[AR_INDEX] = 0.0;
        let a = forecast_arx(&fitted(no_ar, 0.0004), &days, 5.7);
        let b = forecast_arx(&fitted(no_ar, 0.0004), &days, -3.0);
        assert_eq!(a, b);
    }

    #[test]
    fn zeroed_arx_reproduces_glm_mean() {
        let x = inputs(400, 7);
        let beta = [5.8, 2e-5, 0.01, 0.05, 0.04, -0.02, -0.12, -0.146, -0.06];
        let mut coef = [0.0; ARX_COEFFICIENTS];
        coef[..GLM_COEFFICIENTS].copy_from_slice(&beta);
        let days = horizon(&x, 0);
        let arx = forecast_arx(&fitted(coef, 0.01), &days, 6.0);
        let glm_mean = glm_predict(&GlmCoefficients::from_estimates(beta), &x.calendar);
        let cal: Vec<CalendarDay> = days.iter().map(ExogenousDay::calendar_day).collect();
        let glm = glm_density(&GlmCoefficients::from_estimates(beta), 0.1, &cal).unwrap();
        for ((a, g), m) in arx.days.iter().zip(&glm.days).zip(&glm_mean) {
            assert_eq!(a.density.mean_log(), *m);
            assert_eq!(g.density.mean_log(), *m);
        }
    }

    #[test]
    fn glm_density_spread() {
        let x = inputs(30, 8);
        let cal: Vec<CalendarDay> = horizon(&x, 0).iter().map(ExogenousDay::calendar_day).collect();
        let coefs = GlmCoefficients::from_estimates([5.8, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let zero = GlmFit { coefficients: coefs, fitted: vec![], residuals: vec![], residual_variance: 0.0 };
        assert!(matches!(forecast_glm_density(&zero, &cal), Err(Error::Degenerate(_))));
        let fit = GlmFit { residual_variance: 0.0025, ..zero };
        let f = forecast_glm_density(&fit, &cal).unwrap();
        for d in &f.days {
            let lo = d.density.quantile_log(0.025).unwrap();
            let hi = d.density.quantile_log(0.975).unwrap();
            assert!(((hi - lo) / 2.0 - 1.959964 * 0.05).abs() < 1e-7);
        }
    }
}
