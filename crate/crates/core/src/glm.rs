//! Linear trend, harmonic seasonality and day-type dummies on log
//! consumption, fitted by ordinary least squares.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::CalendarFeatures;
use crate::linalg::least_squares;

pub const GLM_COEFFICIENTS: usize = 9;

pub const COEFFICIENT_NAMES: [&str; GLM_COEFFICIENTS] = [
    "intercept", "trend", "sin_wt", "cos_wt", "sin_2wt", "cos_2wt", "saturday", "sunday", "holiday",
];

/// Two-sided 1% critical value of the standard normal.
pub const SIGNIFICANCE_1PCT: f64 = 2.576;

/// One design row: `[1, t, sin ωt, cos ωt, sin 2ωt, cos 2ωt, d_sat, d_sun, d_hol]`.
pub fn design_row(f: &CalendarFeatures) -> [f64; GLM_COEFFICIENTS] {
    [1.0, f.t, f.sin1, f.cos1, f.sin2, f.cos2, f.d_sat, f.d_sun, f.d_hol]
}

pub fn build_design_matrix(features: &[CalendarFeatures]) -> Vec<Vec<f64>> {
    features.iter().map(|f| design_row(f).to_vec()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlmCoefficients {
    pub estimates: [f64; GLM_COEFFICIENTS],
    pub std_errors: [f64; GLM_COEFFICIENTS],
}

impl GlmCoefficients {
    /// Coefficients without standard errors, e.g. a planted ground truth.
    pub fn from_estimates(estimates: [f64; GLM_COEFFICIENTS]) -> Self {
        Self { estimates, std_errors: [0.0; GLM_COEFFICIENTS] }
    }

    /// `T_t + S_t` for one day.
    pub fn predict_one(&self, f: &CalendarFeatures) -> f64 {
        design_row(f).iter().zip(&self.estimates).map(|(x, b)| x * b).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmFit {
    pub coefficients: GlmCoefficients,
    /// Fitted `T_t + S_t` per training day.
    pub fitted: Vec<f64>,
    /// `R_t = Y_t − T_t − S_t` per training day.
    pub residuals: Vec<f64>,
    pub residual_variance: f64,
}

impl GlmFit {
    pub fn residual_std(&self) -> f64 {
        self.residual_variance.sqrt()
    }
}

pub fn fit_ols(design: &[Vec<f64>], y: &[f64]) -> Result<GlmFit> {
    if let Some(row) = design.first() {
        if row.len() != GLM_COEFFICIENTS {
            return Err(Error::LengthMismatch { expected: GLM_COEFFICIENTS, actual: row.len() });
        }
    }
    let ls = least_squares(design, y)?;
    let mut estimates = [0.0; GLM_COEFFICIENTS];
    let mut std_errors = [0.0; GLM_COEFFICIENTS];
    estimates.copy_from_slice(&ls.coefficients);
    std_errors.copy_from_slice(&ls.std_errors);
    Ok(GlmFit {
        coefficients: GlmCoefficients { estimates, std_errors },
        fitted: ls.fitted,
        residuals: ls.residuals,
        residual_variance: ls.residual_variance,
    })
}

pub fn glm_predict(coefficients: &GlmCoefficients, features: &[CalendarFeatures]) -> Vec<f64> {
    features.iter().map(|f| coefficients.predict_one(f)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Significance {
    pub name: &'static str,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub significant_1pct: bool,
}

/// t-statistics against the two-sided 1% normal threshold.
pub fn coefficient_significance(coefficients: &GlmCoefficients) -> Result<Vec<Significance>> {
    COEFFICIENT_NAMES
        .iter()
        .enumerate()
        .map(|(j, &name)| {
            let estimate = coefficients.estimates[j];
            let std_error = coefficients.std_errors[j];
            let t_stat = if std_error > 0.0 {
                estimate / std_error
            } else if estimate == 0.0 {
                0.0
            } else {
                return Err(Error::Degenerate(format!("zero standard error for non-zero {name}")));
            };
            Ok(Significance {
                name,
                estimate,
                std_error,
                t_stat,
                significant_1pct: t_stat.abs() > SIGNIFICANCE_1PCT,
            })
        })
        .collect()
}

/// Writes `name,estimate,std_error,t_stat,significant_1pct`.
pub fn write_coefficient_report<W: Write>(out: W, rows: &[Significance]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::calendar_features;
    use crate::ingest::HolidayCalendar;
    use chrono::NaiveDate;

    fn features(start: NaiveDate, n: usize, cal: &HolidayCalendar) -> Vec<CalendarFeatures> {
        start.iter_days().take(n).enumerate().map(|(t, d)| calendar_features(d, t, cal)).collect()
    }

    #[test]
    fn first_row_of_plain_weekday() {
        // 2010-01-04 is a Monday.
        let f = calendar_features(NaiveDate::from_ymd_opt(2010, 1, 4).unwrap(), 0, &HolidayCalendar::default());
        assert_eq!(design_row(&f), [1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn holiday_sunday_sets_both_dummies() {
        let cal = HolidayCalendar::us_fixed_federal(2011..=2011);
        let f = calendar_features(NaiveDate::from_ymd_opt(2011, 12, 25).unwrap(), 358, &cal);
        let row = design_row(&f);
        assert_eq!(&row[6..], &[0.0, 1.0, 1.0]);
    }

    #[test]
    fn annual_sine_integrates_to_zero() {
        let x = build_design_matrix(&features(NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(), 365, &HolidayCalendar::default()));
        let total: f64 = x.iter().map(|r| r[2]).sum();
        assert!(total.abs() < 1e-6, "{total}");
    }

    fn three_years() -> Vec<CalendarFeatures> {
        let cal = HolidayCalendar::us_fixed_federal(2009..=2011);
        features(NaiveDate::from_ymd_opt(2009, 1, 1).unwrap(), 3 * 365, &cal)
    }

    #[test]
    fn zero_target_gives_zero_fit() {
        let x = build_design_matrix(&three_years());
        let fit = fit_ols(&x, &vec![0.0; x.len()]).unwrap();
        assert!(fit.coefficients.estimates.iter().all(|&b| b == 0.0));
        assert!(fit.residuals.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn prediction_matches_fitted_values() {
        let f = three_years();
        let x = build_design_matrix(&f);
        let y: Vec<f64> = f.iter().map(|r| 5.8 + 0.1 * r.sin2 + 0.01 * (r.t * 0.37).sin()).collect();
        let fit = fit_ols(&x, &y).unwrap();
        let pred = glm_predict(&fit.coefficients, &f);
        for (a, b) in pred.iter().zip(&fit.fitted) {
            assert!((a - b).abs() < 1e-12);
        }
        for ((r, p), obs) in fit.residuals.iter().zip(&fit.fitted).zip(&y) {
            assert!((r + p - obs).abs() < 1e-12);
        }
        let mean = fit.residuals.iter().sum::<f64>() / fit.residuals.len() as f64;
        assert!(mean.abs() < 1e-10);
        // residuals orthogonal to every column
        for j in 0..GLM_COEFFICIENTS {
            let dot: f64 = x.iter().zip(&fit.residuals).map(|(row, e)| row[j] * e).sum();
            let norm: f64 = x.iter().map(|row| row[j] * row[j]).sum::<f64>().sqrt();
            assert!(dot.abs() < 1e-8 * norm.max(1.0), "column {j}: {dot}");
        }
    }

    #[test]
    fn row_order_does_not_matter() {
        let f = three_years();
        let x = build_design_matrix(&f);
        let y: Vec<f64> = f.iter().map(|r| 5.0 + 0.02 * (r.t * 1.3).cos() + 0.2 * r.cos1).collect();
        let a = fit_ols(&x, &y).unwrap();
        let (xr, yr): (Vec<_>, Vec<_>) = x.iter().cloned().zip(y.iter().copied()).rev().unzip();
        let b = fit_ols(&xr, &yr).unwrap();
        for (p, q) in a.coefficients.estimates.iter().zip(&b.coefficients.estimates) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_predictions() {
        let f = three_years();
        assert!(glm_predict(&GlmCoefficients::from_estimates([0.0; 9]), &f).iter().all(|&v| v == 0.0));
        let mut b = [0.0; 9];
        b[0] = 4.2;
        assert!(glm_predict(&GlmCoefficients::from_estimates(b), &f).iter().all(|&v| v == 4.2));
    }

    #[test]
    fn significance_rules() {
        let mut c = GlmCoefficients { estimates: [0.0; 9], std_errors: [0.1; 9] };
        c.estimates[1] = 1.0;
        let s = coefficient_significance(&c).unwrap();
        assert_eq!(s[0].t_stat, 0.0);
        assert!(!s[0].significant_1pct);
        assert!(s[1].significant_1pct);
        c.std_errors[2] = 0.0;
        c.estimates[2] = 0.5;
        assert!(matches!(coefficient_significance(&c), Err(Error::Degenerate(_))));
    }

    #[test]
    fn report_csv_header() {
        let c = GlmCoefficients { estimates: [1.0; 9], std_errors: [0.5; 9] };
        let mut buf = Vec::new();
        write_coefficient_report(&mut buf, &coefficient_significance(&c).unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("name,estimate,std_error,t_stat,significant_1pct\nintercept,1.0,0.5,2.0,false\n"));
    }
}
