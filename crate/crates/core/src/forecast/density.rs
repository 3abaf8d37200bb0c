use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{std_normal_cdf, std_normal_pdf, std_normal_quantile};

/// Tolerance on `|CDF(x) − p|` when inverting a mixture.
pub const QUANTILE_TOLERANCE: f64 = 1e-10;
const MAX_QUANTILE_ITERATIONS: usize = 400;

/// One Gaussian in log-consumption space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub mu: f64,
    pub sigma: f64,
}

/// Predictive law of one day's log consumption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DayDensity {
    Gaussian(Component),
    /// Equal-weight mixture, one component per simulated weather path.
    Mixture(Vec<Component>),
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("percentile {p} outside (0, 1)")))
    }
}

/// Equal-weight mixture CDF at `x`.
pub fn mixture_cdf(components: &[Component], x: f64) -> f64 {
    let total: f64 = components.iter().map(|c| std_normal_cdf((x - c.mu) / c.sigma)).sum();
    total / components.len() as f64
}

pub fn mixture_pdf(components: &[Component], x: f64) -> f64 {
    let total: f64 = components.iter().map(|c| std_normal_pdf((x - c.mu) / c.sigma) / c.sigma).sum();
    total / components.len() as f64
}

/// Inverts the mixture CDF at `p`.
///
/// A single component is answered in closed form as `μ + σ z_p`. Otherwise
/// the bracket starts from the component extremes and is narrowed by
/// Newton steps that fall back to bisection whenever they leave it.
pub fn mixture_quantile(components: &[Component], p: f64) -> Result<f64> {
    check_p(p)?;
    match components {
        [] => Err(Error::EmptyInput("mixture components")),
        [c] => Ok(c.mu + c.sigma * std_normal_quantile(p)),
        _ => {
            let z = std_normal_quantile(p);
            let mut lo = components.iter().map(|c| c.mu + c.sigma * z).fold(f64::INFINITY, f64::min);
            let mut hi = components.iter().map(|c| c.mu + c.sigma * z).fold(f64::NEG_INFINITY, f64::max);
            let spread = components.iter().map(|c| c.sigma).fold(0.0, f64::max);
            while mixture_cdf(components, lo) > p {
                lo -= spread;
            }
            while mixture_cdf(components, hi) < p {
                hi += spread;
            }
            let mut x = 0.5 * (lo + hi);
            for _ in 0..MAX_QUANTILE_ITERATIONS {
                let err = mixture_cdf(components, x) - p;
                if err.abs() < QUANTILE_TOLERANCE {
                    return Ok(x);
                }
                if err > 0.0 {
                    hi = x;
                } else {
                    lo = x;
                }
                if hi - lo <= f64::EPSILON * x.abs().max(1.0) {
                    return Ok(x);
                }
                let pdf = mixture_pdf(components, x);
                let newton = x - err / pdf;
                x = if pdf > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            }
            Ok(x)
        }
    }
}

impl DayDensity {
    pub fn components(&self) -> &[Component] {
        match self {
            DayDensity::Gaussian(c) => std::slice::from_ref(c),
            DayDensity::Mixture(cs) => cs,
        }
    }

    /// Quantile of log consumption.
    pub fn quantile_log(&self, p: f64) -> Result<f64> {
        mixture_quantile(self.components(), p)
    }

    pub fn cdf_log(&self, x: f64) -> f64 {
        mixture_cdf(self.components(), x)
    }

    pub fn pdf_log(&self, x: f64) -> f64 {
        mixture_pdf(self.components(), x)
    }

    /// Mean of log consumption.
    pub fn mean_log(&self) -> f64 {
        let cs = self.components();
        cs.iter().map(|c| c.mu).sum::<f64>() / cs.len() as f64
    }

    /// Mean of the per-component variances.
    pub fn mean_component_variance(&self) -> f64 {
        let cs = self.components();
        cs.iter().map(|c| c.sigma * c.sigma).sum::<f64>() / cs.len() as f64
    }

    /// Total variance: mean component variance plus variance of the means.
    pub fn variance_log(&self) -> f64 {
        let cs = self.components();
        let mean = self.mean_log();
        let between = cs.iter().map(|c| (c.mu - mean).powi(2)).sum::<f64>() / cs.len() as f64;
        self.mean_component_variance() + between
    }

    pub fn sigma_log(&self) -> f64 {
        match self.components() {
            [c] => c.sigma,
            _ => self.variance_log().sqrt(),
        }
    }

    /// Median of log consumption.
    pub fn median_log(&self) -> Result<f64> {
        self.quantile_log(0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayForecast {
    pub date: NaiveDate,
    pub density: DayDensity,
}

impl DayForecast {
    /// Point forecast in GWh: the median, `exp` of the log-space median.
    pub fn point_gwh(&self) -> Result<f64> {
        Ok(self.density.median_log()?.exp())
    }

    pub fn quantile_gwh(&self, p: f64) -> Result<f64> {
        Ok(self.density.quantile_log(p)?.exp())
    }

    /// Central interval of probability `alpha` in GWh.
    pub fn central_interval_gwh(&self, alpha: f64) -> Result<(f64, f64)> {
        let tail = 0.5 * (1.0 - alpha);
        Ok((self.quantile_gwh(tail)?, self.quantile_gwh(1.0 - tail)?))
    }
}

/// Day-by-day density forecast over a horizon.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DensityForecast {
    pub days: Vec<DayForecast>,
}

impl DensityForecast {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn points_gwh(&self) -> Result<Vec<f64>> {
        self.days.iter().map(DayForecast::point_gwh).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.days.iter().map(|d| d.date).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(mu: f64, sigma: f64) -> Component {
        Component { mu, sigma }
    }

    #[test]
    fn single_component_is_closed_form() {
        let q = mixture_quantile(&[c(2.0, 0.5)], 0.975).unwrap();
        assert_eq!(q, 2.0 + 0.5 * std_normal_quantile(0.975));
        assert_eq!(mixture_quantile(&[c(2.0, 0.5)], 0.5).unwrap(), 2.0);
    }

    #[test]
    fn symmetric_pair() {
        let m = [c(-1.0, 1.0), c(1.0, 1.0)];
        assert!((mixture_cdf(&m, 0.0) - 0.5).abs() < 1e-15);
        assert!(mixture_quantile(&m, 0.5).unwrap().abs() < 1e-9);
        let m = [c(3.0, 0.2), c(7.0, 0.2)];
        assert!((mixture_quantile(&m, 0.5).unwrap() - 5.0).abs() < 1e-6);
    }

    #[test]
    fn percentile_domain() {
        assert!(mixture_quantile(&[c(0.0, 1.0)], 0.0).is_err());
        assert!(mixture_quantile(&[c(0.0, 1.0)], 1.0).is_err());
        assert!(mixture_quantile(&[], 0.5).is_err());
    }

    fn mixture() -> impl Strategy<Value = Vec<Component>> {
        proptest::collection::vec((-3.0f64..3.0, 0.05f64..2.0).prop_map(|(m, s)| c(m, s)), 2..8)
    }

    proptest! {
        #[test]
        fn quantile_inverts_cdf(m in mixture(), x in -4.0f64..4.0) {
            let p = mixture_cdf(&m, x);
            prop_assume!(p > 1e-6 && p < 1.0 - 1e-6);
            let q = mixture_quantile(&m, p).unwrap();
            prop_assert!((mixture_cdf(&m, q) - p).abs() < QUANTILE_TOLERANCE, "x {} q {}", x, q);
        }

        #[test]
        fn quantile_is_increasing(m in mixture(), a in 0.001f64..0.999, b in 0.001f64..0.999) {
            prop_assume!((a - b).abs() > 1e-6);
            let (p1, p2) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(mixture_quantile(&m, p1).unwrap() < mixture_quantile(&m, p2).unwrap());
        }

        #[test]
        fn total_variance_dominates(m in mixture()) {
            let d = DayDensity::Mixture(m);
            prop_assert!(d.variance_log() >= d.mean_component_variance());
        }
    }

    #[test]
    fn lognormal_quantiles() {
        let day = DayForecast { date: NaiveDate::from_ymd_opt(2012, 1, 1).unwrap(), density: DayDensity::Gaussian(c(5.8, 0.03)) };
        assert_eq!(day.point_gwh().unwrap(), 5.8f64.exp());
        let z = std_normal_quantile(0.05);
        assert_eq!(day.quantile_gwh(0.05).unwrap(), (5.8 + 0.03 * z).exp());
        let (lo, hi) = day.central_interval_gwh(0.95).unwrap();
        assert!(lo < day.point_gwh().unwrap() && day.point_gwh().unwrap() < hi);
    }
}
