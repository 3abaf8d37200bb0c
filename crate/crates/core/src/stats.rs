//! Standard normal helpers and small descriptive statistics.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inverse of [`std_normal_cdf`] for `p` in (0, 1). Exactly 0 at `p = 0.5`.
pub fn std_normal_quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let z = Normal::standard().inverse_cdf(p);
    // one Newton step against the more accurate CDF
    let pdf = std_normal_pdf(z);
    if pdf > 0.0 {
        z - (std_normal_cdf(z) - p) / pdf
    } else {
        z
    }
}

/// Column summary in the style of a descriptive-statistics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
    let std = if n > 1 {
        (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(Summary { count: n, min: sorted[0], max: sorted[n - 1], mean, median, std })
}
