//! Point accuracy, pinball loss and interval backtests.

use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::DensityForecast;

/// χ²(1) critical value at the 95% level.
pub const UC_THRESHOLD: f64 = 3.84;
/// χ²(2) critical value at the 95% level.
pub const CC_THRESHOLD: f64 = 5.99;
pub const PERCENTILES: usize = 99;

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a == 0 {
        return Err(Error::EmptyInput("forecast"));
    }
    if a != b {
        return Err(Error::LengthMismatch { expected: a, actual: b });
    }
    Ok(())
}

pub fn rmse(forecast: &[f64], realized: &[f64]) -> Result<f64> {
    check_lengths(forecast.len(), realized.len())?;
    let sse: f64 = forecast.iter().zip(realized).map(|(f, y)| (y - f).powi(2)).sum();
    Ok((sse / forecast.len() as f64).sqrt())
}

/// Mean absolute percentage error, in percent.
pub fn mape(forecast: &[f64], realized: &[f64]) -> Result<f64> {
    check_lengths(forecast.len(), realized.len())?;
    let mut total = 0.0;
    for (f, y) in forecast.iter().zip(realized) {
        if !(*y > 0.0) {
            return Err(Error::InvalidInput(format!("realized value {y} must be positive for MAPE")));
        }
        total += (y - f).abs() / y;
    }
    Ok(100.0 * total / forecast.len() as f64)
}

/// Pinball loss of quantile `q` at level `p` ∈ (0, 1).
pub fn pinball_loss(p: f64, q: f64, y: f64) -> f64 {
    if y >= q {
        p * (y - q)
    } else {
        (1.0 - p) * (q - y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinballCurve {
    /// Mean loss at percentiles 1..=99.
    pub losses: Vec<f64>,
    pub apl: f64,
}

/// Per-percentile pinball loss for rows of 99 quantiles (percentiles 1..=99).
pub fn pinball(quantiles: &[Vec<f64>], realized: &[f64]) -> Result<PinballCurve> {
    check_lengths(quantiles.len(), realized.len())?;
    let mut losses = vec![0.0; PERCENTILES];
    for (day, (row, y)) in quantiles.iter().zip(realized).enumerate() {
        if row.len() != PERCENTILES {
            return Err(Error::LengthMismatch { expected: PERCENTILES, actual: row.len() });
        }
        if let Some(k) = row.windows(2).position(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidInput(format!(
                "quantiles on day {day} decrease between percentiles {} and {}",
                k + 1,
                k + 2
            )));
        }
        for (k, q) in row.iter().enumerate() {
            losses[k] += pinball_loss((k + 1) as f64 / 100.0, *q, *y);
        }
    }
    let n = quantiles.len() as f64;
    losses.iter_mut().for_each(|l| *l /= n);
    let apl = losses.iter().sum::<f64>() / PERCENTILES as f64;
    Ok(PinballCurve { losses, apl })
}

/// Quantiles in GWh for each day at each probability, computed in parallel.
pub fn quantile_table(forecast: &DensityForecast, probabilities: &[f64]) -> Result<Vec<Vec<f64>>> {
    forecast
        .days
        .par_iter()
        .map(|d| probabilities.iter().map(|p| d.quantile_gwh(*p)).collect())
        .collect()
}

pub fn percentile_levels() -> Vec<f64> {
    (1..=PERCENTILES).map(|p| p as f64 / 100.0).collect()
}

/// Coverage levels 5%, 10%, …, 95% and 99%.
pub fn default_alphas() -> Vec<f64> {
    (1..=19).map(|k| k as f64 * 0.05).chain([0.99]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationSeries {
    pub alpha: f64,
    pub dates: Vec<NaiveDate>,
    /// `true` where the realized value fell outside the central interval.
    pub outside: Vec<bool>,
}

impl ViolationSeries {
    pub fn len(&self) -> usize {
        self.outside.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outside.is_empty()
    }

    pub fn violations(&self) -> usize {
        self.outside.iter().filter(|v| **v).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveragePoint {
    pub alpha: f64,
    pub empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Backtest {
    pub coverage: Vec<CoveragePoint>,
    pub violations: Vec<ViolationSeries>,
}

/// Fraction of days inside each central interval, plus day-level violations.
pub fn backtest_ci(forecast: &DensityForecast, realized: &[f64], alphas: &[f64]) -> Result<Backtest> {
    check_lengths(forecast.len(), realized.len())?;
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::InvalidInput(format!("coverage level {a} outside (0, 1)")));
    }
    let probs: Vec<f64> = alphas.iter().flat_map(|a| [0.5 * (1.0 - a), 0.5 * (1.0 + a)]).collect();
    let table = quantile_table(forecast, &probs)?;
    let dates = forecast.dates();
    let mut coverage = Vec::with_capacity(alphas.len());
    let mut violations = Vec::with_capacity(alphas.len());
    for (k, alpha) in alphas.iter().enumerate() {
        let outside: Vec<bool> =
            table.iter().zip(realized).map(|(row, y)| *y < row[2 * k] || *y > row[2 * k + 1]).collect();
        let inside = outside.iter().filter(|o| !**o).count();
        coverage.push(CoveragePoint { alpha: *alpha, empirical: inside as f64 / outside.len() as f64 });
        violations.push(ViolationSeries { alpha: *alpha, dates: dates.clone(), outside });
    }
    Ok(Backtest { coverage, violations })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    pub statistic: f64,
    pub threshold: f64,
    pub reject: bool,
}

impl LrTest {
    pub fn against(statistic: f64, threshold: f64) -> Self {
        Self { statistic, threshold, reject: statistic > threshold }
    }
}

/// `n ln π` with `0 ln 0 = 0`.
fn xlog(n: usize, pi: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * pi.ln()
    }
}

fn bernoulli_loglik(n0: usize, n1: usize, pi: f64) -> f64 {
    xlog(n1, pi) + xlog(n0, 1.0 - pi)
}

/// Kupiec unconditional coverage test against nominal violation rate `p`.
pub fn uc_test(series: &ViolationSeries, p: f64) -> Result<LrTest> {
    if series.is_empty() {
        return Err(Error::EmptyInput("violation series"));
    }
    let n1 = series.violations();
    let n0 = series.len() - n1;
    let pi = n1 as f64 / series.len() as f64;
    let stat = -2.0 * (bernoulli_loglik(n0, n1, p) - bernoulli_loglik(n0, n1, pi));
    Ok(LrTest::against(stat.max(0.0), UC_THRESHOLD))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalCoverage {
    pub unconditional: f64,
    pub independence: f64,
    pub test: LrTest,
}

/// Christoffersen conditional coverage: unconditional plus first-order
/// Markov independence.
pub fn cc_test(series: &ViolationSeries, p: f64) -> Result<ConditionalCoverage> {
    if series.len() < 2 {
        return Err(Error::InsufficientHistory("conditional coverage needs at least 2 days".into()));
    }
    let uc = uc_test(series, p)?.statistic;
    let mut n = [[0usize; 2]; 2];
    for w in series.outside.windows(2) {
        n[w[0] as usize][w[1] as usize] += 1;
    }
    let ratio = |a: usize, b: usize| if a + b == 0 { 0.0 } else { b as f64 / (a + b) as f64 };
    let pi01 = ratio(n[0][0], n[0][1]);
    let pi11 = ratio(n[1][0], n[1][1]);
    let pi = ratio(n[0][0] + n[1][0], n[0][1] + n[1][1]);
    let restricted = bernoulli_loglik(n[0][0] + n[1][0], n[0][1] + n[1][1], pi);
    let free = bernoulli_loglik(n[0][0], n[0][1], pi01) + bernoulli_loglik(n[1][0], n[1][1], pi11);
    let independence = (-2.0 * (restricted - free)).max(0.0);
    Ok(ConditionalCoverage { unconditional: uc, independence, test: LrTest::against(uc + independence, CC_THRESHOLD) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse_gwh: f64,
    pub mape_pct: f64,
    pub pinball_gwh: Vec<f64>,
    pub apl_gwh: f64,
    pub coverage: Vec<CoveragePoint>,
    pub violations_95: ViolationSeries,
    pub uc: LrTest,
    pub cc: ConditionalCoverage,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Full evaluation of a density forecast against realized consumption (GWh).
pub fn evaluate(forecast: &DensityForecast, realized: &[f64]) -> Result<EvalReport> {
    check_lengths(forecast.len(), realized.len())?;
    let points = forecast.points_gwh()?;
    let curve = pinball(&quantile_table(forecast, &percentile_levels())?, realized)?;
    let mut alphas = default_alphas();
    let backtest = backtest_ci(forecast, realized, &alphas)?;
    let k95 = alphas.iter().position(|a| (*a - 0.95).abs() < 1e-12).unwrap_or_else(|| {
        alphas.push(0.95);
        alphas.len() - 1
    });
    let violations_95 = backtest.violations[k95].clone();
    Ok(EvalReport {
        rmse_gwh: rmse(&points, realized)?,
        mape_pct: mape(&points, realized)?,
        uc: uc_test(&violations_95, 0.05)?,
        cc: cc_test(&violations_95, 0.05)?,
        pinball_gwh: curve.losses,
        apl_gwh: curve.apl,
        coverage: backtest.coverage,
        violations_95,
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// `percentile,loss`.
pub fn write_pinball_csv<W: Write>(out: W, losses: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["percentile", "loss"]).map_err(csv_err)?;
    for (k, l) in losses.iter().enumerate() {
        w.write_record([(k + 1).to_string(), l.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `alpha,empirical`.
pub fn write_coverage_csv<W: Write>(out: W, coverage: &[CoveragePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in coverage {
        w.serialize(c).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `date,outside` with 0/1 indicators.
pub fn write_violations_csv<W: Write>(out: W, series: &ViolationSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "outside"]).map_err(csv_err)?;
    for (d, o) in series.dates.iter().zip(&series.outside) {
        w.write_record([d.to_string(), u8::from(*o).to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
