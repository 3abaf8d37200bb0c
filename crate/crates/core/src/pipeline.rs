//! Segmentation, grid search on the validation year, test-year evaluation
//! and robustness re-runs.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};

use chrono::{Datelike, NaiveDate};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{fit_arx, forecast_arx, glm_density};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::features::{calendar_features, input_row, CalendarFeatures, MinMaxScaler, WeatherFeatures, INPUT_COLUMNS};
use crate::forecast::{
    bootstrap_temperatures, forecast_expost, BootstrapConfig, CalendarDay, DensityForecast, ExogenousDay,
    TemperatureHistory, TrainedModel,
};
use crate::glm::{build_design_matrix, fit_ols, GlmFit};
use crate::ingest::{is_leap_day, treat_outliers, DailyRecord, DateRange, HolidayCalendar, LogSeries, OutlierReport, DAYS_PER_YEAR};
use crate::nax::{forward, train, Activation, BatchSize, NaxConfig, Trained, OUTPUTS};

/// Named random sub-streams of the run seed.
pub const TRAINING_STREAM: u64 = 1;
pub const BOOTSTRAP_STREAM: u64 = 2;
pub const GRID_STREAM: u64 = 3;
const REPLICATE_STREAM: u64 = 4;

/// Seed number `index` of sub-stream `stream`, independent of evaluation order.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(2 * index as u128);
    rng.next_u64()
}

/// Runs `f` on a pool of `workers` threads, or the global pool when `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Daily data with leap days removed and calendar features attached. Day
/// index `t` is the position in `days`.
#[derive(Debug)]
pub struct ModelData {
    days: Vec<DailyRecord>,
    calendar: Vec<CalendarFeatures>,
    holidays: HolidayCalendar,
    consumption_reads: AtomicUsize,
}

impl ModelData {
    /// Fails if any non-leap day is missing between the first and last date.
    pub fn new(days: Vec<DailyRecord>, holidays: HolidayCalendar) -> Result<Self> {
        let days: Vec<DailyRecord> = days.into_iter().filter(|d| !is_leap_day(d.date)).collect();
        if days.is_empty() {
            return Err(Error::EmptyInput("daily data"));
        }
        for pair in days.windows(2) {
            let mut next = pair[0].date.succ_opt().expect("date in range");
            if is_leap_day(next) {
                next = next.succ_opt().expect("date in range");
            }
            if pair[1].date != next {
                return Err(Error::MissingData(format!(
                    "no data for {next} (gap between {} and {})",
                    pair[0].date, pair[1].date
                )));
            }
        }
        let calendar = days.iter().enumerate().map(|(t, d)| calendar_features(d.date, t, &holidays)).collect();
        Ok(Self { days, calendar, holidays, consumption_reads: AtomicUsize::new(0) })
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.days[0].date
    }

    pub fn last_date(&self) -> NaiveDate {
        self.days[self.days.len() - 1].date
    }

    pub fn holidays(&self) -> &HolidayCalendar {
        &self.holidays
    }

    /// Index range `[start, end)` covering `range`, which must lie fully
    /// inside the data.
    pub fn index_range(&self, range: DateRange) -> Result<(usize, usize)> {
        if range.start < self.first_date() || range.end > self.last_date() {
            return Err(Error::MissingData(format!(
                "{}..{} is not covered by data spanning {}..{}",
                range.start,
                range.end,
                self.first_date(),
                self.last_date()
            )));
        }
        let start = self.days.partition_point(|d| d.date < range.start);
        let end = self.days.partition_point(|d| d.date <= range.end);
        if start == end {
            return Err(Error::MissingData(format!("no data in {}..{}", range.start, range.end)));
        }
        Ok((start, end))
    }

    /// Weather and calendar inputs of days `[start, end)`.
    pub fn exogenous(&self, start: usize, end: usize) -> Vec<ExogenousDay> {
        (start..end)
            .map(|t| ExogenousDay {
                date: self.days[t].date,
                t,
                weather: self.weather(t),
                calendar: self.calendar[t],
            })
            .collect()
    }

    pub fn calendar_days(&self, start: usize, end: usize) -> Vec<CalendarDay> {
        (start..end).map(|t| CalendarDay { date: self.days[t].date, t, calendar: self.calendar[t] }).collect()
    }

    fn weather(&self, t: usize) -> WeatherFeatures {
        WeatherFeatures { dry_bulb: self.days[t].dry_bulb, wet_bulb: self.days[t].wet_bulb }
    }

    /// Consumption (GWh) of days `[start, end)`. Every read is recorded so
    /// tests can check that nothing past a forecast origin is touched.
    pub fn consumption(&self, start: usize, end: usize) -> Vec<f64> {
        self.consumption_reads.fetch_max(end, Ordering::Relaxed);
        self.days[start..end].iter().map(|d| d.consumption).collect()
    }

    /// One past the highest day index whose consumption has been read.
    pub fn consumption_read_limit(&self) -> usize {
        self.consumption_reads.load(Ordering::Relaxed)
    }

    pub fn reset_read_limit(&self) {
        self.consumption_reads.store(0, Ordering::Relaxed);
    }

    /// Temperatures of all whole years strictly before day `end`.
    pub fn temperature_history(&self, end: usize) -> (TemperatureHistory, Vec<i32>) {
        let days = &self.days[..end];
        let history = TemperatureHistory::from_days(days);
        let mut years: Vec<i32> = days.iter().map(|d| d.date.year()).collect();
        years.dedup();
        years.retain(|y| days.iter().filter(|d| d.date.year() == *y).count() == DAYS_PER_YEAR);
        (history, years)
    }
}

/// Everything produced while fitting one training window.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub model: TrainedModel,
    pub glm: GlmFit,
    pub outliers: OutlierReport,
    /// Log consumption after outlier treatment.
    pub log_consumption: Vec<f64>,
    pub training: Trained,
}

/// Training window of `years` whole years ending just before day `origin`.
pub fn training_window(origin: usize, years: usize) -> Result<(usize, usize)> {
    let len = years * DAYS_PER_YEAR;
    if origin < len {
        return Err(Error::InsufficientHistory(format!(
            "{years}-year window needs {len} days before the forecast origin, only {origin} available"
        )));
    }
    Ok((origin - len, origin))
}

/// GLM fit, outlier treatment, GLM refit, scaling and network training on
/// days `[start, end)`.
pub fn fit_model(data: &ModelData, config: &NaxConfig, start: usize, end: usize) -> Result<FittedModel> {
    let consumption = data.consumption(start, end);
    let dates: Vec<NaiveDate> = data.days[start..end].iter().map(|d| d.date).collect();
    let mut values = Vec::with_capacity(consumption.len());
    for (date, c) in dates.iter().zip(&consumption) {
        if !(*c > 0.0) {
            return Err(Error::NonPositiveConsumption { date: *date, value: *c });
        }
        values.push(c.ln());
    }
    let design = build_design_matrix(&data.calendar[start..end]);
    let raw_fit = fit_ols(&design, &values)?;
    let (treated, outliers) = treat_outliers(&LogSeries { dates, values }, &raw_fit.residuals)?;
    let glm = fit_ols(&design, &treated.values)?;

    let rows: Vec<Vec<f64>> = (start..end).map(|t| input_row(data.weather(t), &data.calendar[t])).collect();
    let input_scaler = MinMaxScaler::fit(&INPUT_COLUMNS, &rows)?;
    let target_rows: Vec<Vec<f64>> = glm.residuals.iter().map(|r| vec![*r]).collect();
    let target_scaler = MinMaxScaler::fit(&["residual"], &target_rows)?;
    let inputs = input_scaler.transform(&rows)?;
    let targets: Vec<f64> = glm.residuals.iter().map(|r| target_scaler.scale_value(0, *r)).collect();

    let training = train(config, &inputs, &targets)?;
    let pass = forward(&training.params, config.activation, &inputs, [0.0; OUTPUTS])?;
    let feedback = pass.last_feedback().ok_or(Error::EmptyInput("training window"))?;
    let model = TrainedModel {
        config: config.clone(),
        glm: glm.coefficients,
        glm_residual_std: glm.residual_std(),
        params: training.params.clone(),
        input_scaler,
        target_scaler,
        feedback,
        training_start: data.days[start].date,
        training_end: data.days[end - 1].date,
        next_t: end,
    };
    Ok(FittedModel { model, glm, outliers, log_consumption: treated.values, training })
}

/// Candidate values for each hyper-parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub neurons: Vec<usize>,
    pub activations: Vec<Activation>,
    pub learning_rates: Vec<f64>,
    pub batches: Vec<BatchSize>,
    pub l2: Vec<f64>,
    pub window_years: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            neurons: vec![3, 4, 5, 6, 8, 10],
            activations: vec![Activation::Softmax, Activation::Sigmoid],
            learning_rates: vec![0.1, 0.01, 0.001, 0.0007, 0.0005, 0.0001],
            batches: vec![BatchSize::Days(50), BatchSize::Days(100), BatchSize::Days(350), BatchSize::Full],
            l2: vec![0.01, 0.001, 0.0001, 0.0],
            window_years: vec![1, 2, 3, 4],
        }
    }
}

impl GridSpec {
    pub fn single(config: &NaxConfig) -> Self {
        Self {
            neurons: vec![config.neurons],
            activations: vec![config.activation],
            learning_rates: vec![config.learning_rate],
            batches: vec![config.batch],
            l2: vec![config.l2],
            window_years: vec![config.window_years],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("neurons", self.neurons.is_empty()),
            ("activations", self.activations.is_empty()),
            ("learning_rates", self.learning_rates.is_empty()),
            ("batches", self.batches.is_empty()),
            ("l2", self.l2.is_empty()),
            ("window_years", self.window_years.is_empty()),
        ];
        match empty.iter().find(|(_, e)| *e) {
            Some((name, _)) => Err(Error::Config(format!("grid list `{name}` is empty"))),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.neurons.len()
            * self.activations.len()
            * self.learning_rates.len()
            * self.batches.len()
            * self.l2.len()
            * self.window_years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All combinations in a fixed order, with training controls from `base`.
    pub fn combinations(&self, base: &NaxConfig) -> Vec<NaxConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &neurons in &self.neurons {
            for &activation in &self.activations {
                for &learning_rate in &self.learning_rates {
                    for &batch in &self.batches {
                        for &l2 in &self.l2 {
                            for &window_years in &self.window_years {
                                out.push(NaxConfig {
                                    neurons,
                                    activation,
                                    learning_rate,
                                    batch,
                                    l2,
                                    window_years,
                                    ..base.clone()
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub index: usize,
    pub neurons: usize,
    pub activation: Activation,
    pub learning_rate: f64,
    pub batch: BatchSize,
    pub l2: f64,
    pub window_years: usize,
    pub seed: u64,
    /// Mean validation RMSE over replicates; `None` when skipped.
    pub rmse_gwh: Option<f64>,
    pub mape_pct: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub rows: Vec<LeaderboardRow>,
    pub selected_index: usize,
    pub selected: NaxConfig,
}

impl GridResult {
    /// Best RMSE for each training window length.
    pub fn window_slice(&self) -> Vec<&LeaderboardRow> {
        let mut windows: Vec<usize> = self.rows.iter().map(|r| r.window_years).collect();
        windows.sort_unstable();
        windows.dedup();
        windows.iter().filter_map(|w| best_row(self.rows.iter().filter(|r| r.window_years == *w))).collect()
    }

    pub fn skipped(&self) -> impl Iterator<Item = &LeaderboardRow> {
        self.rows.iter().filter(|r| r.rmse_gwh.is_none())
    }
}

fn selection_order(a: &LeaderboardRow, b: &LeaderboardRow) -> std::cmp::Ordering {
    let ra = a.rmse_gwh.unwrap_or(f64::INFINITY);
    let rb = b.rmse_gwh.unwrap_or(f64::INFINITY);
    ra.total_cmp(&rb)
        .then(a.neurons.cmp(&b.neurons))
        .then(b.l2.total_cmp(&a.l2))
        .then(a.window_years.cmp(&b.window_years))
        .then(a.index.cmp(&b.index))
}

fn best_row<'a>(rows: impl Iterator<Item = &'a LeaderboardRow>) -> Option<&'a LeaderboardRow> {
    rows.filter(|r| r.rmse_gwh.is_some()).min_by(|a, b| selection_order(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub seed: u64,
    /// Training seeds averaged per combination.
    pub replicates: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { seed: 0, replicates: 1 }
    }
}

fn skippable(e: &Error) -> bool {
    matches!(e, Error::InsufficientHistory(_) | Error::Divergence { .. } | Error::NonFinite { .. })
}

fn score(data: &ModelData, config: &NaxConfig, origin: usize, end: usize) -> Result<(f64, f64)> {
    let (ws, we) = training_window(origin, config.window_years)?;
    let fitted = fit_model(data, config, ws, we)?;
    let forecast = forecast_expost(&fitted.model, &data.exogenous(origin, end))?;
    let points = forecast.points_gwh()?;
    let realized = data.consumption(origin, end);
    Ok((crate::eval::rmse(&points, &realized)?, crate::eval::mape(&points, &realized)?))
}

/// Trains every combination on the window before `validation` and ranks
/// them by ex-post RMSE over it.
pub fn run_validation(
    data: &ModelData,
    validation: DateRange,
    grid: &GridSpec,
    base: &NaxConfig,
    options: ValidationOptions,
) -> Result<GridResult> {
    grid.validate()?;
    let (origin, end) = data.index_range(validation)?;
    let combos = grid.combinations(base);
    let rows: Vec<LeaderboardRow> = combos
        .par_iter()
        .enumerate()
        .map(|(index, config)| {
            let seed = derive_seed(options.seed, GRID_STREAM, index as u64);
            let mut row = LeaderboardRow {
                index,
                neurons: config.neurons,
                activation: config.activation,
                learning_rate: config.learning_rate,
                batch: config.batch,
                l2: config.l2,
                window_years: config.window_years,
                seed,
                rmse_gwh: None,
                mape_pct: None,
                note: String::new(),
            };
            let mut rmse = 0.0;
            let mut mape = 0.0;
            for r in 0..options.replicates.max(1) {
                let seed = if r == 0 { seed } else { derive_seed(seed, REPLICATE_STREAM, r as u64) };
                match score(data, &NaxConfig { seed, ..config.clone() }, origin, end) {
                    Ok((a, b)) => {
                        rmse += a;
                        mape += b;
                    }
                    Err(e) if skippable(&e) => {
                        row.note = format!("skipped: {e}");
                        return Ok(row);
                    }
                    Err(e) => return Err(e),
                }
            }
            let n = options.replicates.max(1) as f64;
            row.rmse_gwh = Some(rmse / n);
            row.mape_pct = Some(mape / n);
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let best = best_row(rows.iter())
        .ok_or_else(|| Error::InsufficientHistory("every grid combination was skipped".into()))?;
    let selected_index = best.index;
    let selected = NaxConfig { seed: best.seed, ..combos[selected_index].clone() };
    Ok(GridResult { rows, selected_index, selected })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// `index,neurons,activation,learning_rate,batch,l2,window_years,seed,rmse_gwh,mape_pct,note`.
pub fn write_leaderboard_csv<W: Write>(out: W, rows: &[LeaderboardRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "index", "neurons", "activation", "learning_rate", "batch", "l2", "window_years", "seed", "rmse_gwh",
        "mape_pct", "note",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.index.to_string(),
            r.neurons.to_string(),
            r.activation.to_string(),
            r.learning_rate.to_string(),
            r.batch.to_string(),
            r.l2.to_string(),
            r.window_years.to_string(),
            r.seed.to_string(),
            fmt_opt(r.rmse_gwh),
            fmt_opt(r.mape_pct),
            r.note.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Forecast and evaluation of one model on one horizon.
#[derive(Debug, Clone)]
pub struct ModelOutcome {
    pub name: String,
    pub forecast: DensityForecast,
    pub report: EvalReport,
}

#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub fitted: FittedModel,
    pub realized: Vec<f64>,
    /// NAX first, then GLM and ARX.
    pub models: Vec<ModelOutcome>,
}

impl TestOutcome {
    pub fn nax(&self) -> &ModelOutcome {
        &self.models[0]
    }
}

/// Retrains on the window before `horizon` and evaluates NAX with the GLM
/// and ARX benchmarks fitted on the same window.
pub fn run_test(data: &ModelData, horizon: DateRange, config: &NaxConfig) -> Result<TestOutcome> {
    let (origin, end) = data.index_range(horizon)?;
    let (ws, we) = training_window(origin, config.window_years)?;
    let fitted = fit_model(data, config, ws, we)?;
    let days = data.exogenous(origin, end);
    let realized = data.consumption(origin, end);

    let nax = forecast_expost(&fitted.model, &days)?;
    let glm = glm_density(&fitted.model.glm, fitted.model.glm_residual_std, &data.calendar_days(origin, end))?;
    let weather: Vec<WeatherFeatures> = (ws..we).map(|t| data.weather(t)).collect();
    let arx_fit = fit_arx(&fitted.log_consumption, &data.calendar[ws..we], &weather)?;
    let last = *fitted.log_consumption.last().expect("non-empty window");
    let arx = forecast_arx(&arx_fit, &days, last);

    let models = [("NAX", nax), ("GLM", glm), ("ARX", arx)]
        .into_iter()
        .map(|(name, forecast)| {
            Ok(ModelOutcome { name: name.to_string(), report: evaluate(&forecast, &realized)?, forecast })
        })
        .collect::<Result<_>>()?;
    Ok(TestOutcome { fitted, realized, models })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub year: i32,
    pub model: String,
    pub mape_pct: f64,
    pub rmse_gwh: f64,
    pub apl_gwh: f64,
}

/// Re-runs [`run_test`] on each year with unchanged hyper-parameters.
pub fn run_robustness(data: &ModelData, years: &[DateRange], config: &NaxConfig) -> Result<Vec<RobustnessRow>> {
    let mut rows = Vec::new();
    for range in years {
        let outcome = run_test(data, *range, config)?;
        for m in &outcome.models {
            rows.push(RobustnessRow {
                year: range.start.year(),
                model: m.name.clone(),
                mape_pct: m.report.mape_pct,
                rmse_gwh: m.report.rmse_gwh,
                apl_gwh: m.report.apl_gwh,
            });
        }
    }
    Ok(rows)
}

/// `year,model,mape_pct,rmse_gwh,apl_gwh`.
pub fn write_robustness_csv<W: Write>(out: W, rows: &[RobustnessRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Ex-ante forecast of `horizon`: temperatures bootstrapped from the whole
/// years before it.
pub fn forecast_exante_from_data(
    data: &ModelData,
    model: &TrainedModel,
    horizon: DateRange,
    paths: usize,
    seed: u64,
) -> Result<DensityForecast> {
    let (origin, end) = data.index_range(horizon)?;
    let (history, years) = data.temperature_history(origin);
    if years.is_empty() {
        return Err(Error::InsufficientHistory("no whole year of temperatures before the horizon".into()));
    }
    let config = BootstrapConfig { paths, ..BootstrapConfig::new(years, seed) };
    let days = data.calendar_days(origin, end);
    let dates: Vec<NaiveDate> = days.iter().map(|d| d.date).collect();
    let paths = bootstrap_temperatures(&history, &dates, &config)?;
    crate::forecast::forecast_exante(model, &paths, &days)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::synthetic::{generate_synthetic, LevelShift, SyntheticConfig};

    fn quick(config: NaxConfig) -> NaxConfig {
        NaxConfig { max_epochs: 60, patience: 20, learning_rate: 0.01, ..config }
    }

    fn synthetic(first: i32, last: i32, seed: u64) -> ModelData {
        let s = generate_synthetic(&SyntheticConfig::years(first, last), seed).unwrap();
        ModelData::new(s.days, s.holidays).unwrap()
    }

    #[test]
    fn table_grid_size() {
        assert_eq!(GridSpec::default().len(), 4608);
        assert_eq!(GridSpec::default().combinations(&NaxConfig::default()).len(), 4608);
        let mut g = GridSpec::default();
        g.l2.clear();
        assert!(g.validate().is_err());
    }

    #[test]
    fn derived_seeds_are_order_free() {
        let a: Vec<u64> = (0..5).map(|i| derive_seed(7, GRID_STREAM, i)).collect();
        let b: Vec<u64> = (0..5).rev().map(|i| derive_seed(7, GRID_STREAM, i)).collect();
        assert!(a.iter().eq(b.iter().rev()));
        assert_ne!(derive_seed(7, GRID_STREAM, 0), derive_seed(7, TRAINING_STREAM, 0));
    }

    #[test]
    fn gaps_and_missing_years_are_named() {
        let s = generate_synthetic(&SyntheticConfig::years(2010, 2011), 1).unwrap();
        let mut days = s.days.clone();
        days.remove(100);
        let err = ModelData::new(days, s.holidays.clone()).unwrap_err();
        assert!(err.to_string().contains("no data for 2010-04-11"), "{err}");
        let data = ModelData::new(s.days, s.holidays).unwrap();
        let err = data.index_range(DateRange::year(2012)).unwrap_err();
        assert!(matches!(err, Error::MissingData(_)) && err.to_string().contains("2012-01-01"));
    }

    #[test]
    fn leap_days_are_dropped() {
        let cfg = SyntheticConfig { include_leap_days: true, ..SyntheticConfig::years(2011, 2012) };
        let s = generate_synthetic(&cfg, 1).unwrap();
        let data = ModelData::new(s.days, s.holidays).unwrap();
        assert_eq!(data.len(), 730);
        assert_eq!(data.index_range(DateRange::year(2012)).unwrap(), (365, 730));
    }

    #[test]
    fn single_combination_is_selected_and_skips_are_reported() {
        let data = synthetic(2010, 2012, 3);
        let base = quick(NaxConfig { window_years: 1, ..NaxConfig::default() });
        let r = run_validation(&data, DateRange::year(2012), &GridSpec::single(&base), &base, ValidationOptions::default())
            .unwrap();
        assert_eq!(r.selected_index, 0);
        assert_eq!(r.rows.len(), 1);

        let grid = GridSpec { window_years: vec![1, 5], ..GridSpec::single(&base) };
        let r = run_validation(&data, DateRange::year(2012), &grid, &base, ValidationOptions::default()).unwrap();
        assert_eq!(r.selected.window_years, 1);
        assert_eq!(r.skipped().count(), 1);
        let mut buf = Vec::new();
        write_leaderboard_csv(&mut buf, &r.rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("skipped"));
    }

    #[test]
    fn tie_break_prefers_simpler_models() {
        let row = |index, neurons, l2, window_years, rmse| LeaderboardRow {
            index,
            neurons,
            activation: Activation::Softmax,
            learning_rate: 0.01,
            batch: BatchSize::Full,
            l2,
            window_years,
            seed: 0,
            rmse_gwh: rmse,
            mape_pct: rmse,
            note: String::new(),
        };
        let rows = vec![
            row(0, 5, 0.01, 1, Some(8.0)),
            row(1, 3, 0.0, 1, Some(8.0)),
            row(2, 3, 0.01, 2, Some(8.0)),
            row(3, 3, 0.01, 1, Some(8.0)),
            row(4, 3, 0.01, 1, Some(8.0)),
            row(5, 3, 0.01, 1, None),
        ];
        assert_eq!(best_row(rows.iter()).unwrap().index, 3);
        assert_eq!(best_row(rows.iter().rev()).unwrap().index, 3);
    }

    #[test]
    fn grid_is_deterministic_across_worker_counts() {
        let data = synthetic(2010, 2012, 4);
        let base = quick(NaxConfig { max_epochs: 15, ..NaxConfig::default() });
        let grid = GridSpec { neurons: vec![2, 3], window_years: vec![1, 2], ..GridSpec::single(&base) };
        let opts = ValidationOptions { seed: 11, replicates: 2 };
        let a = with_workers(Some(1), || run_validation(&data, DateRange::year(2012), &grid, &base, opts)).unwrap().unwrap();
        let b = with_workers(Some(3), || run_validation(&data, DateRange::year(2012), &grid, &base, opts)).unwrap().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.window_slice().len(), 2);
    }

    #[test]
    fn forecasts_never_read_future_consumption() {
        let s = generate_synthetic(&SyntheticConfig::years(2010, 2012), 5).unwrap();
        let config = quick(NaxConfig { window_years: 2, ..NaxConfig::default() });
        let data = ModelData::new(s.days.clone(), s.holidays.clone()).unwrap();
        let a = run_test(&data, DateRange::year(2012), &config).unwrap();

        let mut corrupted = s.days.clone();
        for d in corrupted.iter_mut().filter(|d| d.date.year() == 2012) {
            d.consumption *= 3.0;
        }
        let data_c = ModelData::new(corrupted, s.holidays).unwrap();
        let (origin, _) = data_c.index_range(DateRange::year(2012)).unwrap();
        let fitted = fit_model(&data_c, &config, origin - 730, origin).unwrap();
        let nax = forecast_expost(&fitted.model, &data_c.exogenous(origin, data_c.len())).unwrap();
        let ex_ante = forecast_exante_from_data(&data_c, &fitted.model, DateRange::year(2012), 5, 1).unwrap();
        assert!(data_c.consumption_read_limit() <= origin);
        assert_eq!(nax, a.nax().forecast);
        assert_eq!(fitted.model, a.fitted.model);
        assert_eq!(ex_ante.len(), 365);
    }

    #[test]
    fn shorter_window_wins_after_regime_change() {
        let cfg = SyntheticConfig {
            level_shift: Some(LevelShift { from: NaiveDate::from_ymd_opt(2011, 1, 1).unwrap(), delta: 0.15 }),
            ..SyntheticConfig::years(2009, 2012)
        };
        let s = generate_synthetic(&cfg, 6).unwrap();
        let data = ModelData::new(s.days, s.holidays).unwrap();
        let base = quick(NaxConfig::default());
        let grid = GridSpec { window_years: vec![1, 3], ..GridSpec::single(&base) };
        let r = run_validation(&data, DateRange::year(2012), &grid, &base, ValidationOptions { seed: 2, replicates: 1 })
            .unwrap();
        assert_eq!(r.selected.window_years, 1, "{:?}", r.rows);
    }

    #[test]
    fn frozen_network_is_worse_than_benchmarks() {
        let data = synthetic(2010, 2012, 7);
        let config = NaxConfig { learning_rate: 0.0, max_epochs: 3, window_years: 2, ..NaxConfig::default() };
        let out = run_test(&data, DateRange::year(2012), &config).unwrap();
        let nax = out.models[0].report.mape_pct;
        assert!(nax > out.models[1].report.mape_pct && nax > out.models[2].report.mape_pct, "{nax}");
    }

    #[test]
    fn robustness_table() {
        let data = synthetic(2010, 2013, 8);
        let config = quick(NaxConfig { window_years: 1, ..NaxConfig::default() });
        assert!(run_robustness(&data, &[], &config).unwrap().is_empty());
        let rows = run_robustness(&data, &[DateRange::year(2012), DateRange::year(2013)], &config).unwrap();
        assert_eq!(rows.len(), 6);
        let nax: Vec<f64> = rows.iter().filter(|r| r.model == "NAX").map(|r| r.mape_pct).collect();
        assert!(nax[1] < 2.0 * nax[0] && nax[0] < 2.0 * nax[1], "{nax:?}");
        let mut buf = Vec::new();
        write_robustness_csv(&mut buf, &rows).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("year,model,mape_pct,rmse_gwh,apl_gwh\n2012,NAX,"));
        assert!(run_robustness(&data, &[DateRange::year(2014)], &config).is_err());
    }
}
