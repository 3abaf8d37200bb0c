//! The `nax` command line: reproducible runs driven by a key=value config.
//!
//! ```text
//! # run.cfg
//! daily = data/daily.csv
//! first_year = 2007
//! validation_year = 2011
//! test_year = 2012
//! robustness_years = 2013,2014
//! seed = 42
//! grid.neurons = 3,5
//! ```
//!
//! Every run writes its files to a temporary directory next to `--out` and
//! moves them into place only on success, together with a `manifest.json`
//! holding the resolved configuration, its SHA-256 and the seed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use chrono::{NaiveDate, Utc};
use clap::{Args, Parser, Subcommand};
use indexmap::IndexMap;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{evaluate, write_coverage_csv, write_pinball_csv, write_violations_csv, EvalReport};
use crate::forecast::{
    read_mixture_csv, slice_dates, write_density_slices, write_forecast_csv, write_mixture_csv, DensityForecast,
    TrainedModel,
};
use crate::ingest::{
    aggregate_daily, read_daily_csv, read_holidays, read_hourly_csv, write_daily_csv, DailyRecord, DateRange,
    HolidayCalendar, Segmentation,
};
use crate::nax::{Activation, BatchSize, NaxConfig};
use crate::pipeline::{
    derive_seed, fit_model, forecast_exante_from_data, run_robustness, run_test, run_validation, training_window,
    with_workers, write_leaderboard_csv, write_robustness_csv, GridSpec, ModelData, ValidationOptions,
    BOOTSTRAP_STREAM, TRAINING_STREAM,
};
use crate::stats::summarize;

#[derive(Debug, Parser)]
#[command(name = "nax", version, about = "Density forecasts of daily power consumption")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// key=value configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Extra `key=value` settings, applied after the config file
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Aggregate hourly data (or pass daily data through) and print statistics
    Ingest {
        /// Hourly or daily CSV; overrides `hourly`/`daily` in the config
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        hourly: bool,
    },
    /// Grid search on the validation year
    Validate,
    /// Retrain before the test year and evaluate NAX, GLM and ARX
    Test,
    /// Repeat the test protocol on each robustness year
    Robustness,
    /// Density forecast of the test year
    Forecast(ForecastArgs),
    /// Score a density file against realized consumption
    Evaluate {
        /// File in the `date,path_id,mu_log,sigma_log` format
        #[arg(long)]
        density: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long, conflicts_with = "ex_ante")]
    pub ex_post: bool,
    #[arg(long)]
    pub ex_ante: bool,
    #[arg(long)]
    pub paths: Option<usize>,
    /// Trained model JSON; trains from the config when absent
    #[arg(long)]
    pub model: Option<PathBuf>,
}

/// Resolved settings: file values, then `--set`, then dedicated flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: IndexMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut config = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_string(),
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            config.set(key.trim(), value.trim());
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.shift_remove(key);
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Config(format!("missing setting `{key}`")))
    }

    fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse().map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`"))))
            .transpose()
    }

    fn parse_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse().map_err(|_| Error::Config(format!("bad entry `{s}` in `{key}`"))))
                    .collect()
            })
            .transpose()
    }

    /// Canonical text, one `key = value` per line in sorted key order.
    pub fn canonical(&self) -> String {
        let mut keys: Vec<&String> = self.values.keys().collect();
        keys.sort();
        keys.iter().map(|k| format!("{k} = {}\n", self.values[*k])).collect()
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn seed(&self) -> Result<u64> {
        self.parse_value("seed")?.ok_or_else(|| Error::Config("a seed is required (`seed = N` or --seed)".into()))
    }

    pub fn workers(&self) -> Result<Option<usize>> {
        self.parse_value("workers")
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.get("out").unwrap_or("out"))
    }

    pub fn model_config(&self) -> Result<NaxConfig> {
        let d = NaxConfig::default();
        let config = NaxConfig {
            neurons: self.parse_value("neurons")?.unwrap_or(d.neurons),
            activation: self.parse_value::<Activation>("activation")?.unwrap_or(d.activation),
            learning_rate: self.parse_value("learning_rate")?.unwrap_or(d.learning_rate),
            batch: self.parse_value::<BatchSize>("batch")?.unwrap_or(d.batch),
            l2: self.parse_value("l2")?.unwrap_or(d.l2),
            window_years: self.parse_value("window_years")?.unwrap_or(d.window_years),
            max_epochs: self.parse_value("max_epochs")?.unwrap_or(d.max_epochs),
            patience: self.parse_value("patience")?.unwrap_or(d.patience),
            holdout_fraction: self.parse_value("holdout_fraction")?.unwrap_or(d.holdout_fraction),
            seed: d.seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let d = GridSpec::default();
        let grid = GridSpec {
            neurons: self.parse_list("grid.neurons")?.unwrap_or(d.neurons),
            activations: self.parse_list("grid.activation")?.unwrap_or(d.activations),
            learning_rates: self.parse_list("grid.learning_rate")?.unwrap_or(d.learning_rates),
            batches: self.parse_list("grid.batch")?.unwrap_or(d.batches),
            l2: self.parse_list("grid.l2")?.unwrap_or(d.l2),
            window_years: self.parse_list("grid.window_years")?.unwrap_or(d.window_years),
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn segmentation(&self) -> Result<Segmentation> {
        let first: i32 = self.parse_value("first_year")?.ok_or_else(|| Error::Config("missing `first_year`".into()))?;
        let validation: i32 =
            self.parse_value("validation_year")?.ok_or_else(|| Error::Config("missing `validation_year`".into()))?;
        let test: i32 = self.parse_value("test_year")?.unwrap_or(validation + 1);
        let robust: Vec<i32> = self.parse_list("robustness_years")?.unwrap_or_default();
        Segmentation::yearly(first, validation, test, &robust)
    }

    pub fn holidays(&self) -> Result<HolidayCalendar> {
        match self.get("holidays") {
            Some(path) => read_holidays(&existing(path)?),
            None => Ok(HolidayCalendar::us_fixed_federal(1950..=2100)),
        }
    }

    /// Daily records from `daily` or, failing that, aggregated `hourly`.
    pub fn load_days(&self) -> Result<Vec<DailyRecord>> {
        let holidays = self.holidays()?;
        if let Some(path) = self.get("daily") {
            let path = existing(path)?;
            return read_daily_csv(File::open(&path)?, &path.display().to_string(), &holidays);
        }
        let path = existing(self.require("hourly").map_err(|_| Error::Config("set `daily` or `hourly`".into()))?)?;
        let hourly = read_hourly_csv(File::open(&path)?, &path.display().to_string())?;
        let agg = aggregate_daily(&hourly, &holidays)?;
        for day in &agg.incomplete {
            eprintln!("warning: {} has only {} hourly rows", day.date, day.hours);
        }
        Ok(agg.days)
    }

    pub fn load_data(&self) -> Result<ModelData> {
        ModelData::new(self.load_days()?, self.holidays()?)
    }
}

fn existing(path: &str) -> Result<PathBuf> {
    let p = PathBuf::from(path);
    if !p.exists() {
        return Err(Error::Config(format!("file `{path}` does not exist")));
    }
    Ok(p)
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'static str,
    seed: u64,
    config_sha256: String,
    config: &'a IndexMap<String, String>,
    started: String,
    finished: String,
    files: Vec<String>,
}

/// Output files staged in a temporary directory.
struct Staging {
    dir: PathBuf,
    target: PathBuf,
    files: Vec<String>,
}

impl Staging {
    fn new(target: PathBuf) -> Result<Self> {
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent)?;
        let name = target.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
        let dir = parent.join(format!(".{name}.tmp-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, target, files: Vec::new() })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        f(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn promote(self) -> Result<PathBuf> {
        if !self.target.exists() {
            fs::rename(&self.dir, &self.target)?;
        } else {
            for name in &self.files {
                fs::rename(self.dir.join(name), self.target.join(name))?;
            }
            fs::remove_dir_all(&self.dir)?;
        }
        Ok(self.target)
    }

    fn abandon(&self) {
        let _ = fs::remove_dir_all(&self.dir);
    }
}

fn write_json<T: Serialize>(w: &mut impl Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

fn write_report(stage: &mut Staging, prefix: &str, report: &EvalReport) -> Result<()> {
    stage.write(&format!("{prefix}report.json"), |w| write_json(w, report))?;
    stage.write(&format!("{prefix}pinball.csv"), |w| write_pinball_csv(w, &report.pinball_gwh))?;
    stage.write(&format!("{prefix}coverage.csv"), |w| write_coverage_csv(w, &report.coverage))?;
    stage.write(&format!("{prefix}violations.csv"), |w| write_violations_csv(w, &report.violations_95))
}

fn training_seed(seed: u64, year: i32) -> u64 {
    derive_seed(seed, TRAINING_STREAM, year as u64)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the output directory.
pub fn run_from<I, S>(args: I) -> Result<PathBuf>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    run(cli)
}

pub fn run(cli: Cli) -> Result<PathBuf> {
    let mut config = match &cli.global.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read config `{}`: {e}", path.display())))?;
            RunConfig::parse(&text, &path.display().to_string())?
        }
        None => RunConfig::default(),
    };
    for kv in &cli.global.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        config.set(k.trim(), v.trim());
    }
    if let Some(seed) = cli.global.seed {
        config.set("seed", &seed.to_string());
    }
    if let Some(out) = &cli.global.out {
        config.set("out", &out.display().to_string());
    }
    if let Some(w) = cli.global.workers {
        config.set("workers", &w.to_string());
    }
    let command_name = match &cli.command {
        Command::Ingest { .. } => "ingest",
        Command::Validate => "validate",
        Command::Test => "test",
        Command::Robustness => "robustness",
        Command::Forecast(_) => "forecast",
        Command::Evaluate { .. } => "evaluate",
    };
    if let Command::Ingest { input: Some(path), hourly } = &cli.command {
        config.values.shift_remove("daily");
        config.values.shift_remove("hourly");
        config.set(if *hourly { "hourly" } else { "daily" }, &path.display().to_string());
    }
    if let Command::Forecast(args) = &cli.command {
        if let Some(p) = args.paths {
            config.set("bootstrap.paths", &p.to_string());
        }
        if let Some(m) = &args.model {
            config.set("model", &m.display().to_string());
        }
        config.set("forecast.mode", if args.ex_ante { "ex-ante" } else { "ex-post" });
    }
    if let Command::Evaluate { density } = &cli.command {
        config.set("density", &density.display().to_string());
    }

    let seed = config.seed()?;
    let started = Utc::now().to_rfc3339();
    let mut stage = Staging::new(config.out_dir())?;
    let result = with_workers(config.workers()?, || execute(command_name, &config, seed, &mut stage)).and_then(|r| r);
    if let Err(e) = result {
        stage.abandon();
        return Err(e);
    }
    let manifest = Manifest {
        command: command_name,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config_sha256: config.sha256(),
        config: &config.values,
        started,
        finished: Utc::now().to_rfc3339(),
        files: stage.files.clone(),
    };
    stage.write("manifest.json", |w| write_json(w, &manifest))?;
    stage.promote()
}

fn execute(command: &str, config: &RunConfig, seed: u64, stage: &mut Staging) -> Result<()> {
    match command {
        "ingest" => cmd_ingest(config, stage),
        "validate" => cmd_validate(config, seed, stage),
        "test" => cmd_test(config, seed, stage),
        "robustness" => cmd_robustness(config, seed, stage),
        "forecast" => cmd_forecast(config, seed, stage),
        _ => cmd_evaluate(config, stage),
    }
}

#[derive(Debug, Serialize)]
struct ColumnStats {
    column: &'static str,
    #[serde(flatten)]
    summary: crate::stats::Summary,
}

fn cmd_ingest(config: &RunConfig, stage: &mut Staging) -> Result<()> {
    let days = config.load_days()?;
    stage.write("daily.csv", |w| write_daily_csv(w, &days))?;
    let columns: [(&'static str, Vec<f64>); 3] = [
        ("consumption_gwh", days.iter().map(|d| d.consumption).collect()),
        ("dry_bulb_f", days.iter().map(|d| d.dry_bulb).collect()),
        ("wet_bulb_f", days.iter().map(|d| d.wet_bulb).collect()),
    ];
    let stats: Vec<ColumnStats> = columns
        .iter()
        .map(|(column, v)| {
            summarize(v).map(|summary| ColumnStats { column, summary }).ok_or(Error::EmptyInput("daily data"))
        })
        .collect::<Result<_>>()?;
    for s in &stats {
        println!(
            "{:<16} min {:>9.2}  max {:>9.2}  mean {:>9.2}  median {:>9.2}  std {:>8.2}",
            s.column, s.summary.min, s.summary.max, s.summary.mean, s.summary.median, s.summary.std
        );
    }
    stage.write("stats.json", |w| write_json(w, &stats))
}

fn cmd_validate(config: &RunConfig, seed: u64, stage: &mut Staging) -> Result<()> {
    let data = config.load_data()?;
    let seg = config.segmentation()?;
    let options = ValidationOptions { seed, replicates: config.parse_value("replicates")?.unwrap_or(1) };
    let result = run_validation(&data, seg.validation, &config.grid()?, &config.model_config()?, options)?;
    for row in result.skipped() {
        eprintln!("combination {}: {}", row.index, row.note);
    }
    stage.write("leaderboard.csv", |w| write_leaderboard_csv(w, &result.rows))?;
    let slice: Vec<_> = result.window_slice().into_iter().cloned().collect();
    stage.write("window_slice.csv", |w| write_leaderboard_csv(w, &slice))?;
    stage.write("selected.json", |w| write_json(w, &result.selected))
}

fn test_config(config: &RunConfig, seed: u64, year: i32) -> Result<NaxConfig> {
    Ok(NaxConfig { seed: training_seed(seed, year), ..config.model_config()? })
}

fn cmd_test(config: &RunConfig, seed: u64, stage: &mut Staging) -> Result<()> {
    let data = config.load_data()?;
    let test = config.segmentation()?.test;
    let nax = test_config(config, seed, chrono::Datelike::year(&test.start))?;
    let outcome = run_test(&data, test, &nax)?;
    stage.write("model.json", |w| write_json(w, &outcome.fitted.model))?;
    stage.write("outliers.json", |w| write_json(w, &outcome.fitted.outliers))?;
    for m in &outcome.models {
        let prefix = format!("{}_", m.name.to_lowercase());
        println!("{:<4} MAPE {:>6.3}%  RMSE {:>8.3} GWh  APL {:>7.3} GWh", m.name, m.report.mape_pct, m.report.rmse_gwh, m.report.apl_gwh);
        stage.write(&format!("{prefix}forecast.csv"), |w| write_forecast_csv(w, &m.forecast))?;
        stage.write(&format!("{prefix}density.csv"), |w| write_mixture_csv(w, &m.forecast))?;
        write_report(stage, &prefix, &m.report)?;
    }
    Ok(())
}

fn cmd_robustness(config: &RunConfig, seed: u64, stage: &mut Staging) -> Result<()> {
    let data = config.load_data()?;
    let seg = config.segmentation()?;
    let mut rows = Vec::new();
    for range in &seg.robustness {
        let nax = test_config(config, seed, chrono::Datelike::year(&range.start))?;
        rows.extend(run_robustness(&data, &[*range], &nax)?);
    }
    stage.write("robustness.csv", |w| write_robustness_csv(w, &rows))
}

fn cmd_forecast(config: &RunConfig, seed: u64, stage: &mut Staging) -> Result<()> {
    let data = config.load_data()?;
    let horizon = match config.parse_value::<i32>("forecast_year")? {
        Some(y) => DateRange::year(y),
        None => config.segmentation()?.test,
    };
    let year = chrono::Datelike::year(&horizon.start);
    let (origin, end) = data.index_range(horizon)?;
    let model = match config.get("model") {
        Some(path) => {
            let path = existing(path)?;
            let model = TrainedModel::from_json(&fs::read_to_string(&path)?)?;
            if model.next_t != origin {
                return Err(Error::InvalidInput(format!(
                    "model `{}` was trained up to {} and cannot forecast from {}",
                    path.display(),
                    model.training_end,
                    horizon.start
                )));
            }
            model
        }
        None => {
            let nax = test_config(config, seed, year)?;
            let (ws, we) = training_window(origin, nax.window_years)?;
            let fitted = fit_model(&data, &nax, ws, we)?;
            stage.write("model.json", |w| write_json(w, &fitted.model))?;
            fitted.model
        }
    };
    let forecast: DensityForecast = if config.get("forecast.mode") == Some("ex-ante") {
        let paths = config.parse_value("bootstrap.paths")?.unwrap_or(2000);
        forecast_exante_from_data(&data, &model, horizon, paths, derive_seed(seed, BOOTSTRAP_STREAM, year as u64))?
    } else {
        crate::forecast::forecast_expost(&model, &data.exogenous(origin, end))?
    };
    stage.write("forecast.csv", |w| write_forecast_csv(w, &forecast))?;
    stage.write("density.csv", |w| write_mixture_csv(w, &forecast))?;
    let dates = slice_dates(&forecast);
    stage.write("density_slices.csv", |w| write_density_slices(w, &forecast, &dates, 200))?;
    let report = evaluate(&forecast, &data.consumption(origin, end))?;
    write_report(stage, "", &report)
}

fn cmd_evaluate(config: &RunConfig, stage: &mut Staging) -> Result<()> {
    let path = existing(config.require("density")?)?;
    let forecast = read_mixture_csv(File::open(&path)?, &path.display().to_string())?;
    let data = config.load_data()?;
    let (first, last) = match (forecast.days.first(), forecast.days.last()) {
        (Some(a), Some(b)) => (a.date, b.date),
        _ => return Err(Error::EmptyInput("density file")),
    };
    let (start, end) = data.index_range(DateRange::new(first, last)?)?;
    let dates: Vec<NaiveDate> = data.calendar_days(start, end).iter().map(|d| d.date).collect();
    if dates != forecast.dates() {
        return Err(Error::MissingData(format!("density file does not cover every day of {first}..{last}")));
    }
    let report = evaluate(&forecast, &data.consumption(start, end))?;
    write_report(stage, "", &report)
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing_and_hash() {
        let a = RunConfig::parse("# c\nseed = 4\n\nneurons=5\ngrid.l2 = 0.1, 0\n", "a").unwrap();
        let b = RunConfig::parse("grid.l2 = 0.1, 0\nneurons=5\nseed = 4\n", "b").unwrap();
        assert_eq!(a.sha256(), b.sha256());
        assert_eq!(a.seed().unwrap(), 4);
        assert_eq!(a.model_config().unwrap().neurons, 5);
        assert_eq!(a.grid().unwrap().l2, vec![0.1, 0.0]);
        assert!(RunConfig::parse("seed 4", "c").is_err());
        assert!(RunConfig::default().seed().is_err());
        assert!(RunConfig::parse("neurons = x", "d").unwrap().model_config().is_err());
    }
}
