use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use nax_forecast::cli::run_from;
use nax_forecast::forecast::read_forecast_csv;
use nax_forecast::ingest::synthetic::{generate_synthetic, to_hourly, SyntheticConfig};
use nax_forecast::ingest::write_daily_csv;
use serde_json::Value;
use tempfile::TempDir;

fn write_daily(dir: &Path, first: i32, last: i32) -> PathBuf {
    let s = generate_synthetic(&SyntheticConfig::years(first, last), 21).unwrap();
    let path = dir.join("daily.csv");
    write_daily_csv(fs::File::create(&path).unwrap(), &s.days).unwrap();
    path
}

fn write_config(dir: &Path, daily: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    let text = format!(
        "daily = {}\nfirst_year = 2009\nvalidation_year = 2011\ntest_year = 2012\nmax_epochs = 20\n\
         grid.neurons = 2,3\ngrid.activation = softmax\ngrid.learning_rate = 0.01\ngrid.batch = 50\n\
         grid.l2 = 0.0001\ngrid.window_years = 1,2\n{extra}",
        daily.display()
    );
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> nax_forecast::Result<PathBuf> {
    run_from(std::iter::once("nax").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ingest_hourly_matches_recount() {
    let dir = TempDir::new().unwrap();
    let synth = generate_synthetic(&SyntheticConfig::years(2010, 2010), 2).unwrap();
    let hourly = dir.path().join("hourly.csv");
    let mut f = fs::File::create(&hourly).unwrap();
    writeln!(f, "date,hour,demand_mwh,dry_bulb_f,wet_bulb_f").unwrap();
    for h in to_hourly(&synth.days) {
        writeln!(f, "{},{},{},{},{}", h.date, h.hour, h.demand, h.dry_bulb, h.wet_bulb).unwrap();
    }
    drop(f);
    let out = dir.path().join("ingest");
    run(&["ingest", "--hourly", "--input", s(&hourly), "--seed", "1", "--out", s(&out)]).unwrap();

    let stats: Value = serde_json::from_str(&fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    let consumption: Vec<f64> = synth.days.iter().map(|d| d.consumption).collect();
    let n = consumption.len() as f64;
    let mean = consumption.iter().sum::<f64>() / n;
    let var = consumption.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1.0);
    let row = &stats[0];
    assert_eq!(row["column"], "consumption_gwh");
    assert_eq!(row["count"], 365);
    assert!((row["mean"].as_f64().unwrap() - mean).abs() < 1e-9);
    assert!((row["std"].as_f64().unwrap() - var.sqrt()).abs() < 1e-9);
    let max = consumption.iter().cloned().fold(f64::MIN, f64::max);
    assert!((row["max"].as_f64().unwrap() - max).abs() < 1e-9);
    assert_eq!(fs::read_to_string(out.join("daily.csv")).unwrap().lines().count(), 366);
}

#[test]
fn malformed_rows_report_their_line() {
    let dir = TempDir::new().unwrap();
    let daily = dir.path().join("bad.csv");
    fs::write(&daily, "date,consumption_gwh,dry_bulb_f,wet_bulb_f\n2010-01-01,300,40,35\n2010-01-02,abc,40,35\n").unwrap();
    let err = run(&["ingest", "--input", s(&daily), "--seed", "1", "--out", s(&dir.path().join("o"))]).unwrap_err();
    assert!(err.to_string().contains("bad.csv:3"), "{err}");
}

#[test]
fn validation_is_reproducible_and_sized() {
    let dir = TempDir::new().unwrap();
    let daily = write_daily(dir.path(), 2009, 2012);
    let cfg = write_config(dir.path(), &daily, "");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run(&["validate", "--config", s(&cfg), "--seed", "3", "--out", s(&a)]).unwrap();
    run(&["validate", "--config", s(&cfg), "--seed", "3", "--out", s(&b), "--workers", "2"]).unwrap();
    let board = fs::read_to_string(a.join("leaderboard.csv")).unwrap();
    assert_eq!(board.lines().count(), 1 + 4);
    for file in ["leaderboard.csv", "window_slice.csv", "selected.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["config"]["grid.neurons"], "2,3");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn missing_validation_year_is_named_and_nothing_is_written() {
    let dir = TempDir::new().unwrap();
    let daily = write_daily(dir.path(), 2009, 2010);
    let cfg = write_config(dir.path(), &daily, "");
    let out = dir.path().join("out");
    let err = run(&["validate", "--config", s(&cfg), "--seed", "3", "--out", s(&out)]).unwrap_err();
    assert!(err.to_string().contains("2011-01-01"), "{err}");
    assert!(!out.exists());
    let leftovers = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().contains(".tmp-"))
        .count();
    assert_eq!(leftovers, 0);
}

#[test]
fn seed_is_mandatory() {
    let dir = TempDir::new().unwrap();
    let daily = write_daily(dir.path(), 2010, 2010);
    let err = run(&["ingest", "--input", s(&daily), "--out", s(&dir.path().join("o"))]).unwrap_err();
    assert!(err.to_string().contains("seed"));
}

#[test]
fn test_forecast_and_evaluate_roundtrip() {
    let dir = TempDir::new().unwrap();
    let daily = write_daily(dir.path(), 2009, 2013);
    let cfg = write_config(dir.path(), &daily, "window_years = 2\nrobustness_years = 2013\n");
    let test = dir.path().join("test");
    run(&["test", "--config", s(&cfg), "--seed", "4", "--out", s(&test)]).unwrap();
    for name in ["nax", "glm", "arx"] {
        assert!(test.join(format!("{name}_report.json")).exists());
    }

    let model = test.join("model.json");
    let fc = dir.path().join("fc");
    run(&["forecast", "--ex-ante", "--paths", "30", "--model", s(&model), "--config", s(&cfg), "--seed", "4", "--out", s(&fc)])
        .unwrap();
    let rows = read_forecast_csv(fs::File::open(fc.join("forecast.csv")).unwrap(), "forecast.csv").unwrap();
    assert_eq!(rows.len(), 365);
    assert!(rows.iter().all(|r| r.quantiles().windows(2).all(|w| w[0] < w[1])));
    assert_eq!(fs::read_to_string(fc.join("density.csv")).unwrap().lines().count(), 1 + 365 * 30);
    let slices = fs::read_to_string(fc.join("density_slices.csv")).unwrap();
    assert_eq!(slices.lines().count(), 1 + 4 * 200);

    let ev = dir.path().join("ev");
    run(&["evaluate", "--density", s(&fc.join("density.csv")), "--config", s(&cfg), "--seed", "4", "--out", s(&ev)]).unwrap();
    assert_eq!(fs::read(fc.join("report.json")).unwrap(), fs::read(ev.join("report.json")).unwrap());

    let post = dir.path().join("post");
    run(&["forecast", "--ex-post", "--model", s(&model), "--config", s(&cfg), "--seed", "4", "--out", s(&post)]).unwrap();
    assert_eq!(fs::read(post.join("report.json")).unwrap(), fs::read(test.join("nax_report.json")).unwrap());

    let rob = dir.path().join("rob");
    run(&["robustness", "--config", s(&cfg), "--seed", "4", "--out", s(&rob)]).unwrap();
    let table = fs::read_to_string(rob.join("robustness.csv")).unwrap();
    assert!(table.starts_with("year,model,mape_pct,rmse_gwh,apl_gwh\n"));
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn incompatible_model_is_rejected() {
    let dir = TempDir::new().unwrap();
    let daily = write_daily(dir.path(), 2009, 2012);
    let cfg = write_config(dir.path(), &daily, "window_years = 1\n");
    let test = dir.path().join("test");
    run(&["test", "--config", s(&cfg), "--seed", "4", "--out", s(&test)]).unwrap();
    let err = run(&[
        "forecast",
        "--model",
        s(&test.join("model.json")),
        "--config",
        s(&cfg),
        "--set",
        "forecast_year=2011",
        "--seed",
        "4",
        "--out",
        s(&dir.path().join("f")),
    ])
    .unwrap_err();
    assert!(err.to_string().contains("cannot forecast"), "{err}");
}

#[test]
fn binary_exits_nonzero_on_error() {
    let output = Command::new(env!("CARGO_BIN_EXE_nax"))
        .args(["validate", "--seed", "1", "--config", "/nonexistent/run.cfg"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("error"));
}
