//! Aggregates hourly load and temperature rows into daily records and prints
//! the descriptive statistics table.
//!
//! Pass a CSV (`date,hour,demand_mwh,dry_bulb_f,wet_bulb_f`) to use your own
//! data; without one a synthetic year is generated.

use std::fs::File;

use nax_forecast::ingest::synthetic::{generate_synthetic, to_hourly, SyntheticConfig};
use nax_forecast::ingest::{aggregate_daily, read_hourly_csv, HolidayCalendar};
use nax_forecast::stats::summarize;

fn main() -> nax_forecast::Result<()> {
    let hourly = match std::env::args().nth(1) {
        Some(path) => read_hourly_csv(File::open(&path)?, &path)?,
        None => to_hourly(&generate_synthetic(&SyntheticConfig::years(2010, 2010), 7)?.days),
    };
    let holidays = HolidayCalendar::us_fixed_federal(1950..=2100);
    let agg = aggregate_daily(&hourly, &holidays)?;
    for day in &agg.incomplete {
        eprintln!("warning: {} has only {} hours", day.date, day.hours);
    }

    println!("{} hourly rows -> {} days", hourly.len(), agg.days.len());
    println!("{:<16}{:>8}{:>10}{:>10}{:>10}{:>10}{:>10}", "column", "count", "min", "max", "mean", "median", "std");
    let columns: [(&str, fn(&_) -> f64); 3] = [
        ("consumption_gwh", |d: &nax_forecast::ingest::DailyRecord| d.consumption),
        ("dry_bulb_f", |d| d.dry_bulb),
        ("wet_bulb_f", |d| d.wet_bulb),
    ];
    for (name, get) in columns {
        let values: Vec<f64> = agg.days.iter().map(get).collect();
        let s = summarize(&values).expect("non-empty");
        println!(
            "{name:<16}{:>8}{:>10.2}{:>10.2}{:>10.2}{:>10.2}{:>10.2}",
            s.count, s.min, s.max, s.mean, s.median, s.std
        );
    }
    Ok(())
}
