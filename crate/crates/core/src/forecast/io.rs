use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Component, DayDensity, DayForecast, DensityForecast};
use crate::error::{Error, Result};

/// Percentiles written to the forecast CSV.
pub const FORECAST_PERCENTILES: [u32; 7] = [1, 5, 25, 50, 75, 95, 99];

/// `date,point_gwh,sigma_log,q01,q05,q25,q50,q75,q95,q99`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub date: NaiveDate,
    pub point_gwh: f64,
    pub sigma_log: f64,
    pub q01: f64,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
    pub q99: f64,
}

impl ForecastRow {
    pub fn quantiles(&self) -> [f64; 7] {
        [self.q01, self.q05, self.q25, self.q50, self.q75, self.q95, self.q99]
    }

    fn from_day(day: &DayForecast) -> Result<Self> {
        let q = |p: u32| day.quantile_gwh(p as f64 / 100.0);
        Ok(Self {
            date: day.date,
            point_gwh: day.point_gwh()?,
            sigma_log: day.density.sigma_log(),
            q01: q(1)?,
            q05: q(5)?,
            q25: q(25)?,
            q50: q(50)?,
            q75: q(75)?,
            q95: q(95)?,
            q99: q(99)?,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn write_forecast_csv<W: Write>(out: W, forecast: &DensityForecast) -> Result<()> {
    let rows: Vec<ForecastRow> = forecast.days.par_iter().map(ForecastRow::from_day).collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(out);
    for row in &rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_forecast_csv<R: Read>(input: R, path: &str) -> Result<Vec<ForecastRow>> {
    let mut reader = csv::Reader::from_reader(input);
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Parse { path: path.to_string(), line: i + 2, message: e.to_string() })
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct MixtureRow {
    date: NaiveDate,
    path_id: usize,
    mu_log: f64,
    sigma_log: f64,
}

/// `date,path_id,mu_log,sigma_log`, one line per day and component.
pub fn write_mixture_csv<W: Write>(out: W, forecast: &DensityForecast) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for day in &forecast.days {
        for (path_id, c) in day.density.components().iter().enumerate() {
            w.serialize(MixtureRow { date: day.date, path_id, mu_log: c.mu, sigma_log: c.sigma })
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rebuilds a mixture forecast from [`write_mixture_csv`] output.
pub fn read_mixture_csv<R: Read>(input: R, path: &str) -> Result<DensityForecast> {
    let mut reader = csv::Reader::from_reader(input);
    let mut days: Vec<DayForecast> = Vec::new();
    for (i, row) in reader.deserialize::<MixtureRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse { path: path.to_string(), line: i + 2, message: e.to_string() })?;
        if !(row.sigma_log > 0.0) {
            return Err(Error::Parse { path: path.to_string(), line: i + 2, message: "sigma_log must be positive".into() });
        }
        let c = Component { mu: row.mu_log, sigma: row.sigma_log };
        match days.last_mut() {
            Some(last) if last.date == row.date => {
                if let DayDensity::Mixture(cs) = &mut last.density {
                    cs.push(c);
                }
            }
            _ => days.push(DayForecast { date: row.date, density: DayDensity::Mixture(vec![c]) }),
        }
    }
    Ok(DensityForecast { days })
}

/// January, April, July and October 15 of each year in the forecast.
pub fn slice_dates(forecast: &DensityForecast) -> Vec<NaiveDate> {
    forecast
        .days
        .iter()
        .map(|d| d.date)
        .filter(|d| d.day() == 15 && matches!(d.month(), 1 | 4 | 7 | 10))
        .collect()
}

/// CDF and PDF of consumption (GWh) on a grid spanning the 0.1% to 99.9%
/// quantiles, for each of `dates`: `date,consumption_gwh,cdf,pdf`.
pub fn write_density_slices<W: Write>(out: W, forecast: &DensityForecast, dates: &[NaiveDate], points: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "consumption_gwh", "cdf", "pdf"]).map_err(csv_err)?;
    for day in forecast.days.iter().filter(|d| dates.contains(&d.date)) {
        let lo = day.density.quantile_log(0.001)?;
        let hi = day.density.quantile_log(0.999)?;
        for k in 0..points {
            let x = lo + (hi - lo) * k as f64 / (points.max(2) - 1) as f64;
            let gwh = x.exp();
            let cdf = day.density.cdf_log(x);
            let pdf = day.density.pdf_log(x) / gwh;
            w.write_record([day.date.to_string(), gwh.to_string(), cdf.to_string(), pdf.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}
