//! Ex-ante forecast: block-bootstrapped temperature paths drive the network
//! and the daily densities become equal-weight Gaussian mixtures. Writes the
//! quantile table and four density slices as CSV under the given directory.

use std::fs::{self, File};
use std::path::PathBuf;

use nax_forecast::forecast::{forecast_expost, slice_dates, write_density_slices, write_forecast_csv};
use nax_forecast::ingest::synthetic::{generate_synthetic, SyntheticConfig};
use nax_forecast::ingest::{DateRange, DAYS_PER_YEAR};
use nax_forecast::nax::NaxConfig;
use nax_forecast::pipeline::{fit_model, forecast_exante_from_data, training_window, ModelData};

fn main() -> nax_forecast::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "exante_out".into()).into();
    fs::create_dir_all(&out)?;

    let synth = generate_synthetic(&SyntheticConfig::years(2006, 2011), 8)?;
    let data = ModelData::new(synth.days, synth.holidays)?;
    let horizon = DateRange::year(2011);
    let (origin, end) = data.index_range(horizon)?;
    let config = NaxConfig { window_years: 2, seed: 4, ..NaxConfig::default() };
    let (start, stop) = training_window(origin, config.window_years)?;
    let fitted = fit_model(&data, &config, start, stop)?;

    let exante = forecast_exante_from_data(&data, &fitted.model, horizon, 500, 17)?;
    let expost = forecast_expost(&fitted.model, &data.exogenous(origin, end))?;
    write_forecast_csv(File::create(out.join("forecast.csv"))?, &exante)?;
    write_density_slices(File::create(out.join("density_slices.csv"))?, &exante, &slice_dates(&exante), 200)?;

    println!("{:<12}{:>12}{:>12}{:>14}", "date", "ex-ante σ", "ex-post σ", "90% width");
    for (a, p) in exante.days.iter().zip(&expost.days).step_by(DAYS_PER_YEAR / 12) {
        let (lo, hi) = a.central_interval_gwh(0.90)?;
        println!(
            "{:<12}{:>12.4}{:>12.4}{:>14.1}",
            a.date,
            a.density.sigma_log(),
            p.density.sigma_log(),
            hi - lo
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}
