//! Trains the recurrent density network on GLM residuals and prints its σ,
//! back in log units, next to the planted one.

use nax_forecast::features::{calendar_features, input_row, MinMaxScaler, WeatherFeatures, INPUT_COLUMNS};
use nax_forecast::glm::{build_design_matrix, fit_ols};
use nax_forecast::ingest::synthetic::{generate_synthetic, SyntheticConfig};
use nax_forecast::ingest::log_transform;
use nax_forecast::nax::{forward, train, NaxConfig};

fn main() -> nax_forecast::Result<()> {
    let data = generate_synthetic(&SyntheticConfig::years(2009, 2010), 5)?;
    let series = log_transform(&data.days)?;
    let calendar: Vec<_> =
        series.dates.iter().zip(series.time_index()).map(|(d, t)| calendar_features(*d, t, &data.holidays)).collect();
    let glm = fit_ols(&build_design_matrix(&calendar), &series.values)?;

    let rows: Vec<Vec<f64>> = data
        .days
        .iter()
        .zip(&calendar)
        .map(|(d, c)| input_row(WeatherFeatures { dry_bulb: d.dry_bulb, wet_bulb: d.wet_bulb }, c))
        .collect();
    let inputs = MinMaxScaler::fit(&INPUT_COLUMNS, &rows)?.transform(&rows)?;
    let target_rows: Vec<Vec<f64>> = glm.residuals.iter().map(|r| vec![*r]).collect();
    let target = MinMaxScaler::fit(&["residual"], &target_rows)?;
    let targets: Vec<f64> = glm.residuals.iter().map(|r| target.scale_value(0, *r)).collect();

    let config = NaxConfig { seed: 1, ..NaxConfig::default() };
    let trained = train(&config, &inputs, &targets)?;
    println!(
        "{} epochs, best after {}, monitored NLL {:.4} -> {:.4}",
        trained.loss_history.len(),
        trained.best_epoch,
        trained.monitor_history[0],
        trained.monitor_history[trained.best_epoch]
    );

    let pass = forward(&trained.params, config.activation, &inputs, [0.0; 2])?;
    let range = target.range(0);
    println!("{:<12}{:>10}{:>12}{:>12}", "date", "dry °F", "σ planted", "σ network");
    for i in (0..pass.len()).step_by(61) {
        let out = pass.outputs()[i];
        println!(
            "{:<12}{:>10.1}{:>12.4}{:>12.4}",
            series.dates[i],
            data.days[i].dry_bulb,
            data.truth[i].residual_sigma,
            out.sigma * range
        );
    }
    Ok(())
}
