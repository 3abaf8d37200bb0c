//! Fits the trend and seasonality regression to four synthetic years and
//! compares the estimates with the planted coefficients. The seasonal terms
//! also absorb the average weather response, so they sit above the planted ones.

use nax_forecast::features::calendar_features;
use nax_forecast::glm::{build_design_matrix, coefficient_significance, fit_ols};
use nax_forecast::ingest::synthetic::{generate_synthetic, SyntheticConfig};
use nax_forecast::ingest::{log_transform, treat_outliers};

fn main() -> nax_forecast::Result<()> {
    let data = generate_synthetic(&SyntheticConfig::years(2008, 2011), 11)?;
    let series = log_transform(&data.days)?;
    let features: Vec<_> =
        series.dates.iter().zip(series.time_index()).map(|(d, t)| calendar_features(*d, t, &data.holidays)).collect();
    let design = build_design_matrix(&features);

    let first = fit_ols(&design, &series.values)?;
    let (treated, outliers) = treat_outliers(&series, &first.residuals)?;
    println!("winsorized {} of {} days", outliers.days.len(), series.len());
    let fit = fit_ols(&design, &treated.values)?;

    println!("{:<8}{:>12}{:>12}{:>10}{:>6}{:>12}", "coef", "estimate", "std err", "t", "1%", "planted");
    for (row, planted) in coefficient_significance(&fit.coefficients)?.iter().zip(data.coefficients.estimates) {
        let mark = if row.significant_1pct { "*" } else { "" };
        println!(
            "{:<8}{:>12.6}{:>12.6}{:>10.2}{:>6}{:>12.6}",
            row.name, row.estimate, row.std_error, row.t_stat, mark, planted
        );
    }
    println!("residual std {:.5}", fit.residual_std());
    Ok(())
}
