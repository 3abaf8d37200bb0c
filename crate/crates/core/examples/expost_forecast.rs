//! Ex-post density forecast of a year with realized weather, next to the
//! GLM and ARX benchmarks fitted on the same window.

use nax_forecast::ingest::synthetic::{generate_synthetic, SyntheticConfig};
use nax_forecast::ingest::DateRange;
use nax_forecast::nax::NaxConfig;
use nax_forecast::pipeline::{run_test, ModelData};

fn main() -> nax_forecast::Result<()> {
    let synth = generate_synthetic(&SyntheticConfig::years(2008, 2011), 3)?;
    let data = ModelData::new(synth.days, synth.holidays)?;
    let config = NaxConfig { window_years: 3, seed: 9, ..NaxConfig::default() };
    let outcome = run_test(&data, DateRange::year(2011), &config)?;

    println!("trained on {}..{}", outcome.fitted.model.training_start, outcome.fitted.model.training_end);
    println!("{:<6}{:>10}{:>10}{:>10}{:>12}", "model", "MAPE %", "RMSE", "APL", "95% cover");
    for m in &outcome.models {
        let cover95 = m.report.coverage.iter().find(|c| (c.alpha - 0.95).abs() < 1e-9).map_or(f64::NAN, |c| c.empirical);
        println!(
            "{:<6}{:>10.2}{:>10.2}{:>10.3}{:>12.3}",
            m.name, m.report.mape_pct, m.report.rmse_gwh, m.report.apl_gwh, cover95
        );
    }

    let nax = &outcome.nax().forecast;
    println!("\n{:<12}{:>10}{:>10}{:>10}{:>10}", "date", "realized", "5%", "median", "95%");
    for (day, y) in nax.days.iter().zip(&outcome.realized).step_by(30) {
        let (lo, hi) = day.central_interval_gwh(0.90)?;
        println!("{:<12}{:>10.1}{:>10.1}{:>10.1}{:>10.1}", day.date, y, lo, day.point_gwh()?, hi);
    }
    Ok(())
}
