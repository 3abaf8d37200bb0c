//! Scores a density forecast: point errors, the pinball loss curve, the
//! central-interval backtest and the coverage likelihood-ratio tests.

use nax_forecast::eval::{backtest_ci, cc_test, evaluate, uc_test};
use nax_forecast::benchmarks::forecast_glm_density;
use nax_forecast::forecast::CalendarDay;
use nax_forecast::features::calendar_features;
use nax_forecast::glm::{build_design_matrix, fit_ols};
use nax_forecast::ingest::synthetic::{generate_synthetic, SyntheticConfig};
use nax_forecast::ingest::log_transform;

fn main() -> nax_forecast::Result<()> {
    let synth = generate_synthetic(&SyntheticConfig::years(2009, 2011), 13)?;
    let series = log_transform(&synth.days)?;
    let calendar: Vec<_> =
        series.dates.iter().zip(series.time_index()).map(|(d, t)| calendar_features(*d, t, &synth.holidays)).collect();
    let split = 2 * 365;
    let fit = fit_ols(&build_design_matrix(&calendar[..split]), &series.values[..split])?;
    let days: Vec<CalendarDay> = (split..series.len())
        .map(|t| CalendarDay { date: series.dates[t], t, calendar: calendar[t] })
        .collect();
    let forecast = forecast_glm_density(&fit, &days)?;
    let realized: Vec<f64> = synth.days[split..].iter().map(|d| d.consumption).collect();

    let report = evaluate(&forecast, &realized)?;
    println!("RMSE {:.2} GWh  MAPE {:.2}%  APL {:.3} GWh", report.rmse_gwh, report.mape_pct, report.apl_gwh);
    for p in [1, 25, 50, 75, 99] {
        println!("  pinball at {p:>2}%: {:.3}", report.pinball_gwh[p - 1]);
    }

    let backtest = backtest_ci(&forecast, &realized, &[0.5, 0.9, 0.95, 0.99])?;
    println!("{:<8}{:>10}{:>10}{:>8}{:>8}", "nominal", "empirical", "LR_uc", "LR_cc", "reject");
    for (point, series) in backtest.coverage.iter().zip(&backtest.violations) {
        let uc = uc_test(series, 1.0 - series.alpha)?;
        let cc = cc_test(series, 1.0 - series.alpha)?;
        println!(
            "{:<8.2}{:>10.3}{:>10.2}{:>8.2}{:>8}",
            point.alpha,
            point.empirical,
            uc.statistic,
            cc.test.statistic,
            if uc.reject || cc.test.reject { "yes" } else { "no" }
        );
    }
    Ok(())
}
