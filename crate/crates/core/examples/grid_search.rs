//! Hyper-parameter search on a validation year, then the test year and a
//! robustness year with the selected configuration.
//!
//! `cargo run --release --example grid_search -- 2` limits rayon to two
//! threads; the leaderboard does not depend on it.

use nax_forecast::ingest::synthetic::{generate_synthetic, SyntheticConfig};
use nax_forecast::ingest::DateRange;
use nax_forecast::nax::{Activation, BatchSize, NaxConfig};
use nax_forecast::pipeline::{run_robustness, run_test, run_validation, with_workers, GridSpec, ModelData, ValidationOptions};

fn main() -> nax_forecast::Result<()> {
    let workers = std::env::args().nth(1).map(|w| w.parse().expect("worker count"));
    let synth = generate_synthetic(&SyntheticConfig::years(2007, 2012), 2)?;
    let data = ModelData::new(synth.days, synth.holidays)?;
    let grid = GridSpec {
        neurons: vec![2, 3],
        activations: vec![Activation::Softmax, Activation::Sigmoid],
        learning_rates: vec![0.01, 0.003],
        batches: vec![BatchSize::Days(50)],
        l2: vec![1e-4],
        window_years: vec![1, 2, 3],
    };
    let base = NaxConfig { max_epochs: 200, ..NaxConfig::default() };
    let options = ValidationOptions { seed: 42, replicates: 1 };

    let result = with_workers(workers, || run_validation(&data, DateRange::year(2010), &grid, &base, options))??;
    println!("{:>4}{:>4}{:>9}{:>7}{:>5}{:>10}{:>8}", "#", "N", "act", "lr", "yrs", "RMSE", "MAPE");
    for r in &result.rows {
        match (r.rmse_gwh, r.mape_pct) {
            (Some(rmse), Some(mape)) => println!(
                "{:>4}{:>4}{:>9}{:>7}{:>5}{:>10.2}{:>8.2}",
                r.index,
                r.neurons,
                format!("{:?}", r.activation),
                r.learning_rate,
                r.window_years,
                rmse,
                mape
            ),
            _ => println!("{:>4} skipped: {}", r.index, r.note),
        }
    }
    let selected = result.selected.clone();
    println!("selected #{}: {:?} with {} years", result.selected_index, selected.activation, selected.window_years);

    let test = run_test(&data, DateRange::year(2011), &selected)?;
    let nax = &test.nax().report;
    println!("test 2011: MAPE {:.2}%, UC {:.2}, CC {:.2}", nax.mape_pct, nax.uc.statistic, nax.cc.test.statistic);
    for row in run_robustness(&data, &[DateRange::year(2012)], &selected)? {
        println!("robustness {} {:<4} MAPE {:.2}% APL {:.3}", row.year, row.model, row.mape_pct, row.apl_gwh);
    }
    Ok(())
}
