use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{adam_step, backward, batch_loss, forward, gaussian_nll, AdamState, BatchSize, NaxConfig, NaxParams, OUTPUTS};
use crate::error::{Error, Result};

/// Independent random streams derived from the training seed.
const INIT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;

/// Result of a training run. `params` are the weights with the best
/// monitored NLL.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trained {
    pub params: NaxParams,
    pub initial: NaxParams,
    /// Mean mini-batch loss of each epoch.
    pub loss_history: Vec<f64>,
    /// Monitored NLL before training and after each epoch.
    pub monitor_history: Vec<f64>,
    /// Number of epochs completed before the best monitored NLL (0 = initial).
    pub best_epoch: usize,
}

/// Contiguous `[start, end)` windows covering `0..len`. A trailing window
/// shorter than 2 steps is merged into its predecessor.
pub fn batch_windows(len: usize, batch: BatchSize) -> Vec<(usize, usize)> {
    let size = match batch {
        BatchSize::Full => len,
        BatchSize::Days(n) => n.min(len),
    };
    if size == 0 {
        return Vec::new();
    }
    let mut windows: Vec<(usize, usize)> = (0..len).step_by(size).map(|s| (s, (s + size).min(len))).collect();
    if windows.len() > 1 {
        let (s, e) = windows[windows.len() - 1];
        if e - s < 2 {
            windows.pop();
            windows.last_mut().expect("non-empty").1 = e;
        }
    }
    windows
}

fn free_running_nll(params: &NaxParams, config: &NaxConfig, inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    let pass = forward(params, config.activation, inputs, [0.0; OUTPUTS])?;
    batch_loss(&pass, targets, params, 0.0)
}

/// Mean NLL over steps `from..` of a free-running pass over the whole series.
fn tail_nll(params: &NaxParams, config: &NaxConfig, inputs: &[Vec<f64>], targets: &[f64], from: usize) -> Result<f64> {
    let pass = forward(params, config.activation, inputs, [0.0; OUTPUTS])?;
    let mut total = 0.0;
    for (out, r) in pass.outputs()[from..].iter().zip(&targets[from..]) {
        total += gaussian_nll(out.mu, out.sigma, *r)?;
    }
    Ok(total / (targets.len() - from) as f64)
}

/// Number of trailing days held out for early stopping.
pub fn holdout_days(len: usize, fraction: f64) -> usize {
    if fraction <= 0.0 {
        0
    } else {
        ((len as f64 * fraction).round() as usize).max(1).min(len.saturating_sub(2))
    }
}

/// Trains with early stopping.
///
/// With `config.holdout_fraction > 0` the last part of the series is held
/// out: gradients use only the leading days, and the monitored NLL is that
/// of the held-out days in a free-running pass over the whole series.
/// Otherwise the whole training series, run from `P_0`, is monitored.
pub fn train(config: &NaxConfig, inputs: &[Vec<f64>], targets: &[f64]) -> Result<Trained> {
    check_inputs(config, inputs, targets)?;
    if config.holdout_fraction <= 0.0 {
        return fit(config, inputs, targets, |p| free_running_nll(p, config, inputs, targets));
    }
    let hold = holdout_days(inputs.len(), config.holdout_fraction);
    if hold == 0 {
        return Err(Error::InsufficientHistory(format!("{} days are too few to hold any out", inputs.len())));
    }
    let split = inputs.len() - hold;
    fit(config, &inputs[..split], &targets[..split], |p| tail_nll(p, config, inputs, targets, split))
}

/// Trains on the whole series and monitors the free-running NLL of a
/// separate `(inputs, targets)` set.
pub fn train_with_monitor(
    config: &NaxConfig,
    inputs: &[Vec<f64>],
    targets: &[f64],
    monitor: (&[Vec<f64>], &[f64]),
) -> Result<Trained> {
    check_inputs(config, inputs, targets)?;
    fit(config, inputs, targets, |p| free_running_nll(p, config, monitor.0, monitor.1))
}

fn check_inputs(config: &NaxConfig, inputs: &[Vec<f64>], targets: &[f64]) -> Result<()> {
    config.validate()?;
    if inputs.is_empty() {
        return Err(Error::EmptyInput("training window"));
    }
    if inputs.len() != targets.len() {
        return Err(Error::LengthMismatch { expected: inputs.len(), actual: targets.len() });
    }
    Ok(())
}

/// Maximum-likelihood training with Adam on contiguous mini-batches.
///
/// Each window starts from `P_0 = (0, 0)` and gradients are truncated at
/// window boundaries. Window order is reshuffled every epoch. Training stops
/// after `max_epochs` or once `score` has not improved for `patience` epochs.
fn fit(
    config: &NaxConfig,
    inputs: &[Vec<f64>],
    targets: &[f64],
    score: impl Fn(&NaxParams) -> Result<f64>,
) -> Result<Trained> {
    let dim = inputs[0].len();
    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    init_rng.set_stream(INIT_STREAM);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(SHUFFLE_STREAM);

    let initial = NaxParams::init(config.neurons, dim, &mut init_rng);
    let mut params = initial.clone();
    let mut state = AdamState::new(&params);
    let mut windows = batch_windows(inputs.len(), config.batch);

    let monitor_nll = |p: &NaxParams, epoch: usize| score(p).map_err(|_| Error::Divergence { epoch, step: 0 });
    let mut best = monitor_nll(&params, 0)?;
    let mut best_params = params.clone();
    let mut best_epoch = 0;
    let mut loss_history = Vec::new();
    let mut monitor_history = vec![best];

    for epoch in 1..=config.max_epochs {
        windows.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for &(start, end) in &windows {
            let diverged = || Error::Divergence { epoch, step: start };
            let pass = forward(&params, config.activation, &inputs[start..end], [0.0; OUTPUTS]).map_err(|_| diverged())?;
            let loss = batch_loss(&pass, &targets[start..end], &params, config.l2)?;
            if !loss.is_finite() {
                return Err(diverged());
            }
            let grads = backward(&params, &pass, &targets[start..end], config.l2)?;
            adam_step(&mut params, &grads, &mut state, config.learning_rate);
            if !params.is_finite() {
                return Err(diverged());
            }
            epoch_loss += loss;
        }
        loss_history.push(epoch_loss / windows.len() as f64);

        let current = monitor_nll(&params, epoch)?;
        monitor_history.push(current);
        if current < best {
            best = current;
            best_params = params.clone();
            best_epoch = epoch;
        } else if epoch - best_epoch >= config.patience {
            break;
        }
    }
    Ok(Trained { params: best_params, initial, loss_history, monitor_history, best_epoch })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nax::Activation;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn windows_cover_series() {
        assert_eq!(batch_windows(10, BatchSize::Days(4)), vec![(0, 4), (4, 8), (8, 10)]);
        assert_eq!(batch_windows(9, BatchSize::Days(4)), vec![(0, 4), (4, 9)]);
        assert_eq!(batch_windows(9, BatchSize::Full), vec![(0, 9)]);
        assert_eq!(batch_windows(3, BatchSize::Days(50)), vec![(0, 3)]);
    }

    /// Inputs and targets drawn from a planted network.
    fn planted(steps: usize, seed: u64) -> (NaxParams, Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = NaxParams::zeros(3, 2);
        p.w = vec![3.0, -1.0, -2.0, 2.5, 1.0, 1.0];
        p.w0 = vec![0.0, 0.5, -0.5];
        p.f = vec![0.5, 0.0, -0.5, 0.2, 0.0, 0.0];
        p.l = vec![1.0, -1.0, 0.5, 0.8, -0.6, 0.3];
        p.l0 = vec![0.0, 0.0];
        let inputs: Vec<Vec<f64>> = (0..steps)
            .map(|t| {
                let season = (t as f64 * 2.0 * std::f64::consts::PI / 365.0).sin();
                vec![0.5 + 0.4 * season + 0.1 * rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0)]
            })
            .collect();
        let pass = forward(&p, Activation::Sigmoid, &inputs, [0.0, 0.0]).unwrap();
        let targets = pass
            .outputs()
            .iter()
            .map(|d| {
                let z: f64 = StandardNormal.sample(&mut rng);
                d.mu + d.sigma * z
            })
            .collect();
        (p, inputs, targets)
    }

    #[test]
    fn recovers_planted_model_likelihood() {
        let (planted, inputs, targets) = planted(3000, 4);
        let (train_x, hold_x) = inputs.split_at(2500);
        let (train_y, hold_y) = targets.split_at(2500);
        let config = NaxConfig {
            neurons: 3,
            activation: Activation::Sigmoid,
            learning_rate: 0.01,
            batch: BatchSize::Days(100),
            l2: 0.0,
            max_epochs: 300,
            patience: 50,
            seed: 3,
            ..NaxConfig::default()
        };
        let trained = train(&config, train_x, train_y).unwrap();
        // continue the recurrence from the end of the training series
        let score = |p: &NaxParams| {
            let warm = forward(p, Activation::Sigmoid, train_x, [0.0, 0.0]).unwrap();
            let pass = forward(p, Activation::Sigmoid, hold_x, warm.last_feedback().unwrap()).unwrap();
            batch_loss(&pass, hold_y, p, 0.0).unwrap()
        };
        let (fitted, truth) = (score(&trained.params), score(&planted));
        assert!((fitted - truth).abs() <= 0.05 * truth.abs(), "fitted {fitted} planted {truth}");
    }

    #[test]
    fn zero_learning_rate_keeps_initialization() {
        let (_, inputs, targets) = planted(200, 1);
        let config = NaxConfig { learning_rate: 0.0, max_epochs: 20, patience: 100, ..NaxConfig::default() };
        let trained = train(&config, &inputs, &targets).unwrap();
        assert_eq!(trained.params, trained.initial);
        assert_eq!(trained.loss_history.len(), 20);
    }

    #[test]
    fn loss_decreases_and_runs_are_reproducible() {
        let (_, inputs, targets) = planted(400, 2);
        let config = NaxConfig { max_epochs: 60, patience: 1000, learning_rate: 0.01, ..NaxConfig::default() };
        let a = train(&config, &inputs, &targets).unwrap();
        assert!(a.loss_history[50] < a.loss_history[0]);
        let b = train(&config, &inputs, &targets).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.loss_history, b.loss_history);
    }

    #[test]
    fn early_stopping_keeps_best() {
        let (_, inputs, targets) = planted(300, 6);
        let config = NaxConfig { max_epochs: 400, patience: 5, learning_rate: 0.1, ..NaxConfig::default() };
        let t = train(&config, &inputs, &targets).unwrap();
        let best = t.monitor_history.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(t.monitor_history[t.best_epoch], best);
        assert!(t.monitor_history.len() <= 401);
    }

    #[test]
    fn held_out_days_only_steer_stopping() {
        let (_, inputs, mut targets) = planted(300, 7);
        let config =
            NaxConfig { max_epochs: 30, patience: 1000, learning_rate: 0.01, holdout_fraction: 0.2, ..NaxConfig::default() };
        assert_eq!(holdout_days(300, 0.2), 60);
        assert_eq!(holdout_days(300, 0.0), 0);
        let a = train(&config, &inputs, &targets).unwrap();
        targets[250..].iter_mut().for_each(|r| *r += 0.3);
        let b = train(&config, &inputs, &targets).unwrap();
        assert_eq!(a.loss_history, b.loss_history);
        assert_ne!(a.monitor_history, b.monitor_history);
        let tiny = NaxConfig { holdout_fraction: 0.5, ..config };
        assert!(train(&tiny, &inputs[..3], &targets[..3]).is_ok());
        assert!(matches!(train(&tiny, &inputs[..2], &targets[..2]), Err(Error::InsufficientHistory(_))));
    }

    #[test]
    fn divergence_is_reported() {
        let inputs = vec![vec![1e300, -1e300]; 10];
        let targets = vec![1e300; 10];
        let config = NaxConfig { max_epochs: 3, ..NaxConfig::default() };
        assert!(matches!(train(&config, &inputs, &targets), Err(Error::Divergence { .. })));
    }

    #[test]
    fn rejects_bad_training_input() {
        let config = NaxConfig::default();
        assert!(matches!(train(&config, &[], &[]), Err(Error::EmptyInput(_))));
        assert!(matches!(train(&config, &[vec![0.0]], &[0.0, 1.0]), Err(Error::LengthMismatch { .. })));
    }
}
