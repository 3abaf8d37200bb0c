use serde::{Deserialize, Serialize};

use super::NaxParams;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &NaxParams) -> Self {
        Self { m: vec![0.0; params.len()], v: vec![0.0; params.len()], step: 0 }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut NaxParams, grads: &NaxParams, state: &mut AdamState, learning_rate: f64) {
    debug_assert_eq!(params.len(), state.m.len());
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    for (((p, g), m), v) in params.iter_mut().zip(grads.iter()).zip(&mut state.m).zip(&mut state.v) {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filled(value: f64) -> NaxParams {
        let mut p = NaxParams::zeros(2, 3);
        p.iter_mut().for_each(|x| *x = value);
        p
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = filled(0.7);
        let mut s = AdamState::new(&p);
        adam_step(&mut p, &filled(0.0), &mut s, 0.1);
        assert_eq!(p, filled(0.7));
        assert_eq!(s.step(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m̂ = g, v̂ = g², so Δ = −lr·g/(|g| + ε)
        for g in [2.5, -0.01] {
            let mut p = filled(1.0);
            let mut s = AdamState::new(&p);
            adam_step(&mut p, &filled(g), &mut s, 0.01);
            let expected = 1.0 - 0.01 * g / (g.abs() + ADAM_EPSILON);
            assert!(p.iter().all(|&x| (x - expected).abs() < 1e-15));
            assert!(p.iter().all(|&x| ((x - 1.0).abs() - 0.01).abs() < 1e-6));
        }
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut p = filled(0.3);
            let mut s = AdamState::new(&p);
            for k in 0..5 {
                adam_step(&mut p, &filled(0.1 * k as f64 - 0.2), &mut s, 0.05);
            }
            (p, s)
        };
        assert_eq!(run(), run());
    }
}
