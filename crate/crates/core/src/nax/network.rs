use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Activation, NaxParams, OUTPUTS};
use crate::error::{Error, Result};

/// Lower bound added to the softplus output for `σ`.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// Mean and standard deviation of one day's Gaussian residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityParams {
    pub mu: f64,
    pub sigma: f64,
}

pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Maps the second raw output to a strictly positive `σ`.
pub fn sigma_link(raw: f64) -> f64 {
    softplus(raw) + SIGMA_FLOOR
}

fn activate(activation: Activation, pre: &[f64], out: &mut [f64]) {
    match activation {
        Activation::Sigmoid => {
            for (o, &a) in out.iter_mut().zip(pre) {
                *o = logistic(a);
            }
        }
        Activation::Softmax => {
            let max = pre.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for (o, &a) in out.iter_mut().zip(pre) {
                *o = (a - max).exp();
                total += *o;
            }
            for o in out.iter_mut() {
                *o /= total;
            }
        }
    }
}

/// Everything the backward pass needs from a forward run.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    activation: Activation,
    neurons: usize,
    fingerprint: u64,
    inputs: Vec<Vec<f64>>,
    /// `T × N` hidden activations.
    hidden: Vec<f64>,
    raw: Vec<[f64; OUTPUTS]>,
    /// `P_{t−1}` as fed into step `t`.
    feedback: Vec<[f64; OUTPUTS]>,
    outputs: Vec<DensityParams>,
}

impl ForwardPass {
    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn outputs(&self) -> &[DensityParams] {
        &self.outputs
    }

    pub fn hidden(&self, step: usize) -> &[f64] {
        &self.hidden[step * self.neurons..(step + 1) * self.neurons]
    }

    pub fn raw(&self, step: usize) -> [f64; OUTPUTS] {
        self.raw[step]
    }

    /// `P_T`, the feedback for a continuation of the sequence.
    pub fn last_feedback(&self) -> Option<[f64; OUTPUTS]> {
        self.outputs.last().map(|d| [d.mu, d.sigma])
    }
}

/// Runs the recurrence over `inputs` starting from the feedback `p0`.
pub fn forward(
    params: &NaxParams,
    activation: Activation,
    inputs: &[Vec<f64>],
    p0: [f64; OUTPUTS],
) -> Result<ForwardPass> {
    let (n, dim) = (params.neurons(), params.inputs());
    let steps = inputs.len();
    let mut pass = ForwardPass {
        activation,
        neurons: n,
        fingerprint: params.fingerprint(),
        inputs: inputs.to_vec(),
        hidden: vec![0.0; steps * n],
        raw: Vec::with_capacity(steps),
        feedback: Vec::with_capacity(steps),
        outputs: Vec::with_capacity(steps),
    };
    let mut pre = vec![0.0; n];
    let mut prev = p0;
    for (t, x) in inputs.iter().enumerate() {
        if x.len() != dim {
            return Err(Error::LengthMismatch { expected: dim, actual: x.len() });
        }
        for (j, a) in pre.iter_mut().enumerate() {
            let row = &params.w[j * dim..(j + 1) * dim];
            let mut acc = params.w0[j];
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            for (k, pk) in prev.iter().enumerate() {
                acc += params.f_at(j, k) * pk;
            }
            *a = acc;
        }
        let h = &mut pass.hidden[t * n..(t + 1) * n];
        activate(activation, &pre, h);
        let mut raw = [0.0; OUTPUTS];
        for (k, r) in raw.iter_mut().enumerate() {
            let mut acc = params.l0[k];
            for (j, hj) in h.iter().enumerate() {
                acc += params.l_at(k, j) * hj;
            }
            *r = acc;
        }
        let out = DensityParams { mu: raw[0], sigma: sigma_link(raw[1]) };
        if !(out.mu.is_finite() && out.sigma.is_finite()) {
            return Err(Error::NonFinite { step: t });
        }
        pass.raw.push(raw);
        pass.feedback.push(prev);
        pass.outputs.push(out);
        prev = [out.mu, out.sigma];
    }
    Ok(pass)
}

/// `−ln L = ½ ln(2πσ²) + (r − μ)² / (2σ²)`.
pub fn gaussian_nll(mu: f64, sigma: f64, r: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    let z = (r - mu) / sigma;
    Ok(0.5 * (2.0 * PI * sigma * sigma).ln() + 0.5 * z * z)
}

/// Partial derivatives of [`gaussian_nll`] with respect to `(μ, σ)`.
pub fn gaussian_nll_grad(mu: f64, sigma: f64, r: f64) -> (f64, f64) {
    let d = r - mu;
    let s2 = sigma * sigma;
    (-d / s2, 1.0 / sigma - d * d / (s2 * sigma))
}

/// Mean NLL over the steps plus `l2 · Σ weight²`.
pub fn batch_loss(pass: &ForwardPass, targets: &[f64], params: &NaxParams, l2: f64) -> Result<f64> {
    if targets.len() != pass.len() {
        return Err(Error::LengthMismatch { expected: pass.len(), actual: targets.len() });
    }
    if pass.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    let mut total = 0.0;
    for (out, &r) in pass.outputs.iter().zip(targets) {
        total += gaussian_nll(out.mu, out.sigma, r)?;
    }
    Ok(total / pass.len() as f64 + l2 * params.weight_norm2())
}

/// Exact gradient of [`batch_loss`] by backpropagation through time.
///
/// The feedback `P_0` is treated as a constant.
pub fn backward(params: &NaxParams, pass: &ForwardPass, targets: &[f64], l2: f64) -> Result<NaxParams> {
    if pass.fingerprint != params.fingerprint() || pass.neurons != params.neurons() {
        return Err(Error::CacheMismatch("forward pass was computed with different parameters".into()));
    }
    if targets.len() != pass.len() {
        return Err(Error::CacheMismatch(format!("{} targets for {} cached steps", targets.len(), pass.len())));
    }
    if pass.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    let (n, dim) = (params.neurons(), params.inputs());
    let scale = 1.0 / pass.len() as f64;
    let mut grad = NaxParams::zeros(n, dim);
    let mut gh = vec![0.0; n];
    let mut ga = vec![0.0; n];
    // dL/dP_t arriving from step t+1 through the feedback weights.
    let mut carry = [0.0; OUTPUTS];

    for t in (0..pass.len()).rev() {
        let out = pass.outputs[t];
        let (dmu, dsigma) = gaussian_nll_grad(out.mu, out.sigma, targets[t]);
        let g_out = [dmu * scale + carry[0], dsigma * scale + carry[1]];
        let g_raw = [g_out[0], g_out[1] * logistic(pass.raw[t][1])];

        let h = pass.hidden(t);
        for (k, &gr) in g_raw.iter().enumerate() {
            grad.l0[k] += gr;
            for (j, hj) in h.iter().enumerate() {
                grad.l[k * n + j] += gr * hj;
            }
        }
        for (j, g) in gh.iter_mut().enumerate() {
            *g = params.l_at(0, j) * g_raw[0] + params.l_at(1, j) * g_raw[1];
        }
        match pass.activation {
            Activation::Sigmoid => {
                for j in 0..n {
                    ga[j] = gh[j] * h[j] * (1.0 - h[j]);
                }
            }
            Activation::Softmax => {
                let dot: f64 = h.iter().zip(&gh).map(|(a, b)| a * b).sum();
                for j in 0..n {
                    ga[j] = h[j] * (gh[j] - dot);
                }
            }
        }

        let x = &pass.inputs[t];
        let prev = pass.feedback[t];
        carry = [0.0; OUTPUTS];
        for j in 0..n {
            let g = ga[j];
            grad.w0[j] += g;
            for (i, xi) in x.iter().enumerate() {
                grad.w[j * dim + i] += g * xi;
            }
            for k in 0..OUTPUTS {
                grad.f[j * OUTPUTS + k] += g * prev[k];
                carry[k] += params.f_at(j, k) * g;
            }
        }
    }

    if l2 > 0.0 {
        for (g, p) in [(&mut grad.w, &params.w), (&mut grad.f, &params.f), (&mut grad.l, &params.l)] {
            for (gi, pi) in g.iter_mut().zip(p) {
                *gi += 2.0 * l2 * pi;
            }
        }
    }
    Ok(grad)
}
