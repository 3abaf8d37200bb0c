//! The recurrent density network.
//!
//! One hidden layer of `N` neurons reads the exogenous inputs `X_t` and the
//! previous output `P_{t−1} = (μ_{t−1}, σ_{t−1})`:
//!
//! ```text
//! P_t = l · H(w · X_t + f · P_{t−1} + w0) + l0
//! ```
//!
//! The second raw output passes through `softplus(·) + 1e-6` so that `σ_t`
//! is always positive. Everything here works in min-max normalized space;
//! de-normalization happens in [`crate::forecast`].

mod adam;
mod network;
mod train;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use network::{
    backward, batch_loss, forward, gaussian_nll, gaussian_nll_grad, sigma_link, softplus, DensityParams,
    ForwardPass, SIGMA_FLOOR,
};
pub use train::{batch_windows, holdout_days, train, train_with_monitor, Trained};

/// Number of network outputs (μ and σ), which are also the feedback inputs.
pub const OUTPUTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// Softmax across the hidden layer as a whole.
    Softmax,
    Sigmoid,
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Activation::Softmax => "softmax",
            Activation::Sigmoid => "sigmoid",
        })
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "softmax" => Ok(Activation::Softmax),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

/// Length of the contiguous subsequences used as mini-batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchSize {
    Days(usize),
    /// The whole training series as one batch.
    Full,
}

impl std::fmt::Display for BatchSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BatchSize::Days(n) => write!(f, "{n}"),
            BatchSize::Full => f.write_str("full"),
        }
    }
}

impl std::str::FromStr for BatchSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("full") || s.eq_ignore_ascii_case("none") {
            return Ok(BatchSize::Full);
        }
        s.parse::<usize>()
            .map(BatchSize::Days)
            .map_err(|_| Error::Config(format!("bad batch size `{s}`")))
    }
}

/// Hyper-parameters of one network and its training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaxConfig {
    pub neurons: usize,
    pub activation: Activation,
    pub learning_rate: f64,
    pub batch: BatchSize,
    pub l2: f64,
    /// Training window length in years (used by the pipeline).
    pub window_years: usize,
    pub max_epochs: usize,
    /// Epochs without improvement of the monitored NLL before stopping.
    pub patience: usize,
    /// Trailing share of the training window monitored for early stopping
    /// instead of fitted; 0 monitors the training series itself.
    #[serde(default)]
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for NaxConfig {
    /// The configuration selected on the validation year.
    fn default() -> Self {
        Self {
            neurons: 3,
            activation: Activation::Softmax,
            learning_rate: 0.003,
            batch: BatchSize::Days(50),
            l2: 1e-4,
            window_years: 3,
            max_epochs: 500,
            patience: 50,
            holdout_fraction: 0.0,
            seed: 0,
        }
    }
}

impl NaxConfig {
    pub fn validate(&self) -> Result<()> {
        if self.neurons == 0 {
            return Err(Error::Config("at least one hidden neuron is required".into()));
        }
        // A zero learning rate is accepted: it freezes the initialization.
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!("bad learning rate {}", self.learning_rate)));
        }
        if !(self.l2 >= 0.0) || !self.l2.is_finite() {
            return Err(Error::Config(format!("bad L2 coefficient {}", self.l2)));
        }
        if let BatchSize::Days(n) = self.batch {
            if n < 2 {
                return Err(Error::Config(format!("batch size {n} is below 2")));
            }
        }
        if !(0.0..=0.5).contains(&self.holdout_fraction) {
            return Err(Error::Config(format!("holdout fraction {} outside [0, 0.5]", self.holdout_fraction)));
        }
        if self.window_years == 0 {
            return Err(Error::Config("training window must span at least one year".into()));
        }
        Ok(())
    }
}

/// Weights of the network. Matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsJson", into = "ParamsJson")]
pub struct NaxParams {
    neurons: usize,
    inputs: usize,
    /// `N × I` input weights.
    pub w: Vec<f64>,
    /// `N` hidden biases.
    pub w0: Vec<f64>,
    /// `N × 2` feedback weights.
    pub f: Vec<f64>,
    /// `2 × N` output weights.
    pub l: Vec<f64>,
    /// Output biases.
    pub l0: Vec<f64>,
}

impl NaxParams {
    pub fn zeros(neurons: usize, inputs: usize) -> Self {
        Self {
            neurons,
            inputs,
            w: vec![0.0; neurons * inputs],
            w0: vec![0.0; neurons],
            f: vec![0.0; neurons * OUTPUTS],
            l: vec![0.0; OUTPUTS * neurons],
            l0: vec![0.0; OUTPUTS],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng>(neurons: usize, inputs: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(neurons, inputs);
        let glorot = |fan_in: usize, fan_out: usize| (6.0 / (fan_in + fan_out) as f64).sqrt();
        let (a_w, a_f, a_l) = (glorot(inputs, neurons), glorot(OUTPUTS, neurons), glorot(neurons, OUTPUTS));
        for x in &mut p.w {
            *x = rng.random_range(-a_w..=a_w);
        }
        for x in &mut p.f {
            *x = rng.random_range(-a_f..=a_f);
        }
        for x in &mut p.l {
            *x = rng.random_range(-a_l..=a_l);
        }
        p
    }

    pub fn neurons(&self) -> usize {
        self.neurons
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The five arrays in the order `w, w0, f, l, l0`.
    pub fn slices(&self) -> [&[f64]; 5] {
        [&self.w, &self.w0, &self.f, &self.l, &self.l0]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 5] {
        [&mut self.w, &mut self.w0, &mut self.f, &mut self.l, &mut self.l0]
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.slices().into_iter().flatten()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.slices_mut().into_iter().flatten()
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }

    /// Sum of squared weights (`w`, `f`, `l`); biases are not penalized.
    pub fn weight_norm2(&self) -> f64 {
        [&self.w, &self.f, &self.l].into_iter().flatten().map(|x| x * x).sum()
    }

    #[inline]
    pub fn w_at(&self, neuron: usize, input: usize) -> f64 {
        self.w[neuron * self.inputs + input]
    }

    #[inline]
    pub fn f_at(&self, neuron: usize, output: usize) -> f64 {
        self.f[neuron * OUTPUTS + output]
    }

    #[inline]
    pub fn l_at(&self, output: usize, neuron: usize) -> f64 {
        self.l[output * self.neurons + neuron]
    }

    /// FNV-1a over the bit patterns; ties a forward cache to its parameters.
    fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for x in self.iter() {
            h ^= x.to_bits();
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

#[derive(Serialize, Deserialize)]
struct ArrayJson {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ParamsJson {
    w: ArrayJson,
    w0: ArrayJson,
    f: ArrayJson,
    l: ArrayJson,
    l0: ArrayJson,
}

impl From<NaxParams> for ParamsJson {
    fn from(p: NaxParams) -> Self {
        let (n, i) = (p.neurons, p.inputs);
        Self {
            w: ArrayJson { shape: vec![n, i], data: p.w },
            w0: ArrayJson { shape: vec![n], data: p.w0 },
            f: ArrayJson { shape: vec![n, OUTPUTS], data: p.f },
            l: ArrayJson { shape: vec![OUTPUTS, n], data: p.l },
            l0: ArrayJson { shape: vec![OUTPUTS], data: p.l0 },
        }
    }
}

impl TryFrom<ParamsJson> for NaxParams {
    type Error = String;

    fn try_from(j: ParamsJson) -> Result<Self, String> {
        let [n, i] = j.w.shape[..] else {
            return Err("w must be two-dimensional".into());
        };
        let expect = [
            ("w", &j.w, vec![n, i]),
            ("w0", &j.w0, vec![n]),
            ("f", &j.f, vec![n, OUTPUTS]),
            ("l", &j.l, vec![OUTPUTS, n]),
            ("l0", &j.l0, vec![OUTPUTS]),
        ];
        for (name, array, shape) in expect {
            if array.shape != shape || array.data.len() != shape.iter().product::<usize>() {
                return Err(format!("array {name} has shape {:?}, expected {shape:?}", array.shape));
            }
            if array.data.iter().any(|x| !x.is_finite()) {
                return Err(format!("array {name} has non-finite entries"));
            }
        }
        Ok(Self { neurons: n, inputs: i, w: j.w.data, w0: j.w0.data, f: j.f.data, l: j.l.data, l0: j.l0.data })
    }
}
