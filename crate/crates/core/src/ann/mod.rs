//! Multilayer perceptron model and the floating-point reference forward pass.
//!
//! Neuron `k` of layer `l` computes the activation potential
//! `u = sum_j w[k][j] * x[j] + b[k]` over the previous layer's outputs and
//! emits `y = act(u)`. The float pass here is the oracle the fixed-point
//! operational model is compared against; it uses the same sigmoid lookup
//! table so the two differ only by finite word-length effects.

pub mod nnet;
pub mod sigmoid;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
pub use sigmoid::{relu, sigmoid_exact, sigmoid_lut, SigmoidTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Relu,
    #[serde(rename = "sigmoid")]
    SigmoidLut,
    Identity,
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActivationKind::Relu => "relu",
            ActivationKind::SigmoidLut => "sigmoid",
            ActivationKind::Identity => "identity",
        })
    }
}

impl FromStr for ActivationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relu" => Ok(ActivationKind::Relu),
            "sigmoid" | "sigmoid-lut" | "sigmoid_lut" => Ok(ActivationKind::SigmoidLut),
            "identity" | "linear" | "none" => Ok(ActivationKind::Identity),
            other => Err(format!("unknown activation {other:?}")),
        }
    }
}

/// One fully connected layer. Weights are stored neuron-major:
/// `weights[k][j]` connects input `j` to neuron `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    activation: ActivationKind,
}

impl Layer {
    pub fn new(weights: Vec<Vec<f64>>, biases: Vec<f64>, activation: ActivationKind) -> Result<Self> {
        check_len("layer biases", weights.len(), biases.len())?;
        if weights.is_empty() {
            return Err(Error::InvalidNetwork("layer has no neurons".into()));
        }
        let fan_in = weights[0].len();
        if fan_in == 0 {
            return Err(Error::InvalidNetwork("layer has no inputs".into()));
        }
        for row in &weights {
            check_len("layer weight row", fan_in, row.len())?;
        }
        let finite = weights.iter().flatten().chain(&biases).all(|w| w.is_finite());
        if !finite {
            return Err(Error::InvalidNetwork("non-finite weight or bias".into()));
        }
        Ok(Self { weights, biases, activation })
    }

    pub fn fan_in(&self) -> usize {
        self.weights[0].len()
    }

    pub fn width(&self) -> usize {
        self.biases.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Weight from input `j` to neuron `k`.
    pub fn weight(&self, j: usize, k: usize) -> f64 {
        self.weights[k][j]
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    pub fn set_activation(&mut self, activation: ActivationKind) {
        self.activation = activation;
    }
}

/// Input normalization data carried by `.nnet` files. Applied only when
/// `enabled` is set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Normalization {
    pub enabled: bool,
    pub mins: Vec<f64>,
    pub maxes: Vec<f64>,
    pub means: Vec<f64>,
    pub ranges: Vec<f64>,
}

impl Normalization {
    fn apply(&self, input: &[f64]) -> Vec<f64> {
        input
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let lo = self.mins.get(i).copied().unwrap_or(f64::NEG_INFINITY);
                let hi = self.maxes.get(i).copied().unwrap_or(f64::INFINITY);
                let mean = self.means.get(i).copied().unwrap_or(0.0);
                let range = self.ranges.get(i).copied().filter(|r| *r != 0.0).unwrap_or(1.0);
                (x.clamp(lo, hi) - mean) / range
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<Layer>,
    name: Option<String>,
    normalization: Normalization,
    lut: Arc<SigmoidTable>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
            && self.normalization == other.normalization
            && self.lut.step() == other.lut.step()
    }
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidNetwork("network has no layers".into()));
        }
        for pair in layers.windows(2) {
            check_len("layer fan-in", pair[0].width(), pair[1].fan_in())?;
        }
        Ok(Self {
            layers,
            name: None,
            normalization: Normalization::default(),
            lut: Arc::new(SigmoidTable::default()),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn with_sigmoid_table(mut self, table: SigmoidTable) -> Self {
        self.lut = Arc::new(table);
        self
    }

    /// Sets the activation of every hidden layer and of the output layer.
    pub fn with_activations(mut self, hidden: ActivationKind, output: ActivationKind) -> Self {
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter_mut().enumerate() {
            layer.set_activation(if i == last { output } else { hidden });
        }
        self
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    pub fn sigmoid_table(&self) -> &SigmoidTable {
        &self.lut
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_size(&self) -> usize {
        self.layers[self.layers.len() - 1].width()
    }

    pub fn layer_widths(&self) -> Vec<usize> {
        self.layers.iter().map(Layer::width).collect()
    }

    /// Total neuron count over hidden and output layers.
    pub fn neuron_count(&self) -> usize {
        self.layers.iter().map(Layer::width).sum()
    }

    /// Validates the input length and applies normalization if enabled.
    pub fn prepare_input(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_len("network input", self.input_size(), input.len())?;
        if self.normalization.enabled {
            Ok(self.normalization.apply(input))
        } else {
            Ok(input.to_vec())
        }
    }

    pub fn activate(&self, kind: ActivationKind, u: f64) -> f64 {
        match kind {
            ActivationKind::Relu => relu(u),
            ActivationKind::SigmoidLut => sigmoid_lut(u, &self.lut),
            ActivationKind::Identity => u,
        }
    }
}

/// Per-layer potentials `u` and outputs `y` for one input vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationTrace {
    pub potentials: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
}

impl ActivationTrace {
    /// Scores of the final layer.
    pub fn scores(&self) -> &[f64] {
        self.outputs.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn activation_potential(layer: &Layer, input: &[f64]) -> Result<Vec<f64>> {
    check_len("layer input", layer.fan_in(), input.len())?;
    Ok(layer
        .weights
        .iter()
        .zip(&layer.biases)
        .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
        .collect())
}

pub fn forward_float(net: &Network, input: &[f64]) -> Result<ActivationTrace> {
    let mut x = net.prepare_input(input)?;
    let mut potentials = Vec::with_capacity(net.layers.len());
    let mut outputs = Vec::with_capacity(net.layers.len());
    for layer in &net.layers {
        let u = activation_potential(layer, &x)?;
        let y: Vec<f64> = u.iter().map(|&v| net.activate(layer.activation, v)).collect();
        potentials.push(u);
        outputs.push(y.clone());
        x = y;
    }
    Ok(ActivationTrace { potentials, outputs })
}

/// Class whose score reaches `threshold`; the largest such score wins and
/// exact ties go to the lowest index.
pub fn classify_scores(scores: &[f64], threshold: f64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if s >= threshold && best.map_or(true, |b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

pub fn classify(trace: &ActivationTrace, threshold: f64) -> Option<usize> {
    classify_scores(trace.scores(), threshold)
}
