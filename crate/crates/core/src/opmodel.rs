//! Fixed-point operational models of the GEMM and activation-forward
//! primitives, the fixed-point forward pass built from them, and the
//! conformance harness that compares it with the float reference.
//!
//! `gemm_fxp` computes `C = A * B` with `A: k x j` and `B: j x i`. Each entry
//! is accumulated left to right over the inner index, saturating after every
//! multiply and every add, so results are bit-exact for a given loop order.
//!
//! `activation_forward_fxp` applies `y = beta * act(alpha * x)` element-wise.
//! The sigmoid branch evaluates the lookup table entirely in fixed point:
//! the index is `floor(x * cells_per_unit) + offset` computed exactly from
//! the raw value, and the table entries are quantized once per format.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ann::{classify_scores, forward_float, ActivationKind, ActivationTrace, Network, SigmoidTable};
use crate::error::{check_len, Result};
use crate::fxp::{raw, FxpError, FxpFormat, FxpValue};

/// Sigmoid table entries quantized to one format.
#[derive(Debug, Clone, PartialEq)]
pub struct FxpLut {
    format: FxpFormat,
    per_unit: i128,
    offset: i64,
    entries: Vec<i64>,
    one: i64,
}

impl FxpLut {
    pub fn new(table: &SigmoidTable, format: FxpFormat) -> Self {
        let q = |x: f64| raw::from_f64(x, format).map_or(0, |(r, _)| r);
        Self {
            format,
            per_unit: table.per_unit() as i128,
            offset: table.offset(),
            entries: table.entries().iter().map(|&e| q(e)).collect(),
            one: q(1.0),
        }
    }

    pub fn format(&self) -> FxpFormat {
        self.format
    }

    /// Table index of a raw potential, before the range check.
    pub fn index(&self, x: i64) -> i64 {
        let scaled = (x as i128 * self.per_unit) >> self.format.frac_bits();
        (scaled + self.offset as i128).clamp(-1, self.entries.len() as i128) as i64
    }

    pub fn eval(&self, x: i64) -> i64 {
        let idx = self.index(x);
        if idx < 0 {
            0
        } else if idx as usize >= self.entries.len() {
            self.one
        } else {
            self.entries[idx as usize]
        }
    }
}

/// Element-wise activation on a raw value. Monotone nondecreasing in `x`.
pub fn activate_raw(kind: ActivationKind, x: i64, lut: &FxpLut) -> i64 {
    match kind {
        ActivationKind::Relu => x.max(0),
        ActivationKind::Identity => x,
        ActivationKind::SigmoidLut => lut.eval(x),
    }
}

/// Saturating dot product in the exact inner-loop order:
/// `sum = mul(a[z], b[z]) + sum` for `z = 0, 1, ...`. Returns the raw sum
/// and the number of saturation events.
pub fn dot_raw(a: &[i64], b: &[i64], fmt: FxpFormat) -> (i64, u32) {
    let mut sum = 0i64;
    let mut sats = 0u32;
    for (&x, &y) in a.iter().zip(b) {
        let (p, s1) = raw::mul(x, y, fmt);
        let (t, s2) = raw::add(p, sum, fmt);
        sum = t;
        sats += s1 as u32 + s2 as u32;
    }
    (sum, sats)
}

fn uniform_format(values: impl IntoIterator<Item = FxpValue>, fmt: FxpFormat) -> Result<()> {
    for v in values {
        if v.format() != fmt {
            return Err(FxpError::FormatMismatch { left: fmt, right: v.format() }.into());
        }
    }
    Ok(())
}

pub fn gemm_fxp(a: &[Vec<FxpValue>], b: &[Vec<FxpValue>], fmt: FxpFormat) -> Result<Vec<Vec<FxpValue>>> {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    for row in a {
        check_len("gemm inner dimension", inner, row.len())?;
    }
    for row in b {
        check_len("gemm right columns", cols, row.len())?;
    }
    uniform_format(a.iter().chain(b).flatten().copied(), fmt)?;
    let b_cols: Vec<Vec<i64>> = (0..cols).map(|y| b.iter().map(|r| r[y].raw()).collect()).collect();
    Ok(a
        .iter()
        .map(|row| {
            let a_raw: Vec<i64> = row.iter().map(FxpValue::raw).collect();
            b_cols
                .iter()
                .map(|col| {
                    let (sum, _) = dot_raw(&a_raw, col, fmt);
                    FxpValue::from_raw(sum, fmt).expect("saturated")
                })
                .collect()
        })
        .collect())
}

pub fn activation_forward_fxp(
    kind: ActivationKind,
    alpha: FxpValue,
    beta: FxpValue,
    input: &[FxpValue],
    lut: &FxpLut,
) -> Result<Vec<FxpValue>> {
    let fmt = alpha.format();
    uniform_format(input.iter().copied().chain([beta]), fmt)?;
    if lut.format() != fmt {
        return Err(FxpError::FormatMismatch { left: fmt, right: lut.format() }.into());
    }
    Ok(input
        .iter()
        .map(|x| {
            let (scaled, _) = raw::mul(x.raw(), alpha.raw(), fmt);
            let t = activate_raw(kind, scaled, lut);
            let (y, _) = raw::mul(t, beta.raw(), fmt);
            FxpValue::from_raw(y, fmt).expect("saturated")
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
struct QLayer {
    weights: Vec<Vec<i64>>,
    biases: Vec<i64>,
    activation: ActivationKind,
}

/// A network with weights, biases and the sigmoid table quantized once to
/// a single format.
#[derive(Debug, Clone)]
pub struct QuantizedNetwork {
    format: FxpFormat,
    layers: Vec<QLayer>,
    lut: Arc<FxpLut>,
    weight_saturations: usize,
}

/// Raw potentials and outputs of one fixed-point forward pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTrace {
    pub potentials: Vec<Vec<i64>>,
    pub outputs: Vec<Vec<i64>>,
    pub saturations: u32,
}

impl QuantizedNetwork {
    pub fn new(net: &Network, format: FxpFormat) -> Self {
        let mut weight_saturations = 0;
        let mut q = |x: f64| {
            let (r, sat) = raw::from_f64(x, format).expect("layer values are finite");
            weight_saturations += sat as usize;
            r
        };
        let layers = net
            .layers()
            .iter()
            .map(|l| QLayer {
                weights: l.weights().iter().map(|row| row.iter().map(|&w| q(w)).collect()).collect(),
                biases: l.biases().iter().map(|&b| q(b)).collect(),
                activation: l.activation(),
            })
            .collect();
        Self { format, layers, lut: Arc::new(FxpLut::new(net.sigmoid_table(), format)), weight_saturations }
    }

    pub fn format(&self) -> FxpFormat {
        self.format
    }

    pub fn lut(&self) -> &FxpLut {
        &self.lut
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].weights[0].len()
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Quantized weight rows of layer `l`, neuron-major.
    pub fn weights(&self, l: usize) -> &[Vec<i64>] {
        &self.layers[l].weights
    }

    pub fn biases(&self, l: usize) -> &[i64] {
        &self.layers[l].biases
    }

    pub fn activation(&self, l: usize) -> ActivationKind {
        self.layers[l].activation
    }

    /// Weights or biases that did not fit the format.
    pub fn weight_saturations(&self) -> usize {
        self.weight_saturations
    }

    pub fn quantize_input(&self, input: &[f64]) -> Result<Vec<i64>> {
        check_len("network input", self.input_size(), input.len())?;
        input
            .iter()
            .map(|&x| raw::from_f64(x, self.format).map(|(r, _)| r).ok_or(FxpError::NonFinite(x).into()))
            .collect()
    }

    /// Forward pass on already quantized inputs.
    pub fn forward_raw(&self, input: &[i64]) -> Result<RawTrace> {
        check_len("network input", self.input_size(), input.len())?;
        let fmt = self.format;
        let mut x = input.to_vec();
        let mut potentials = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut saturations = 0;
        for layer in &self.layers {
            let u: Vec<i64> = layer
                .weights
                .iter()
                .zip(&layer.biases)
                .map(|(row, &b)| {
                    let (acc, s1) = dot_raw(row, &x, fmt);
                    let (u, s2) = raw::add(acc, b, fmt);
                    saturations += s1 + s2 as u32;
                    u
                })
                .collect();
            let y: Vec<i64> = u.iter().map(|&v| activate_raw(layer.activation, v, &self.lut)).collect();
            potentials.push(u);
            outputs.push(y.clone());
            x = y;
        }
        Ok(RawTrace { potentials, outputs, saturations })
    }

    /// Raw output scores only.
    pub fn scores_raw(&self, input: &[i64]) -> Result<Vec<i64>> {
        Ok(self.forward_raw(input)?.outputs.pop().unwrap_or_default())
    }

    pub fn trace(&self, input: &[i64]) -> Result<FxpTrace> {
        let t = self.forward_raw(input)?;
        Ok(FxpTrace {
            format: self.format,
            input_raw: input.to_vec(),
            potentials_raw: t.potentials,
            outputs_raw: t.outputs,
            saturations: t.saturations,
        })
    }
}

/// Fixed-point forward trace with raw and real views.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FxpTrace {
    pub format: FxpFormat,
    pub input_raw: Vec<i64>,
    pub potentials_raw: Vec<Vec<i64>>,
    pub outputs_raw: Vec<Vec<i64>>,
    pub saturations: u32,
}

impl FxpTrace {
    fn real(&self, v: &[Vec<i64>]) -> Vec<Vec<f64>> {
        v.iter().map(|r| r.iter().map(|&x| self.format.real(x)).collect()).collect()
    }

    pub fn input(&self) -> Vec<f64> {
        self.input_raw.iter().map(|&x| self.format.real(x)).collect()
    }

    pub fn potentials(&self) -> Vec<Vec<f64>> {
        self.real(&self.potentials_raw)
    }

    pub fn outputs(&self) -> Vec<Vec<f64>> {
        self.real(&self.outputs_raw)
    }

    pub fn scores(&self) -> Vec<f64> {
        self.outputs_raw.last().map_or_else(Vec::new, |r| r.iter().map(|&x| self.format.real(x)).collect())
    }

    /// Real-valued view with the same shape as a float trace.
    pub fn to_activation_trace(&self) -> ActivationTrace {
        ActivationTrace { potentials: self.potentials(), outputs: self.outputs() }
    }
}

/// Quantizes the (normalized) input and runs the fixed-point model.
pub fn forward_fxp(net: &Network, input: &[f64], fmt: FxpFormat) -> Result<FxpTrace> {
    let q = QuantizedNetwork::new(net, fmt);
    let x = q.quantize_input(&net.prepare_input(input)?)?;
    q.trace(&x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputConformance {
    pub input: Vec<f64>,
    pub max_abs_dev: f64,
    pub class_float: Option<usize>,
    pub class_fxp: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceSummary {
    pub inputs: usize,
    pub max_abs_dev: f64,
    pub mean_abs_dev: f64,
    pub classification_flips: usize,
    pub saturations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub format: FxpFormat,
    pub threshold: f64,
    pub per_input: Vec<InputConformance>,
    pub summary: ConformanceSummary,
}

/// Runs float and fixed-point passes on every input. The deviation of an
/// input is the largest absolute difference over every neuron's potential
/// and output; classes use `classify` with `threshold`.
pub fn conformance_diff(net: &Network, inputs: &[Vec<f64>], fmt: FxpFormat, threshold: f64) -> Result<ConformanceReport> {
    let q = QuantizedNetwork::new(net, fmt);
    let rows = inputs
        .par_iter()
        .map(|input| {
            let float = forward_float(net, input)?;
            let fx = q.trace(&q.quantize_input(&net.prepare_input(input)?)?)?;
            let fx_real = fx.to_activation_trace();
            let dev = |a: &[Vec<f64>], b: &[Vec<f64>]| {
                a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
            };
            let max_abs_dev = dev(&float.potentials, &fx_real.potentials).max(dev(&float.outputs, &fx_real.outputs));
            Ok((
                InputConformance {
                    input: input.clone(),
                    max_abs_dev,
                    class_float: classify_scores(float.scores(), threshold),
                    class_fxp: classify_scores(&fx.scores(), threshold),
                },
                fx.saturations as u64,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len();
    let summary = ConformanceSummary {
        inputs: n,
        max_abs_dev: rows.iter().map(|(r, _)| r.max_abs_dev).fold(0.0, f64::max),
        mean_abs_dev: if n == 0 { 0.0 } else { rows.iter().map(|(r, _)| r.max_abs_dev).sum::<f64>() / n as f64 },
        classification_flips: rows.iter().filter(|(r, _)| r.class_float != r.class_fxp).count(),
        saturations: rows.iter().map(|(_, s)| s).sum(),
    };
    Ok(ConformanceReport { format: fmt, threshold, per_input: rows.into_iter().map(|(r, _)| r).collect(), summary })
}
