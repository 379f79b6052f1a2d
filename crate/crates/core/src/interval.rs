//! Rectangular interval bounds propagated layer by layer.
//!
//! Two domains are provided.
//!
//! * The float domain bounds what [`forward_float`](crate::ann::forward_float)
//!   computes. Lower and upper sums are formed with the same operation order
//!   as the concrete pass; since IEEE rounding is monotone, every concrete
//!   sum lands between them, so no outward widening is needed.
//! * The fixed-point domain bounds what the operational model computes. Every
//!   raw kernel (saturating add, rounding multiply by a constant, activation)
//!   is monotone, so evaluating the exact kernels on interval endpoints in the
//!   concrete loop order yields sound and per-neuron tight bounds, including
//!   saturation effects.

use serde::{Deserialize, Serialize};

use crate::ann::{sigmoid_lut, ActivationKind, ActivationTrace, Layer, Network, SigmoidTable};
use crate::error::{check_len, Error, Result};
use crate::fxp::{raw, FxpFormat};
use crate::opmodel::{activate_raw, FxpTrace, QuantizedNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidArgument(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

/// A nonempty axis-aligned box, one interval per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalBox(Vec<Interval>);

impl IntervalBox {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidArgument("box needs at least one dimension".into()));
        }
        Ok(Self(intervals))
    }

    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        check_len("box bounds", lo.len(), hi.len())?;
        Self::new(lo.iter().zip(hi).map(|(&l, &h)| Interval::new(l, h)).collect::<Result<_>>()?)
    }

    pub fn from_point(x: &[f64]) -> Result<Self> {
        Self::new(x.iter().map(|&v| Interval::point(v)).collect())
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.0
    }

    pub fn lower(&self) -> Vec<f64> {
        self.0.iter().map(|i| i.lo).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.0.iter().map(|i| i.hi).collect()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.len() == self.0.len() && self.0.iter().zip(x).all(|(i, &v)| i.contains(v))
    }

    pub fn is_subset_of(&self, other: &IntervalBox) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| b.contains_interval(a))
    }

    /// Widest dimension; ties go to the lowest index.
    pub fn widest_dim(&self) -> usize {
        let mut best = 0;
        for (i, iv) in self.0.iter().enumerate() {
            if iv.width() > self.0[best].width() {
                best = i;
            }
        }
        best
    }

    /// Bisects the widest dimension. With a format the cut point is the
    /// midpoint rounded down to that format's grid. The halves share the cut.
    pub fn split(&self, grid: Option<FxpFormat>) -> Result<(IntervalBox, IntervalBox)> {
        let d = self.widest_dim();
        let iv = self.0[d];
        if iv.width() <= 0.0 {
            return Err(Error::InvalidArgument("cannot split a box with zero width".into()));
        }
        let mut mid = iv.lo + iv.width() / 2.0;
        if let Some(fmt) = grid {
            mid = (mid * fmt.scale()).floor() / fmt.scale();
        }
        let mid = mid.clamp(iv.lo, iv.hi);
        let mut left = self.clone();
        let mut right = self.clone();
        left.0[d].hi = mid;
        right.0[d].lo = mid;
        Ok((left, right))
    }
}

/// Bounds on every potential and output of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerBounds {
    pub potentials: Vec<Vec<Interval>>,
    pub outputs: Vec<Vec<Interval>>,
}

impl LayerBounds {
    pub fn scores(&self) -> &[Interval] {
        self.outputs.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains_trace(&self, trace: &ActivationTrace) -> bool {
        let inside = |b: &[Vec<Interval>], v: &[Vec<f64>]| {
            b.len() == v.len()
                && b.iter().zip(v).all(|(bl, vl)| bl.len() == vl.len() && bl.iter().zip(vl).all(|(i, &x)| i.contains(x)))
        };
        inside(&self.potentials, &trace.potentials) && inside(&self.outputs, &trace.outputs)
    }

    /// Every interval of `self` lies inside the matching one of `other`.
    pub fn is_within(&self, other: &LayerBounds) -> bool {
        let within = |a: &[Vec<Interval>], b: &[Vec<Interval>]| {
            a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| y.contains_interval(x))
        };
        within(&self.potentials, &other.potentials) && within(&self.outputs, &other.outputs)
    }
}

pub fn propagate_affine(layer: &Layer, input: &IntervalBox) -> Result<Vec<Interval>> {
    check_len("layer input box", layer.fan_in(), input.dims())?;
    if !input.intervals().iter().all(Interval::is_finite) {
        return Err(Error::InvalidArgument("affine propagation needs finite bounds; widen first".into()));
    }
    Ok(layer
        .weights()
        .iter()
        .zip(layer.biases())
        .map(|(row, b)| {
            let lo = row.iter().zip(input.intervals()).map(|(w, i)| (w * i.lo).min(w * i.hi)).sum::<f64>() + b;
            let hi = row.iter().zip(input.intervals()).map(|(w, i)| (w * i.lo).max(w * i.hi)).sum::<f64>() + b;
            Interval { lo, hi }
        })
        .collect())
}

pub fn propagate_activation(kind: ActivationKind, input: &[Interval], table: &SigmoidTable) -> Vec<Interval> {
    input
        .iter()
        .map(|i| match kind {
            ActivationKind::Relu => Interval { lo: i.lo.max(0.0), hi: i.hi.max(0.0) },
            ActivationKind::Identity => *i,
            ActivationKind::SigmoidLut => Interval {
                lo: sigmoid_lut(i.lo, table).max(0.0),
                hi: sigmoid_lut(i.hi, table).min(1.0),
            },
        })
        .collect()
}

/// Box in the network's internal input space (after normalization).
fn prepared_box(net: &Network, input: &IntervalBox) -> Result<IntervalBox> {
    check_len("network input box", net.input_size(), input.dims())?;
    let lo = net.prepare_input(&input.lower())?;
    let hi = net.prepare_input(&input.upper())?;
    IntervalBox::new(lo.iter().zip(&hi).map(|(&a, &b)| Interval { lo: a.min(b), hi: a.max(b) }).collect())
}

pub fn propagate_network(net: &Network, input: &IntervalBox) -> Result<LayerBounds> {
    let mut x = prepared_box(net, input)?;
    let mut potentials = Vec::with_capacity(net.layers().len());
    let mut outputs = Vec::with_capacity(net.layers().len());
    for layer in net.layers() {
        let u = propagate_affine(layer, &x)?;
        let y = propagate_activation(layer.activation(), &u, net.sigmoid_table());
        potentials.push(u);
        x = IntervalBox(y.clone());
        outputs.push(y);
    }
    Ok(LayerBounds { potentials, outputs })
}

/// Raw fixed-point bounds, `(lo, hi)` per neuron.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawBounds {
    pub format: FxpFormat,
    pub potentials: Vec<Vec<(i64, i64)>>,
    pub outputs: Vec<Vec<(i64, i64)>>,
}

impl RawBounds {
    pub fn to_layer_bounds(&self) -> LayerBounds {
        let f = self.format;
        let conv = |v: &[Vec<(i64, i64)>]| -> Vec<Vec<Interval>> {
            v.iter().map(|l| l.iter().map(|&(a, b)| Interval { lo: f.real(a), hi: f.real(b) }).collect()).collect()
        };
        LayerBounds { potentials: conv(&self.potentials), outputs: conv(&self.outputs) }
    }

    pub fn contains_trace(&self, trace: &FxpTrace) -> bool {
        let inside = |b: &[Vec<(i64, i64)>], v: &[Vec<i64>]| {
            b.iter().zip(v).all(|(bl, vl)| bl.iter().zip(vl).all(|(&(lo, hi), &x)| lo <= x && x <= hi))
        };
        inside(&self.potentials, &trace.potentials_raw) && inside(&self.outputs, &trace.outputs_raw)
    }
}

/// Exact bounds of the operational model over the raw input box `[lo, hi]`.
pub fn propagate_network_fxp(net: &QuantizedNetwork, lo: &[i64], hi: &[i64]) -> Result<RawBounds> {
    check_len("network input box", net.input_size(), lo.len())?;
    check_len("network input box", net.input_size(), hi.len())?;
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return Err(Error::InvalidArgument("raw box has lo > hi".into()));
    }
    let fmt = net.format();
    let mut x: Vec<(i64, i64)> = lo.iter().copied().zip(hi.iter().copied()).collect();
    let mut potentials = Vec::with_capacity(net.layer_count());
    let mut outputs = Vec::with_capacity(net.layer_count());
    for l in 0..net.layer_count() {
        let u: Vec<(i64, i64)> = net
            .weights(l)
            .iter()
            .zip(net.biases(l))
            .map(|(row, &b)| {
                let (mut acc_lo, mut acc_hi) = (0i64, 0i64);
                for (&w, &(xl, xh)) in row.iter().zip(&x) {
                    let (pl, ph) = if w >= 0 { (xl, xh) } else { (xh, xl) };
                    acc_lo = raw::add(raw::mul(w, pl, fmt).0, acc_lo, fmt).0;
                    acc_hi = raw::add(raw::mul(w, ph, fmt).0, acc_hi, fmt).0;
                }
                (raw::add(acc_lo, b, fmt).0, raw::add(acc_hi, b, fmt).0)
            })
            .collect();
        let kind = net.activation(l);
        let y: Vec<(i64, i64)> =
            u.iter().map(|&(a, b)| (activate_raw(kind, a, net.lut()), activate_raw(kind, b, net.lut()))).collect();
        potentials.push(u);
        outputs.push(y.clone());
        x = y;
    }
    Ok(RawBounds { format: fmt, potentials, outputs })
}

/// Fixed-point bounds for every input in a real box, quantized as the
/// operational model would quantize it.
pub fn propagate_box_fxp(net: &Network, input: &IntervalBox, fmt: FxpFormat) -> Result<RawBounds> {
    let q = QuantizedNetwork::new(net, fmt);
    let b = prepared_box(net, input)?;
    let lo = q.quantize_input(&b.lower())?;
    let hi = q.quantize_input(&b.upper())?;
    propagate_network_fxp(&q, &lo, &hi)
}

/// Replaces every interval that is unbounded or wider than `limit` by `limit`.
pub fn widen(b: &IntervalBox, limit: Interval) -> IntervalBox {
    IntervalBox(
        b.0.iter().map(|i| if !i.is_finite() || i.width() > limit.width() { limit } else { *i }).collect(),
    )
}

/// Default widening limit: the sigmoid table domain.
pub fn default_widen_limit() -> Interval {
    Interval { lo: -crate::ann::sigmoid::DOMAIN, hi: crate::ann::sigmoid::DOMAIN }
}

/// Widening limit for ReLU-only networks in a given format: `[-2^(I-1), 2^(I-1)]`.
pub fn format_widen_limit(fmt: FxpFormat) -> Interval {
    let m = ((fmt.int_bits() - 1) as f64).exp2();
    Interval { lo: -m, hi: m }
}
