//! Search regions: a box of inputs, restricted to a fixed-point grid and
//! optionally to a Euclidean ball around a base input.
//!
//! Each input dimension is either a single real value (a degenerate box
//! side, quantized later by the model) or a lattice `first + i * step` of
//! raw grid values, `i` in `0..count`. Search nodes are inclusive index
//! ranges per dimension.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::fxp::FxpFormat;
use crate::interval::IntervalBox;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Point(f64),
    Lattice { first: i64, step: i64, count: u64 },
}

impl Axis {
    pub fn count(&self) -> u64 {
        match self {
            Axis::Point(_) => 1,
            Axis::Lattice { count, .. } => *count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    format: FxpFormat,
    bounds: IntervalBox,
    axes: Vec<Axis>,
    base: Option<Vec<f64>>,
    gamma: Option<f64>,
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -((-a).div_euclid(b))
}

impl Region {
    /// Grid points of `bounds` representable in `format`, further restricted
    /// to multiples of `step` when given. `step` must be a positive multiple
    /// of the format's resolution.
    pub fn new(bounds: &IntervalBox, format: FxpFormat, step: Option<f64>) -> Result<Self> {
        let step_raw = match step {
            None => 1i128,
            Some(s) => {
                let r = s * format.scale();
                if !(s > 0.0 && r.is_finite() && r.fract() == 0.0 && r >= 1.0 && r < 9.2e18) {
                    return Err(Error::InvalidArgument(format!(
                        "grid step {s} is not a positive multiple of the {format} resolution"
                    )));
                }
                r as i128
            }
        };
        let axes = bounds
            .intervals()
            .iter()
            .map(|iv| {
                if !iv.is_finite() {
                    return Err(Error::InvalidArgument("search regions must be bounded".into()));
                }
                if iv.lo == iv.hi {
                    return Ok(Axis::Point(iv.lo));
                }
                let lo = ((iv.lo * format.scale()).ceil() as i128).max(format.raw_min() as i128);
                let hi = ((iv.hi * format.scale()).floor() as i128).min(format.raw_max() as i128);
                let first = ceil_div(lo, step_raw) * step_raw;
                let last = hi.div_euclid(step_raw) * step_raw;
                if last < first {
                    return Err(Error::InfeasibleRegion);
                }
                Ok(Axis::Lattice {
                    first: first as i64,
                    step: step_raw as i64,
                    count: ((last - first) / step_raw + 1) as u64,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { format, bounds: bounds.clone(), axes, base: None, gamma: None })
    }

    /// A single-point region.
    pub fn point(x: &[f64], format: FxpFormat) -> Result<Self> {
        Self::new(&IntervalBox::from_point(x)?, format, None)
    }

    /// Restricts the region to `{x : |x - base| <= gamma}`. Lattice axes are
    /// clipped to a slightly widened `[base - gamma, base + gamma]`.
    pub fn with_ball(mut self, base: Vec<f64>, gamma: f64) -> Result<Self> {
        check_len("region base", self.axes.len(), base.len())?;
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be finite and nonnegative, got {gamma}")));
        }
        if base.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("base input must be finite".into()));
        }
        for (d, &b) in base.iter().enumerate() {
            if let Axis::Lattice { first, step, count } = self.axes[d] {
                let slack = 1e-9 * (1.0 + b.abs() + gamma);
                let lo = ((b - gamma - slack) * self.format.scale() - first as f64) / step as f64;
                let hi = ((b + gamma + slack) * self.format.scale() - first as f64) / step as f64;
                let lo = lo.ceil().max(0.0);
                let hi = hi.floor().min((count - 1) as f64);
                if hi < lo {
                    return Err(Error::InfeasibleRegion);
                }
                self.axes[d] = Axis::Lattice {
                    first: first + lo as i64 * step,
                    step,
                    count: (hi - lo) as u64 + 1,
                };
            }
        }
        self.base = Some(base);
        self.gamma = Some(gamma);
        Ok(self)
    }

    pub fn format(&self) -> FxpFormat {
        self.format
    }

    pub fn bounds(&self) -> &IntervalBox {
        &self.bounds
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn base(&self) -> Option<&[f64]> {
        self.base.as_deref()
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    /// Number of grid points in the box, ignoring the ball.
    pub fn grid_size(&self) -> f64 {
        self.axes.iter().map(|a| a.count() as f64).product()
    }

    /// Real coordinate of grid index `i` on axis `d`.
    pub fn coord(&self, d: usize, i: u64) -> f64 {
        match self.axes[d] {
            Axis::Point(x) => x,
            Axis::Lattice { first, step, .. } => self.format.real(first + i as i64 * step),
        }
    }

    /// Whether `x` lies in the box and the ball.
    pub fn contains(&self, x: &[f64]) -> bool {
        if !self.bounds.contains_point(x) {
            return false;
        }
        match (&self.base, self.gamma) {
            (Some(b), Some(g)) => super::euclidean_distance(x, b).map_or(false, |d| d <= g),
            _ => true,
        }
    }

    pub(crate) fn root(&self) -> Node {
        Node { lo: vec![0; self.axes.len()], hi: self.axes.iter().map(|a| a.count() - 1).collect() }
    }

    fn axis_width(&self, d: usize, node: &Node) -> f64 {
        match self.axes[d] {
            Axis::Point(_) => 0.0,
            Axis::Lattice { step, .. } => (node.hi[d] - node.lo[d]) as f64 * step as f64 / self.format.scale(),
        }
    }

    /// Halves the widest dimension (lowest index on ties) into
    /// `[lo, mid]` and `[mid + 1, hi]`. `None` for single points.
    pub(crate) fn split(&self, node: &Node) -> Option<(Node, Node)> {
        let mut best: Option<(usize, f64)> = None;
        for d in 0..self.axes.len() {
            let w = self.axis_width(d, node);
            if w > 0.0 && best.map_or(true, |(_, bw)| w > bw) {
                best = Some((d, w));
            }
        }
        let (d, _) = best?;
        let mid = node.lo[d] + (node.hi[d] - node.lo[d]) / 2;
        let mut left = node.clone();
        let mut right = node.clone();
        left.hi[d] = mid;
        right.lo[d] = mid + 1;
        Some((left, right))
    }

    /// Grid index on axis `d` within `[lo, hi]` closest to `target`
    /// (lower index on ties).
    fn nearest_index(&self, d: usize, lo: u64, hi: u64, target: f64) -> u64 {
        match self.axes[d] {
            Axis::Point(_) => 0,
            Axis::Lattice { first, step, .. } => {
                let t = (target * self.format.scale() - first as f64) / step as f64;
                let below = t.floor().clamp(lo as f64, hi as f64) as u64;
                let above = (below + 1).min(hi);
                let db = (self.coord(d, below) - target).abs();
                let da = (self.coord(d, above) - target).abs();
                if da < db {
                    above
                } else {
                    below
                }
            }
        }
    }

    /// Grid point of `node` nearest to the base and its distance, or the
    /// lower corner and zero when there is no ball.
    pub(crate) fn nearest_point(&self, node: &Node) -> (Vec<u64>, f64) {
        match &self.base {
            None => (node.lo.clone(), 0.0),
            Some(base) => {
                let idx: Vec<u64> =
                    (0..self.axes.len()).map(|d| self.nearest_index(d, node.lo[d], node.hi[d], base[d])).collect();
                let x: Vec<f64> = idx.iter().enumerate().map(|(d, &i)| self.coord(d, i)).collect();
                let dist = super::euclidean_distance(&x, base).unwrap_or(f64::INFINITY);
                (idx, dist)
            }
        }
    }

    /// Whether no grid point of `node` lies in the ball.
    pub(crate) fn outside_ball(&self, node: &Node) -> Option<(Vec<u64>, bool)> {
        let gamma = self.gamma?;
        let (idx, dist) = self.nearest_point(node);
        Some((idx, dist > gamma))
    }

    pub(crate) fn point_of(&self, idx: &[u64]) -> Vec<f64> {
        idx.iter().enumerate().map(|(d, &i)| self.coord(d, i)).collect()
    }

    pub(crate) fn node_box(&self, node: &Node) -> (Vec<f64>, Vec<f64>) {
        (self.point_of(&node.lo), self.point_of(&node.hi))
    }
}

/// Inclusive grid index ranges, one per axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Node {
    pub lo: Vec<u64>,
    pub hi: Vec<u64>,
}

impl Node {
    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }
}
