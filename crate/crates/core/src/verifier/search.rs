//! Level-by-level branch and bound over the grid of a [`Region`].
//!
//! Level `k` holds the nodes reached after `k` bisections. Each node is
//! dropped when no grid point of it lies in the ball, evaluated when it is a
//! single point, checked against interval bounds when invariants are on, and
//! otherwise split. A witness ends the search; an empty next level means the
//! region is fully resolved.

use std::time::Instant;

use rayon::prelude::*;

use crate::ann::{forward_float, ActivationTrace, Network};
use crate::coverage::Tri;
use crate::error::Result;
use crate::interval::{propagate_network, propagate_network_fxp, Interval, IntervalBox, LayerBounds};
use crate::opmodel::QuantizedNetwork;

use super::goal::Goal;
use super::region::{Node, Region};
use super::{SearchStats, Semantics, VerifyConfig};

/// Forward passes and bounds under one semantics.
pub(crate) enum Evaluator<'a> {
    Float(&'a Network),
    Fixed { net: &'a Network, q: QuantizedNetwork },
}

impl<'a> Evaluator<'a> {
    pub fn new(net: &'a Network, semantics: Semantics) -> Self {
        match semantics {
            Semantics::Float => Evaluator::Float(net),
            Semantics::Fixed(fmt) => Evaluator::Fixed { net, q: QuantizedNetwork::new(net, fmt) },
        }
    }

    pub fn raw_input(&self, x: &[f64]) -> Result<Option<Vec<i64>>> {
        match self {
            Evaluator::Float(_) => Ok(None),
            Evaluator::Fixed { net, q } => Ok(Some(q.quantize_input(&net.prepare_input(x)?)?)),
        }
    }

    pub fn trace(&self, x: &[f64]) -> Result<ActivationTrace> {
        match self {
            Evaluator::Float(net) => forward_float(net, x),
            Evaluator::Fixed { net, q } => {
                let raw = q.quantize_input(&net.prepare_input(x)?)?;
                Ok(q.trace(&raw)?.to_activation_trace())
            }
        }
    }

    pub fn bounds(&self, lo: &[f64], hi: &[f64]) -> Result<LayerBounds> {
        match self {
            Evaluator::Float(net) => propagate_network(net, &IntervalBox::from_bounds(lo, hi)?),
            Evaluator::Fixed { net, q } => {
                let a = net.prepare_input(lo)?;
                let b = net.prepare_input(hi)?;
                let (l, h): (Vec<f64>, Vec<f64>) = a.iter().zip(&b).map(|(&x, &y)| (x.min(y), x.max(y))).unzip();
                let raw = propagate_network_fxp(q, &q.quantize_input(&l)?, &q.quantize_input(&h)?)?;
                Ok(raw.to_layer_bounds())
            }
        }
    }
}

enum Step {
    Witness(Vec<f64>),
    Split(Node, Node),
    Resolved,
    PrunedDistance,
    PrunedBounds,
}

struct Processed {
    step: Step,
    evaluations: u64,
    bound_checks: u64,
}

pub(crate) enum End {
    Witness(Vec<f64>),
    Resolved,
    DepthLimit,
    Budget,
}

pub(crate) struct Search<'a> {
    pub region: &'a Region,
    pub eval: &'a Evaluator<'a>,
    pub goal: &'a dyn Goal,
    pub use_invariants: bool,
}

impl Search<'_> {
    fn process(&self, node: &Node) -> Result<Processed> {
        let mut out = Processed { step: Step::Resolved, evaluations: 0, bound_checks: 0 };
        let near = match self.region.outside_ball(node) {
            Some((_, true)) => {
                out.step = Step::PrunedDistance;
                return Ok(out);
            }
            Some((idx, false)) => idx,
            None => node.lo.clone(),
        };
        if node.is_point() {
            let x = self.region.point_of(&node.lo);
            out.evaluations = 1;
            if self.goal.violated(&self.eval.trace(&x)?) {
                out.step = Step::Witness(x);
            }
            return Ok(out);
        }
        if self.use_invariants {
            let (lo, hi) = self.region.node_box(node);
            out.bound_checks = 1;
            match self.goal.violated_bounds(&self.eval.bounds(&lo, &hi)?) {
                Tri::False => {
                    out.step = Step::PrunedBounds;
                    return Ok(out);
                }
                Tri::True => {
                    let x = self.region.point_of(&near);
                    out.evaluations = 1;
                    if self.goal.violated(&self.eval.trace(&x)?) {
                        out.step = Step::Witness(x);
                        return Ok(out);
                    }
                }
                Tri::Unknown => {}
            }
        }
        let (a, b) = self.region.split(node).expect("non-point node splits");
        out.step = Step::Split(a, b);
        Ok(out)
    }

    fn absorb(stats: &mut SearchStats, p: &Processed) {
        stats.nodes_explored += 1;
        stats.evaluations += p.evaluations;
        stats.bound_checks += p.bound_checks;
        match p.step {
            Step::PrunedDistance => stats.pruned_by_distance += 1,
            Step::PrunedBounds => stats.pruned_by_invariants += 1,
            _ => {}
        }
    }

    /// Explores levels `0..=max_level` (or until resolved / limits hit).
    pub fn run(&self, config: &VerifyConfig, max_level: usize, stats: &mut SearchStats) -> Result<End> {
        let start = Instant::now();
        let mut frontier = vec![self.region.root()];
        let mut level = 0usize;
        let end = loop {
            stats.depth = level;
            stats.iterations = level / config.granularity.max(1) + 1;
            let mut next = Vec::new();
            let mut witness = None;
            if config.parallel {
                if stats.nodes_explored + frontier.len() as u64 > config.budget {
                    break End::Budget;
                }
                let results = frontier.par_iter().map(|n| self.process(n)).collect::<Vec<_>>();
                for r in results {
                    let p = r?;
                    Self::absorb(stats, &p);
                    match p.step {
                        Step::Witness(x) => {
                            witness = Some(x);
                            break;
                        }
                        Step::Split(a, b) => next.extend([a, b]),
                        _ => {}
                    }
                }
            } else {
                for n in &frontier {
                    if stats.nodes_explored >= config.budget {
                        stats.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
                        return Ok(End::Budget);
                    }
                    let p = self.process(n)?;
                    Self::absorb(stats, &p);
                    match p.step {
                        Step::Witness(x) => {
                            witness = Some(x);
                            break;
                        }
                        Step::Split(a, b) => next.extend([a, b]),
                        _ => {}
                    }
                }
            }
            if let Some(x) = witness {
                break End::Witness(x);
            }
            if next.is_empty() {
                break End::Resolved;
            }
            if level >= max_level {
                break End::DepthLimit;
            }
            frontier = next;
            level += 1;
        };
        stats.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(end)
    }
}

/// Whether every node left after `k` bisections is a single grid point or
/// lies outside the ball.
pub(crate) fn resolved_at(region: &Region, k: usize) -> bool {
    let mut frontier = vec![region.root()];
    for _ in 0..k {
        let mut next = Vec::new();
        for n in &frontier {
            if matches!(region.outside_ball(n), Some((_, true))) {
                continue;
            }
            if let Some((a, b)) = region.split(n) {
                next.extend([a, b]);
            }
        }
        frontier = next;
    }
    frontier.iter().all(|n| n.is_point() || matches!(region.outside_ball(n), Some((_, true))))
}

/// Bounds of a node as real intervals, for reporting.
#[allow(dead_code)]
pub(crate) fn node_intervals(region: &Region, node: &Node) -> Vec<Interval> {
    let (lo, hi) = region.node_box(node);
    lo.into_iter().zip(hi).map(|(lo, hi)| Interval { lo, hi }).collect()
}
