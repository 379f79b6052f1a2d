//! Property checks the search evaluates on concrete traces and on bounds.

use crate::ann::ActivationTrace;
use crate::coverage::{coverage_at_least_bounds, coverage_ratio, CoverConfig, CoverMethod, Tri};
use crate::interval::{Interval, LayerBounds};

use super::Relation;

/// A violation condition over network traces.
pub trait Goal: Sync {
    /// Whether a concrete trace violates the property.
    fn violated(&self, trace: &ActivationTrace) -> bool;

    /// `True` when every trace inside `bounds` violates, `False` when none
    /// does, `Unknown` otherwise.
    fn violated_bounds(&self, bounds: &LayerBounds) -> Tri;
}

/// The misclassification literal: the expected output is below `V` while
/// some other output reaches `V`.
#[derive(Debug, Clone)]
pub struct AdversarialGoal {
    pub expected_class: usize,
    pub threshold: f64,
}

pub fn adversarial_literal(scores: &[f64], expected_class: usize, threshold: f64) -> bool {
    scores[expected_class] < threshold
        && scores.iter().enumerate().any(|(i, &s)| i != expected_class && s >= threshold)
}

impl Goal for AdversarialGoal {
    fn violated(&self, trace: &ActivationTrace) -> bool {
        adversarial_literal(trace.scores(), self.expected_class, self.threshold)
    }

    fn violated_bounds(&self, bounds: &LayerBounds) -> Tri {
        let s = bounds.scores();
        let low = below(s[self.expected_class], self.threshold);
        let fires = s
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.expected_class)
            .fold(Tri::False, |acc, (_, &iv)| acc.or(below(iv, self.threshold).not()));
        low.and(fires)
    }
}

/// Whether every / no value in `iv` is below `t`.
fn below(iv: Interval, t: f64) -> Tri {
    if iv.hi < t {
        Tri::True
    } else if iv.lo >= t {
        Tri::False
    } else {
        Tri::Unknown
    }
}

/// `y[layer][neuron] relation bound` must hold.
#[derive(Debug, Clone)]
pub struct ThresholdGoal {
    pub layer: usize,
    pub neuron: usize,
    pub relation: Relation,
    pub bound: f64,
}

impl Goal for ThresholdGoal {
    fn violated(&self, trace: &ActivationTrace) -> bool {
        !self.relation.holds(trace.outputs[self.layer][self.neuron], self.bound)
    }

    fn violated_bounds(&self, bounds: &LayerBounds) -> Tri {
        let iv = bounds.outputs[self.layer][self.neuron];
        let (all_hold, none_hold) = match self.relation {
            Relation::Ge => (iv.lo >= self.bound, iv.hi < self.bound),
            Relation::Le => (iv.hi <= self.bound, iv.lo > self.bound),
        };
        if all_hold {
            Tri::False
        } else if none_hold {
            Tri::True
        } else {
            Tri::Unknown
        }
    }
}

/// Coverage between a fixed base input and the searched input reaches `p`.
#[derive(Debug, Clone)]
pub struct CoverageGoal {
    pub method: CoverMethod,
    pub config: CoverConfig,
    pub p: f64,
    pub base_potentials: Vec<Vec<f64>>,
}

impl Goal for CoverageGoal {
    fn violated(&self, trace: &ActivationTrace) -> bool {
        coverage_ratio(self.method, &self.config, &self.base_potentials, &trace.potentials)
            .map(|r| r >= self.p)
            .unwrap_or(false)
    }

    fn violated_bounds(&self, bounds: &LayerBounds) -> Tri {
        coverage_at_least_bounds(self.method, &self.config, self.p, &self.base_potentials, &bounds.potentials)
    }
}
