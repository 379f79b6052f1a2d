//! Incremental bounded verification of network properties.
//!
//! A property defines a search region and a violation condition. The
//! region is searched level by level: the base case looks for a violation
//! among nodes reached with at most `k` bisections, and the forward
//! condition holds once every remaining node is a single grid point. A
//! violation yields a replayable counterexample; exhaustion yields SAFE.

mod goal;
mod region;
mod search;

use serde::{Deserialize, Serialize};

use crate::ann::{ActivationTrace, Network};
use crate::coverage::{CoverConfig, CoverMethod, DistanceKind};
use crate::error::{check_len, Error, Result};
use crate::fxp::FxpFormat;
use crate::interval::{Interval, IntervalBox};
use crate::opmodel::{forward_fxp, FxpTrace};

pub use goal::{adversarial_literal, AdversarialGoal, CoverageGoal, Goal, ThresholdGoal};
pub use region::{Axis, Region};

use search::{End, Evaluator, Search};

/// Comparison used by output threshold properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = ">=", alias = "ge")]
    Ge,
    #[serde(rename = "<=", alias = "le")]
    Le,
}

impl Relation {
    pub fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Relation::Ge => value >= bound,
            Relation::Le => value <= bound,
        }
    }
}

impl std::fmt::Display for Relation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Relation::Ge => ">=",
            Relation::Le => "<=",
        })
    }
}

/// Arithmetic the network is evaluated under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    /// Bit-precise `<I,F>` operational model.
    Fixed(FxpFormat),
    /// IEEE double precision reference model.
    Float,
}

impl Semantics {
    /// Grid used to enumerate inputs: the fixed-point format itself, or
    /// `<32,32>` for the float model.
    pub fn grid_format(&self) -> FxpFormat {
        match self {
            Semantics::Fixed(f) => *f,
            Semantics::Float => FxpFormat::new(32, 32).expect("valid format"),
        }
    }
}

impl std::fmt::Display for Semantics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Semantics::Fixed(fmt) => write!(f, "fixed {fmt}"),
            Semantics::Float => f.write_str("float"),
        }
    }
}

/// An axis-aligned input box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxSpec {
    pub fn to_box(&self) -> Result<IntervalBox> {
        IntervalBox::from_bounds(&self.lo, &self.hi)
    }
}

fn default_threshold() -> f64 {
    0.5
}

fn default_d() -> f64 {
    CoverConfig::default().d
}

fn default_v() -> f64 {
    CoverConfig::default().v
}

/// No input within distance `gamma` of `base_input` is misclassified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialProperty {
    pub base_input: Vec<f64>,
    pub gamma: f64,
    pub expected_class: usize,
    #[serde(rename = "threshold_V", alias = "threshold", default = "default_threshold")]
    pub threshold: f64,
    /// Box to search; defaults to `base_input +- gamma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<BoxSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
}

/// `y[layer][neuron] relation bound` for one input or every input of a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdProperty {
    /// Zero-based network layer; defaults to the output layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<usize>,
    pub neuron: usize,
    pub relation: Relation,
    pub bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<BoxSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
}

/// No input of `region` reaches coverage `p` against `base_input`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageProperty {
    pub method: CoverMethod,
    #[serde(rename = "P", alias = "p")]
    pub p: f64,
    pub base_input: Vec<f64>,
    pub region: BoxSpec,
    #[serde(default = "default_d")]
    pub d: f64,
    #[serde(default = "default_v")]
    pub v: f64,
    #[serde(default)]
    pub distance: DistanceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
}

impl CoverageProperty {
    pub fn cover_config(&self) -> CoverConfig {
        CoverConfig { d: self.d, v: self.v, p: self.p.clamp(0.0, 1.0), distance: self.distance }
    }
}

/// A verification query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Property {
    AdversarialRobustness(AdversarialProperty),
    OutputThreshold(ThresholdProperty),
    CoverageGoal(CoverageProperty),
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite, got {x}")))
    }
}

fn all_finite(name: &str, xs: &[f64]) -> Result<()> {
    xs.iter().try_for_each(|&x| finite(name, x))
}

impl Property {
    /// Checks the property against the network's shape.
    pub fn validate(&self, net: &Network) -> Result<()> {
        match self {
            Property::AdversarialRobustness(p) => {
                check_len("base input", net.input_size(), p.base_input.len())?;
                all_finite("base input", &p.base_input)?;
                if !(p.gamma >= 0.0 && p.gamma.is_finite()) {
                    return Err(Error::InvalidArgument(format!("gamma must be finite and nonnegative, got {}", p.gamma)));
                }
                finite("threshold V", p.threshold)?;
                if p.expected_class >= net.output_size() {
                    return Err(Error::InvalidArgument(format!(
                        "expected class {} out of range for {} outputs",
                        p.expected_class,
                        net.output_size()
                    )));
                }
                if let Some(r) = &p.region {
                    check_len("region", net.input_size(), r.to_box()?.dims())?;
                }
            }
            Property::OutputThreshold(p) => {
                let layer = p.layer.unwrap_or(net.layers().len() - 1);
                let Some(l) = net.layers().get(layer) else {
                    return Err(Error::InvalidArgument(format!("layer {layer} out of range")));
                };
                if p.neuron >= l.width() {
                    return Err(Error::InvalidArgument(format!(
                        "neuron {} out of range for layer {layer} of width {}",
                        p.neuron,
                        l.width()
                    )));
                }
                finite("bound", p.bound)?;
                match (&p.input, &p.region) {
                    (Some(x), None) => {
                        check_len("input", net.input_size(), x.len())?;
                        all_finite("input", x)?;
                    }
                    (None, Some(r)) => check_len("region", net.input_size(), r.to_box()?.dims())?,
                    _ => {
                        return Err(Error::InvalidArgument(
                            "output threshold needs exactly one of input or region".into(),
                        ))
                    }
                }
            }
            Property::CoverageGoal(p) => {
                check_len("base input", net.input_size(), p.base_input.len())?;
                all_finite("base input", &p.base_input)?;
                check_len("region", net.input_size(), p.region.to_box()?.dims())?;
                if !(p.p >= 0.0 && p.p.is_finite()) {
                    return Err(Error::InvalidArgument(format!("P must be finite and nonnegative, got {}", p.p)));
                }
                p.cover_config().validate()?;
            }
        }
        Ok(())
    }

    fn grid_step(&self) -> Option<f64> {
        match self {
            Property::AdversarialRobustness(p) => p.grid_step,
            Property::OutputThreshold(p) => p.grid_step,
            Property::CoverageGoal(p) => p.grid_step,
        }
    }

    /// The search region on the grid of `format`. `step` overrides the
    /// property's own grid step.
    pub fn region(&self, format: FxpFormat, step: Option<f64>) -> Result<Region> {
        let step = step.or(self.grid_step());
        match self {
            Property::AdversarialRobustness(p) => {
                let bx = match &p.region {
                    Some(r) => r.to_box()?,
                    None => {
                        let lo: Vec<f64> = p.base_input.iter().map(|b| b - p.gamma).collect();
                        let hi: Vec<f64> = p.base_input.iter().map(|b| b + p.gamma).collect();
                        IntervalBox::from_bounds(&lo, &hi)?
                    }
                };
                Region::new(&bx, format, step)?.with_ball(p.base_input.clone(), p.gamma)
            }
            Property::OutputThreshold(p) => match (&p.input, &p.region) {
                (Some(x), _) => Region::point(x, format),
                (None, Some(r)) => Region::new(&r.to_box()?, format, step),
                (None, None) => Err(Error::InvalidArgument("output threshold needs an input or a region".into())),
            },
            Property::CoverageGoal(p) => Region::new(&p.region.to_box()?, format, step),
        }
    }

    /// Violation condition under `semantics`.
    pub fn goal(&self, net: &Network, semantics: Semantics) -> Result<Box<dyn Goal>> {
        self.validate(net)?;
        Ok(match self {
            Property::AdversarialRobustness(p) => {
                Box::new(AdversarialGoal { expected_class: p.expected_class, threshold: p.threshold })
            }
            Property::OutputThreshold(p) => Box::new(ThresholdGoal {
                layer: p.layer.unwrap_or(net.layers().len() - 1),
                neuron: p.neuron,
                relation: p.relation,
                bound: p.bound,
            }),
            Property::CoverageGoal(p) => {
                let base = Evaluator::new(net, semantics).trace(&p.base_input)?;
                Box::new(CoverageGoal {
                    method: p.method,
                    config: p.cover_config(),
                    p: p.p,
                    base_potentials: base.potentials,
                })
            }
        })
    }

    fn base_input(&self) -> Option<&[f64]> {
        match self {
            Property::AdversarialRobustness(p) => Some(&p.base_input),
            Property::CoverageGoal(p) => Some(&p.base_input),
            Property::OutputThreshold(_) => None,
        }
    }
}

/// Search limits and options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    /// Deepest level (number of bisections) explored before giving up.
    pub max_depth: usize,
    /// Maximum number of nodes explored.
    pub budget: u64,
    /// Levels per reported iteration.
    pub granularity: usize,
    /// Prune and decide nodes with interval bounds.
    pub use_invariants: bool,
    /// Process each level on the rayon pool.
    pub parallel: bool,
    /// Overrides the property's grid step.
    pub grid_step: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { max_depth: 4096, budget: 10_000_000, granularity: 1, use_invariants: true, parallel: false, grid_step: None }
    }
}

/// Search counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes_explored: u64,
    pub pruned_by_invariants: u64,
    pub pruned_by_distance: u64,
    pub evaluations: u64,
    pub bound_checks: u64,
    /// Deepest level reached.
    pub depth: usize,
    pub iterations: usize,
    pub elapsed_ms: f64,
}

impl SearchStats {
    /// The counters without wall-clock time.
    pub fn deterministic(&self) -> SearchStats {
        SearchStats { elapsed_ms: 0.0, ..*self }
    }
}

/// A concrete input violating a property, with its traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    /// Input before normalization.
    pub input: Vec<f64>,
    /// Quantized normalized input under fixed-point semantics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_raw: Option<Vec<i64>>,
    pub semantics: Semantics,
    pub property: Property,
    /// Euclidean distance to the property's base input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fxp_trace: Option<FxpTrace>,
    pub float_trace: ActivationTrace,
}

impl Counterexample {
    /// Trace under the counterexample's semantics.
    pub fn trace(&self) -> ActivationTrace {
        match &self.fxp_trace {
            Some(t) => t.to_activation_trace(),
            None => self.float_trace.clone(),
        }
    }
}

/// Result of a verification query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum Outcome {
    #[serde(rename = "SAFE")]
    Safe,
    #[serde(rename = "UNSAFE")]
    Unsafe { counterexample: Box<Counterexample> },
    #[serde(rename = "UNKNOWN")]
    Unknown { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    #[serde(flatten)]
    pub outcome: Outcome,
    pub semantics: Semantics,
    pub stats: SearchStats,
}

impl Verdict {
    pub fn is_safe(&self) -> bool {
        matches!(self.outcome, Outcome::Safe)
    }

    pub fn is_unsafe(&self) -> bool {
        matches!(self.outcome, Outcome::Unsafe { .. })
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match &self.outcome {
            Outcome::Unsafe { counterexample } => Some(counterexample),
            _ => None,
        }
    }

    /// 0 for SAFE, 1 for UNSAFE, 2 for UNKNOWN.
    pub fn exit_code(&self) -> i32 {
        match self.outcome {
            Outcome::Safe => 0,
            Outcome::Unsafe { .. } => 1,
            Outcome::Unknown { .. } => 2,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.outcome {
            Outcome::Safe => "SAFE",
            Outcome::Unsafe { .. } => "UNSAFE",
            Outcome::Unknown { .. } => "UNKNOWN",
        }
    }
}

/// Euclidean distance between two inputs.
pub fn euclidean_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    check_len("distance operands", p.len(), q.len())?;
    let mut s = 0.0;
    for (a, b) in p.iter().zip(q) {
        s += (a - b) * (a - b);
    }
    Ok(s.sqrt())
}

/// Whether `x` lies in the region's box and ball.
pub fn in_region(x: &[f64], region: &Region) -> bool {
    region.contains(x)
}

/// Whether `trace` is misclassified for an adversarial robustness property.
pub fn check_adversarial(trace: &ActivationTrace, property: &Property) -> Result<bool> {
    match property {
        Property::AdversarialRobustness(p) => {
            if p.expected_class >= trace.scores().len() {
                return Err(Error::InvalidArgument("expected class out of range".into()));
            }
            Ok(adversarial_literal(trace.scores(), p.expected_class, p.threshold))
        }
        _ => Err(Error::InvalidArgument("not an adversarial robustness property".into())),
    }
}

fn check_grid(region: &Region, semantics: Semantics) -> Result<()> {
    if let Semantics::Fixed(f) = semantics {
        let g = region.format();
        if (g.int_bits(), g.frac_bits()) != (f.int_bits(), f.frac_bits()) {
            return Err(Error::InvalidArgument(format!("region grid {g} does not match semantics {f}")));
        }
    }
    Ok(())
}

fn counterexample(
    net: &Network,
    eval: &Evaluator,
    property: &Property,
    semantics: Semantics,
    x: Vec<f64>,
) -> Result<Counterexample> {
    let input_raw = eval.raw_input(&x)?;
    let fxp_trace = match semantics {
        Semantics::Fixed(f) => Some(forward_fxp(net, &x, f)?),
        Semantics::Float => None,
    };
    let distance = property.base_input().map(|b| euclidean_distance(&x, b)).transpose()?;
    Ok(Counterexample {
        float_trace: crate::ann::forward_float(net, &x)?,
        input: x,
        input_raw,
        semantics,
        property: property.clone(),
        distance,
        fxp_trace,
    })
}

fn run_search<'a>(
    net: &'a Network,
    property: &Property,
    region: &Region,
    semantics: Semantics,
    config: &VerifyConfig,
    max_level: usize,
) -> Result<(End, SearchStats, Evaluator<'a>)> {
    property.validate(net)?;
    check_len("region", net.input_size(), region.dims())?;
    check_grid(region, semantics)?;
    let goal = property.goal(net, semantics)?;
    let eval = Evaluator::new(net, semantics);
    let mut stats = SearchStats::default();
    let search = Search { region, eval: &eval, goal: goal.as_ref(), use_invariants: config.use_invariants };
    let end = search.run(config, max_level, &mut stats)?;
    Ok((end, stats, eval))
}

/// Looks for a violation among nodes reachable with at most `k` bisections.
pub fn base_case(
    net: &Network,
    property: &Property,
    region: &Region,
    k: usize,
    semantics: Semantics,
    use_invariants: bool,
) -> Result<Option<Counterexample>> {
    let config = VerifyConfig { use_invariants, budget: u64::MAX, ..VerifyConfig::default() };
    let (end, _, eval) = run_search(net, property, region, semantics, &config, k)?;
    match end {
        End::Witness(x) => Ok(Some(counterexample(net, &eval, property, semantics, x)?)),
        _ => Ok(None),
    }
}

/// Whether every node left after `k` bisections, and inside the ball, is a
/// single grid point.
pub fn forward_condition(region: &Region, k: usize) -> bool {
    search::resolved_at(region, k)
}

/// Runs the search until a witness is found, the region is exhausted or
/// a limit is reached.
pub fn incremental_verify(
    net: &Network,
    property: &Property,
    region: &Region,
    semantics: Semantics,
    config: &VerifyConfig,
) -> Result<Verdict> {
    if config.granularity == 0 {
        return Err(Error::InvalidArgument("granularity must be positive".into()));
    }
    let (end, stats, eval) = run_search(net, property, region, semantics, config, config.max_depth)?;
    log::debug!("search finished after {} nodes at depth {}", stats.nodes_explored, stats.depth);
    let outcome = match end {
        End::Witness(x) => {
            Outcome::Unsafe { counterexample: Box::new(counterexample(net, &eval, property, semantics, x)?) }
        }
        End::Resolved => Outcome::Safe,
        End::DepthLimit => Outcome::Unknown { reason: format!("depth limit {} reached", config.max_depth) },
        End::Budget => Outcome::Unknown { reason: format!("node budget {} exhausted", config.budget) },
    };
    Ok(Verdict { outcome, semantics, stats })
}

/// Verifies `property` over its own region.
pub fn verify(net: &Network, property: &Property, semantics: Semantics, config: &VerifyConfig) -> Result<Verdict> {
    property.validate(net)?;
    let region = property.region(semantics.grid_format(), config.grid_step)?;
    incremental_verify(net, property, &region, semantics, config)
}

/// Verifies an output threshold property.
pub fn check_output_property(
    net: &Network,
    property: &Property,
    semantics: Semantics,
    config: &VerifyConfig,
) -> Result<Verdict> {
    match property {
        Property::OutputThreshold(_) => verify(net, property, semantics, config),
        _ => Err(Error::InvalidArgument("not an output threshold property".into())),
    }
}

/// Searches for an input reaching the coverage goal. UNSAFE means such an
/// input exists and is returned.
pub fn coverage_goal_search(
    net: &Network,
    property: &Property,
    semantics: Semantics,
    config: &VerifyConfig,
) -> Result<Verdict> {
    match property {
        Property::CoverageGoal(_) => verify(net, property, semantics, config),
        _ => Err(Error::InvalidArgument("not a coverage goal property".into())),
    }
}

/// Recomputes a counterexample's trace and checks that it is bit-identical
/// and still violates the property.
pub fn replay(net: &Network, cex: &Counterexample) -> Result<bool> {
    let goal = cex.property.goal(net, cex.semantics)?;
    let region = cex.property.region(cex.semantics.grid_format(), None);
    let inside = match region {
        Ok(r) => r.contains(&cex.input),
        Err(_) => false,
    };
    let trace = match cex.semantics {
        Semantics::Fixed(f) => {
            let t = forward_fxp(net, &cex.input, f)?;
            if cex.fxp_trace.as_ref() != Some(&t) {
                return Ok(false);
            }
            t.to_activation_trace()
        }
        Semantics::Float => {
            let t = crate::ann::forward_float(net, &cex.input)?;
            if t != cex.float_trace {
                return Ok(false);
            }
            t
        }
    };
    Ok(inside && goal.violated(&trace))
}

/// Real intervals of a region's box.
pub fn region_intervals(region: &Region) -> Vec<Interval> {
    region.bounds().intervals().to_vec()
}
