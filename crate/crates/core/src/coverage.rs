//! Sign/value MC/DC-style coverage of neuron pairs in consecutive layers.
//!
//! All predicates read activation potentials `u`, indexed `[layer][neuron]`,
//! of two inputs `w1` and `w2`:
//!
//! * `sc(n)`: the sign of `u(n)` differs (`sign(x) = 1` iff `x >= 0`).
//! * `vc(n)`: no sign change and `g(u1, u2)`, where `g(a, b)` holds iff
//!   `max(|a|,|b|) >= d * min(|a|,|b|)` and not both are zero.
//! * `dc(l)`: no neuron of layer `l` changes sign and every neuron moves by
//!   more than `v` (or, with [`DistanceKind::Euclidean`], the layer moves by
//!   more than `v` in Euclidean distance).
//!
//! The four methods combine these over a pair `(n_{i,l}, n_{k,l+1})`:
//! SS = sc(i) and sc(k) with i the only sign change in `l`; SV = the same
//! with vc(k); DS = dc(l) and sc(k); DV = dc(l) and vc(k).
//!
//! Coverage counts neurons. For SS and SV both ends of every covered pair
//! count; for DS and DV, whose condition on layer `l` is layer-wide, only
//! the downstream neuron `n_{k,l+1}` counts.
//!
//! The `*_bounds` functions evaluate the same predicates when the second
//! input is only known through interval bounds on its potentials, returning
//! a three-valued [`Tri`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverMethod {
    Ss,
    Sv,
    Ds,
    Dv,
}

impl CoverMethod {
    pub const ALL: [CoverMethod; 4] = [CoverMethod::Ss, CoverMethod::Ds, CoverMethod::Sv, CoverMethod::Dv];

    /// Whether only the downstream neuron of a covered pair is counted.
    pub fn counts_downstream_only(self) -> bool {
        matches!(self, CoverMethod::Ds | CoverMethod::Dv)
    }
}

impl fmt::Display for CoverMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoverMethod::Ss => "ss",
            CoverMethod::Sv => "sv",
            CoverMethod::Ds => "ds",
            CoverMethod::Dv => "dv",
        })
    }
}

impl FromStr for CoverMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ss" => Ok(CoverMethod::Ss),
            "sv" => Ok(CoverMethod::Sv),
            "ds" => Ok(CoverMethod::Ds),
            "dv" => Ok(CoverMethod::Dv),
            other => Err(format!("unknown covering method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    #[default]
    PerNeuron,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverConfig {
    pub d: f64,
    pub v: f64,
    pub p: f64,
    pub distance: DistanceKind,
}

impl Default for CoverConfig {
    fn default() -> Self {
        Self { d: 1.0, v: 0.1, p: 0.8, distance: DistanceKind::PerNeuron }
    }
}

impl CoverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::InvalidArgument(format!("d must be positive, got {}", self.d)));
        }
        if !(self.v >= 0.0 && self.v.is_finite()) {
            return Err(Error::InvalidArgument(format!("v must be nonnegative, got {}", self.v)));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidArgument(format!("P must lie in [0, 1], got {}", self.p)));
        }
        Ok(())
    }
}

/// Neuron `index` of network layer `layer`, both zero-based. Displayed
/// one-based as `n{index},{layer}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NeuronId {
    pub layer: usize,
    pub index: usize,
}

impl NeuronId {
    pub fn new(layer: usize, index: usize) -> Self {
        Self { layer, index }
    }
}

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{},{}", self.index + 1, self.layer + 1)
    }
}

pub fn sign(x: f64) -> u8 {
    u8::from(x >= 0.0)
}

fn value(t: &[Vec<f64>], n: NeuronId) -> f64 {
    t[n.layer][n.index]
}

fn check_shapes(t1: &[Vec<f64>], t2: &[Vec<f64>]) -> Result<()> {
    let same = t1.len() == t2.len() && t1.iter().zip(t2).all(|(a, b)| a.len() == b.len());
    if !same {
        return Err(Error::InvalidArgument("potential traces have different shapes".into()));
    }
    Ok(())
}

/// `max(|a|,|b|) >= d * min(|a|,|b|)`, false when both are zero.
pub fn g(a: f64, b: f64, d: f64) -> bool {
    let (a, b) = (a.abs(), b.abs());
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    hi > 0.0 && hi >= d * lo
}

pub fn sc(n: NeuronId, t1: &[Vec<f64>], t2: &[Vec<f64>]) -> bool {
    sign(value(t1, n)) != sign(value(t2, n))
}

pub fn vc(cfg: &CoverConfig, n: NeuronId, t1: &[Vec<f64>], t2: &[Vec<f64>]) -> bool {
    !sc(n, t1, t2) && g(value(t1, n), value(t2, n), cfg.d)
}

pub fn dc(cfg: &CoverConfig, layer: usize, t1: &[Vec<f64>], t2: &[Vec<f64>]) -> bool {
    let (a, b) = (&t1[layer], &t2[layer]);
    let no_sign = a.iter().zip(b).all(|(x, y)| sign(*x) == sign(*y));
    no_sign
        && match cfg.distance {
            DistanceKind::PerNeuron => a.iter().zip(b).all(|(x, y)| (x - y).abs() > cfg.v),
            DistanceKind::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt() > cfg.v,
        }
}

fn only_sign_change(i: usize, layer: usize, t1: &[Vec<f64>], t2: &[Vec<f64>]) -> bool {
    (0..t1[layer].len()).all(|j| sc(NeuronId::new(layer, j), t1, t2) == (j == i))
}

pub fn ss_cover(up: NeuronId, down: NeuronId, t1: &[Vec<f64>], t2: &[Vec<f64>]) -> bool {
    down.layer == up.layer + 1 && only_sign_change(up.index, up.layer, t1, t2) && sc(down, t1, t2)
}

pub fn sv_cover(cfg: &CoverConfig, up: NeuronId, down: NeuronId, t1: &[Vec<f64>], t2: &[Vec<f64>]) -> bool {
    down.layer == up.layer + 1 && only_sign_change(up.index, up.layer, t1, t2) && vc(cfg, down, t1, t2)
}

pub fn ds_cover(cfg: &CoverConfig, down: NeuronId, t1: &[Vec<f64>], t2: &[Vec<f64>]) -> bool {
    down.layer >= 1 && dc(cfg, down.layer - 1, t1, t2) && sc(down, t1, t2)
}

pub fn dv_cover(cfg: &CoverConfig, down: NeuronId, t1: &[Vec<f64>], t2: &[Vec<f64>]) -> bool {
    down.layer >= 1 && dc(cfg, down.layer - 1, t1, t2) && vc(cfg, down, t1, t2)
}

/// Whether the pair `(up, down)` is covered by `method`. DS and DV pairs
/// are covered for every `up` in the upstream layer at once.
pub fn pair_covered(
    method: CoverMethod,
    cfg: &CoverConfig,
    up: NeuronId,
    down: NeuronId,
    t1: &[Vec<f64>],
    t2: &[Vec<f64>],
) -> bool {
    if down.layer != up.layer + 1 {
        return false;
    }
    match method {
        CoverMethod::Ss => ss_cover(up, down, t1, t2),
        CoverMethod::Sv => sv_cover(cfg, up, down, t1, t2),
        CoverMethod::Ds => ds_cover(cfg, down, t1, t2),
        CoverMethod::Dv => dv_cover(cfg, down, t1, t2),
    }
}

/// All covered pairs for one input pair, in layer-major order.
pub fn covered_pairs(
    method: CoverMethod,
    cfg: &CoverConfig,
    t1: &[Vec<f64>],
    t2: &[Vec<f64>],
) -> Result<Vec<(NeuronId, NeuronId)>> {
    check_shapes(t1, t2)?;
    let mut out = Vec::new();
    for l in 0..t1.len().saturating_sub(1) {
        for i in 0..t1[l].len() {
            for k in 0..t1[l + 1].len() {
                let (up, down) = (NeuronId::new(l, i), NeuronId::new(l + 1, k));
                if pair_covered(method, cfg, up, down, t1, t2) {
                    out.push((up, down));
                }
            }
        }
    }
    Ok(out)
}

/// Neurons credited by a set of covered pairs under `method`.
pub fn credited_neurons(method: CoverMethod, pairs: &[(NeuronId, NeuronId)]) -> BTreeSet<NeuronId> {
    let mut set = BTreeSet::new();
    for &(up, down) in pairs {
        if !method.counts_downstream_only() {
            set.insert(up);
        }
        set.insert(down);
    }
    set
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub method: CoverMethod,
    pub config: CoverConfig,
    pub covered_pairs: Vec<(NeuronId, NeuronId)>,
    pub covered_neurons: Vec<NeuronId>,
    pub total_neurons: usize,
    pub ratio: f64,
    pub literal: bool,
}

/// Coverage over one or more input pairs, each given as two potential
/// traces. Pairs covered by any input pair are merged.
pub fn coverage_report(
    method: CoverMethod,
    trace_pairs: &[(&[Vec<f64>], &[Vec<f64>])],
    cfg: &CoverConfig,
) -> Result<CoverageReport> {
    cfg.validate()?;
    let total_neurons = trace_pairs.first().map_or(0, |(t, _)| t.iter().map(Vec::len).sum());
    let mut pairs = BTreeSet::new();
    for (t1, t2) in trace_pairs {
        if t1.iter().map(Vec::len).sum::<usize>() != total_neurons {
            return Err(Error::InvalidArgument("potential traces have different shapes".into()));
        }
        pairs.extend(covered_pairs(method, cfg, t1, t2)?);
    }
    let covered_pairs: Vec<_> = pairs.into_iter().collect();
    let covered_neurons: Vec<_> = credited_neurons(method, &covered_pairs).into_iter().collect();
    let ratio = ratio(covered_neurons.len(), total_neurons);
    Ok(CoverageReport {
        method,
        config: *cfg,
        covered_pairs,
        covered_neurons,
        total_neurons,
        ratio,
        literal: ratio >= cfg.p,
    })
}

fn ratio(covered: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        covered as f64 / total as f64
    }
}

/// Fraction of neurons credited for a single input pair.
pub fn coverage_ratio(method: CoverMethod, cfg: &CoverConfig, t1: &[Vec<f64>], t2: &[Vec<f64>]) -> Result<f64> {
    let pairs = covered_pairs(method, cfg, t1, t2)?;
    Ok(ratio(credited_neurons(method, &pairs).len(), t1.iter().map(Vec::len).sum()))
}

/// Kleene three-valued truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    False,
    Unknown,
    True,
}

impl Tri {
    pub fn and(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::False, _) | (_, Tri::False) => Tri::False,
            (Tri::True, Tri::True) => Tri::True,
            _ => Tri::Unknown,
        }
    }

    pub fn or(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::True, _) | (_, Tri::True) => Tri::True,
            (Tri::False, Tri::False) => Tri::False,
            _ => Tri::Unknown,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Tri {
        match self {
            Tri::False => Tri::True,
            Tri::True => Tri::False,
            Tri::Unknown => Tri::Unknown,
        }
    }

    /// True if `all` holds, false if `any` fails to hold, otherwise unknown.
    fn from_bounds(all: bool, any: bool) -> Tri {
        if all {
            Tri::True
        } else if !any {
            Tri::False
        } else {
            Tri::Unknown
        }
    }
}

impl From<bool> for Tri {
    fn from(b: bool) -> Tri {
        if b {
            Tri::True
        } else {
            Tri::False
        }
    }
}

fn sign_bounds(b: Interval) -> Option<u8> {
    if b.lo >= 0.0 {
        Some(1)
    } else if b.hi < 0.0 {
        Some(0)
    } else {
        None
    }
}

fn sc3(a: f64, b: Interval) -> Tri {
    sign_bounds(b).map_or(Tri::Unknown, |s| Tri::from(s != sign(a)))
}

/// `g(a, x)` for every / some `x` in `b`. The predicate is monotone in `|x|`
/// on each side of `|a|`, so checking the extreme magnitudes suffices.
fn g3(a: f64, b: Interval, d: f64) -> Tri {
    let aa = a.abs();
    let (m, big) = if b.lo <= 0.0 && 0.0 <= b.hi {
        (0.0, (-b.lo).max(b.hi))
    } else {
        (b.lo.abs().min(b.hi.abs()), b.lo.abs().max(b.hi.abs()))
    };
    let all = (big < aa || g(aa, m.max(aa), d)) && (m > aa || g(aa, big.min(aa), d));
    let any = (big >= aa && g(aa, big, d)) || (m <= aa && g(aa, m, d));
    Tri::from_bounds(all, any)
}

fn vc3(cfg: &CoverConfig, a: f64, b: Interval) -> Tri {
    sc3(a, b).not().and(g3(a, b, cfg.d))
}

fn dist_range(a: f64, b: Interval) -> (f64, f64) {
    let near = if b.contains(a) { 0.0 } else { (b.lo - a).abs().min((b.hi - a).abs()) };
    (near, (b.lo - a).abs().max((b.hi - a).abs()))
}

fn dc3(cfg: &CoverConfig, a: &[f64], b: &[Interval]) -> Tri {
    let no_sign = a.iter().zip(b).fold(Tri::True, |acc, (&x, &y)| acc.and(sc3(x, y).not()));
    let moved = match cfg.distance {
        DistanceKind::PerNeuron => a.iter().zip(b).fold(Tri::True, |acc, (&x, &y)| {
            let (near, far) = dist_range(x, y);
            acc.and(Tri::from_bounds(near > cfg.v, far > cfg.v))
        }),
        DistanceKind::Euclidean => {
            let ranges: Vec<(f64, f64)> = a.iter().zip(b).map(|(&x, &y)| dist_range(x, y)).collect();
            let near = ranges.iter().map(|r| r.0 * r.0).sum::<f64>().sqrt();
            let far = ranges.iter().map(|r| r.1 * r.1).sum::<f64>().sqrt();
            Tri::from_bounds(near > cfg.v, far > cfg.v)
        }
    };
    no_sign.and(moved)
}

/// Three-valued [`pair_covered`] with the second input known through bounds.
pub fn pair_covered_bounds(
    method: CoverMethod,
    cfg: &CoverConfig,
    up: NeuronId,
    down: NeuronId,
    base: &[Vec<f64>],
    other: &[Vec<Interval>],
) -> Tri {
    if down.layer != up.layer + 1 {
        return Tri::False;
    }
    let (a, b) = (base[down.layer][down.index], other[down.layer][down.index]);
    let l = up.layer;
    let only = || {
        (0..base[l].len()).fold(Tri::True, |acc, j| {
            let s = sc3(base[l][j], other[l][j]);
            acc.and(if j == up.index { s } else { s.not() })
        })
    };
    match method {
        CoverMethod::Ss => only().and(sc3(a, b)),
        CoverMethod::Sv => only().and(vc3(cfg, a, b)),
        CoverMethod::Ds => dc3(cfg, &base[l], &other[l]).and(sc3(a, b)),
        CoverMethod::Dv => dc3(cfg, &base[l], &other[l]).and(vc3(cfg, a, b)),
    }
}

/// Three-valued `coverage_ratio(...) >= p`.
pub fn coverage_at_least_bounds(
    method: CoverMethod,
    cfg: &CoverConfig,
    p: f64,
    base: &[Vec<f64>],
    other: &[Vec<Interval>],
) -> Tri {
    let total: usize = base.iter().map(Vec::len).sum();
    let mut status: Vec<Vec<Tri>> = base.iter().map(|l| vec![Tri::False; l.len()]).collect();
    for l in 0..base.len().saturating_sub(1) {
        for i in 0..base[l].len() {
            for k in 0..base[l + 1].len() {
                let (up, down) = (NeuronId::new(l, i), NeuronId::new(l + 1, k));
                let c = pair_covered_bounds(method, cfg, up, down, base, other);
                if c == Tri::False {
                    continue;
                }
                if !method.counts_downstream_only() {
                    status[l][i] = status[l][i].or(c);
                }
                status[l + 1][k] = status[l + 1][k].or(c);
            }
        }
    }
    let sure = status.iter().flatten().filter(|t| **t == Tri::True).count();
    let maybe = status.iter().flatten().filter(|t| **t != Tri::False).count();
    Tri::from_bounds(ratio(sure, total) >= p, ratio(maybe, total) >= p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(k: usize, l: usize) -> NeuronId {
        NeuronId::new(l - 1, k - 1)
    }

    fn ex(i: usize) -> Vec<Vec<f64>> {
        let rows = [
            [-1.3, -1.80, -0.50, -0.79, -1.370, -1.417],
            [-0.3, -0.40, 0.10, 0.51, 0.090, 0.353],
            [-0.4, -0.54, 0.04, 0.38, -0.056, 0.176],
            [-3.3, -4.60, -1.70, -3.39, -4.290, -4.957],
        ];
        let r = rows[i - 1];
        vec![r[0..3].to_vec(), r[3..5].to_vec(), r[5..6].to_vec()]
    }

    #[test]
    fn sign_examples() {
        assert_eq!(sign(0.0), 1);
        assert_eq!(sign(-1.3), 0);
        assert_eq!(sign(0.1), 1);
    }

    #[test]
    fn sc_examples() {
        assert!(sc(n(3, 1), &ex(1), &ex(2)));
        assert!(!sc(n(1, 1), &ex(1), &ex(2)));
        let t = ex(3);
        assert!((0..3).all(|l| (0..t[l].len()).all(|k| !sc(NeuronId::new(l, k), &t, &t))));
    }

    #[test]
    fn vc_examples() {
        let cfg = CoverConfig::default();
        assert!(vc(&cfg, n(1, 3), &ex(2), &ex(3)));
        assert!(!vc(&cfg, n(3, 1), &ex(1), &ex(2)));
        let same = vec![vec![0.7]];
        assert!(vc(&cfg, n(1, 1), &same, &same));
        assert!(!g(0.0, 0.0, 1.0));
        assert!(g(0.0, 0.5, 3.0));
        assert!(g(2.0, 1.0, 2.0) && !g(2.0, 1.5, 2.0) && g(1.0, 2.0, 2.0));
    }

    #[test]
    fn dc_examples() {
        let cfg = CoverConfig { v: 0.05, ..CoverConfig::default() };
        assert!(dc(&cfg, 0, &ex(2), &ex(3)));
        assert!(!dc(&CoverConfig::default(), 0, &ex(2), &ex(3)));
        assert!(!dc(&cfg, 0, &ex(2), &ex(2)));
        assert!(!dc(&cfg, 0, &ex(1), &ex(2)));
        let euc = CoverConfig { distance: DistanceKind::Euclidean, ..CoverConfig::default() };
        assert!(dc(&euc, 0, &ex(2), &ex(3)));
    }

    #[test]
    fn worked_cover_examples() {
        let cfg = CoverConfig { v: 0.05, ..CoverConfig::default() };
        assert!(ss_cover(n(3, 1), n(1, 2), &ex(1), &ex(2)));
        assert!(ds_cover(&cfg, n(2, 2), &ex(2), &ex(3)));
        assert!(sv_cover(&cfg, n(2, 2), n(1, 3), &ex(2), &ex(3)));
        assert!(dv_cover(&cfg, n(1, 2), &ex(1), &ex(4)));
    }

    #[test]
    fn empty_and_zero_threshold_reports() {
        let t = ex(1);
        let r = coverage_report(CoverMethod::Ss, &[(&t, &t)], &CoverConfig::default()).unwrap();
        assert_eq!(r.ratio, 0.0);
        assert!(!r.literal);
        let cfg = CoverConfig { p: 0.0, ..CoverConfig::default() };
        assert!(coverage_report(CoverMethod::Ss, &[(&t, &t)], &cfg).unwrap().literal);
        let r = coverage_report(CoverMethod::Ss, &[], &CoverConfig::default()).unwrap();
        assert_eq!((r.total_neurons, r.ratio), (0, 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(CoverConfig { d: 0.0, ..CoverConfig::default() }.validate().is_err());
        assert!(CoverConfig { v: -1.0, ..CoverConfig::default() }.validate().is_err());
        assert!(CoverConfig { p: 1.5, ..CoverConfig::default() }.validate().is_err());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        assert!(covered_pairs(CoverMethod::Ss, &CoverConfig::default(), &ex(1), &[vec![1.0]]).is_err());
    }

    #[test]
    fn tri_logic() {
        use Tri::*;
        assert_eq!(True.and(Unknown), Unknown);
        assert_eq!(False.and(Unknown), False);
        assert_eq!(True.or(Unknown), True);
        assert_eq!(False.or(Unknown), Unknown);
        assert_eq!(Unknown.not(), Unknown);
    }

    #[test]
    fn neuron_display() {
        assert_eq!(n(3, 1).to_string(), "n3,1");
    }

    fn arb_traces() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let val = prop_oneof![Just(0.0), -3.0f64..3.0, Just(0.5), Just(-0.5)];
        proptest::collection::vec(1usize..4, 2..4).prop_flat_map(move |widths| {
            let t = widths.iter().map(|&w| proptest::collection::vec(val.clone(), w)).collect::<Vec<_>>();
            (t.clone(), t)
        })
    }

    fn arb_cfg() -> impl Strategy<Value = CoverConfig> {
        (prop_oneof![Just(1.0), 0.5f64..4.0], prop_oneof![Just(0.1), 0.0f64..2.0], any::<bool>()).prop_map(
            |(d, v, euc)| CoverConfig {
                d,
                v,
                p: 0.5,
                distance: if euc { DistanceKind::Euclidean } else { DistanceKind::PerNeuron },
            },
        )
    }

    fn as_points(t: &[Vec<f64>]) -> Vec<Vec<Interval>> {
        t.iter().map(|l| l.iter().map(|&x| Interval::point(x)).collect()).collect()
    }

    proptest! {
        #[test]
        fn symmetric_in_inputs((t1, t2) in arb_traces(), cfg in arb_cfg()) {
            for m in CoverMethod::ALL {
                prop_assert_eq!(
                    covered_pairs(m, &cfg, &t1, &t2).unwrap(),
                    covered_pairs(m, &cfg, &t2, &t1).unwrap()
                );
            }
        }

        #[test]
        fn sc_and_vc_exclusive((t1, t2) in arb_traces(), cfg in arb_cfg()) {
            for (l, layer) in t1.iter().enumerate() {
                for k in 0..layer.len() {
                    let id = NeuronId::new(l, k);
                    prop_assert!(!(sc(id, &t1, &t2) && vc(&cfg, id, &t1, &t2)));
                }
            }
        }

        #[test]
        fn ratio_bounded_and_monotone((t1, t2) in arb_traces(), (t3, _) in arb_traces(), cfg in arb_cfg()) {
            for m in CoverMethod::ALL {
                let one = coverage_report(m, &[(&t1, &t2)], &cfg).unwrap();
                prop_assert!(one.covered_neurons.len() <= one.total_neurons);
                prop_assert!((0.0..=1.0).contains(&one.ratio));
                prop_assert_eq!(one.literal, one.ratio >= cfg.p);
                if t3.iter().map(Vec::len).collect::<Vec<_>>() == t1.iter().map(Vec::len).collect::<Vec<_>>() {
                    let two = coverage_report(m, &[(&t1, &t2), (&t1, &t3)], &cfg).unwrap();
                    prop_assert!(two.ratio >= one.ratio);
                }
            }
        }

        #[test]
        fn bounds_route_agrees_on_points((t1, t2) in arb_traces(), cfg in arb_cfg(), p in 0.0f64..1.0) {
            let pts = as_points(&t2);
            for m in CoverMethod::ALL {
                for l in 0..t1.len() - 1 {
                    for i in 0..t1[l].len() {
                        for k in 0..t1[l + 1].len() {
                            let (up, down) = (NeuronId::new(l, i), NeuronId::new(l + 1, k));
                            let c = pair_covered(m, &cfg, up, down, &t1, &t2);
                            prop_assert_eq!(pair_covered_bounds(m, &cfg, up, down, &t1, &pts), Tri::from(c));
                        }
                    }
                }
                let r = coverage_ratio(m, &cfg, &t1, &t2).unwrap();
                prop_assert_eq!(coverage_at_least_bounds(m, &cfg, p, &t1, &pts), Tri::from(r >= p));
            }
        }

        #[test]
        fn bounds_route_is_sound(
            (t1, t2) in arb_traces(),
            cfg in arb_cfg(),
            p in 0.0f64..1.0,
            spread in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 12),
        ) {
            // Enclose t2 in random intervals and check the verdict covers it.
            let mut it = spread.iter().cycle();
            let boxes: Vec<Vec<Interval>> = t2.iter().map(|l| l.iter().map(|&x| {
                let (a, b, _) = it.next().unwrap();
                Interval { lo: x - a, hi: x + b }
            }).collect()).collect();
            let r = coverage_ratio(CoverMethod::Sv, &cfg, &t1, &t2).unwrap() >= p;
            for m in CoverMethod::ALL {
                let r = if m == CoverMethod::Sv { r } else { coverage_ratio(m, &cfg, &t1, &t2).unwrap() >= p };
                match coverage_at_least_bounds(m, &cfg, p, &t1, &boxes) {
                    Tri::True => prop_assert!(r),
                    Tri::False => prop_assert!(!r),
                    Tri::Unknown => {}
                }
            }
        }
    }
}
