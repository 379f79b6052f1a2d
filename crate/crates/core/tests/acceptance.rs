//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nnverify_core::coverage::{coverage_ratio, credited_neurons};
use nnverify_core::verifier::adversarial_literal;
use nnverify_core::vocalic::{bitmap, generate, DatasetConfig};
use nnverify_core::{
    conformance_diff, covered_pairs, euclidean_distance, forward_float, forward_fxp, parse_nnet, propagate_network,
    replay, verify, ActivationKind, AdversarialProperty, BoxSpec, CoverConfig, CoverMethod, CoverageProperty, FxpFormat,
    FxpValue, IntervalBox, Layer, Network, NeuronId, NnetOptions, Property, Relation, Rounding, Semantics,
    ThresholdProperty, VerifyConfig,
};

type Outcome = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn load(name: &str, opts: &NnetOptions) -> Network {
    parse_nnet(&std::fs::read_to_string(fixture(name)).unwrap(), opts).unwrap()
}

fn vocalic() -> Network {
    load("vocalic.nnet", &NnetOptions::all_sigmoid())
}

fn fmt(i: u32, f: u32) -> FxpFormat {
    FxpFormat::new(i, f).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took <= limit, || format!("took {took:?}, limit {limit:?}"))
}

fn phi(input: &[f64]) -> Property {
    Property::OutputThreshold(ThresholdProperty {
        layer: None,
        neuron: 0,
        relation: Relation::Ge,
        bound: 2.7,
        input: Some(input.to_vec()),
        region: None,
        grid_step: None,
    })
}

fn c1_verdict_flip() -> Outcome {
    let start = Instant::now();
    let net = load("fig5.nnet", &NnetOptions::default());
    let x = [0.749, 0.498];
    let f = forward_float(&net, &x).map_err(|e| e.to_string())?.scores()[0];
    ensure((f - 2.745).abs() <= 1e-9, || format!("float f = {f}"))?;
    let fx = forward_fxp(&net, &x, fmt(4, 6)).map_err(|e| e.to_string())?.scores()[0];
    ensure(fx < 2.7 && (fx - 2.6867).abs() <= 0.06, || format!("fixed f = {fx}"))?;
    let cfg = VerifyConfig::default();
    let float = verify(&net, &phi(&x), Semantics::Float, &cfg).map_err(|e| e.to_string())?;
    let fixed = verify(&net, &phi(&x), Semantics::Fixed(fmt(4, 6)), &cfg).map_err(|e| e.to_string())?;
    ensure(float.is_safe(), || format!("float verdict {}", float.label()))?;
    ensure(fixed.is_unsafe(), || format!("fixed verdict {}", fixed.label()))?;
    ensure(replay(&net, fixed.counterexample().unwrap()).unwrap(), || "witness does not replay".into())?;
    within(Duration::from_secs(1), start)?;
    Ok(format!("float f = {f:.9} SAFE, <4,6> f = {fx} UNSAFE"))
}

const TABLE1_INPUTS: [[f64; 2]; 4] = [[1.0, -3.0], [1.0, -1.0], [1.0, -1.2], [1.0, -7.0]];
const TABLE1: [[f64; 6]; 4] = [
    [-1.3, -1.80, -0.50, -0.79, -1.370, -1.417],
    [-0.3, -0.40, 0.10, 0.51, 0.090, 0.353],
    [-0.4, -0.54, 0.04, 0.38, -0.056, 0.176],
    [-3.3, -4.60, -1.70, -3.39, -4.290, -4.957],
];

fn fig6() -> Network {
    let opts = NnetOptions {
        hidden_activation: ActivationKind::Identity,
        output_activation: ActivationKind::Identity,
        ..NnetOptions::default()
    };
    load("fig6.nnet", &opts)
}

fn table1_traces() -> Vec<Vec<Vec<f64>>> {
    let net = fig6();
    TABLE1_INPUTS.iter().map(|x| forward_float(&net, x).unwrap().potentials).collect()
}

fn c2_table1() -> Outcome {
    let mut worst = 0.0f64;
    for (t, want) in table1_traces().iter().zip(TABLE1) {
        let got: Vec<f64> = t.iter().flatten().copied().collect();
        ensure(got.len() == 6, || "trace shape".into())?;
        for (g, w) in got.iter().zip(want) {
            worst = worst.max((g - w).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("max deviation {worst:e}"))?;
    Ok(format!("24 potentials, max deviation {worst:.1e}"))
}

fn n(k: usize, l: usize) -> NeuronId {
    NeuronId::new(l - 1, k - 1)
}

fn read_trace(name: &str) -> Vec<Vec<f64>> {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap();
    serde_json::from_value(v["potentials"].clone()).unwrap()
}

fn c3_covering_methods() -> Outcome {
    let start = Instant::now();
    let t = table1_traces();
    let cfg = CoverConfig::default();
    let ss = covered_pairs(CoverMethod::Ss, &cfg, &t[0], &t[1]).unwrap();
    ensure(ss.contains(&(n(3, 1), n(1, 2))), || format!("Ex1/Ex2 SS pairs {ss:?}"))?;
    ensure(ss.iter().all(|&(up, _)| up == n(3, 1)), || format!("Ex1/Ex2 SS pairs {ss:?}"))?;
    let dcfg = CoverConfig { v: 0.05, ..cfg };
    let ds = covered_pairs(CoverMethod::Ds, &dcfg, &t[1], &t[2]).unwrap();
    let want: Vec<_> = (1..=3).map(|k| (n(k, 1), n(2, 2))).collect();
    ensure(ds == want, || format!("Ex2/Ex3 DS pairs {ds:?}"))?;
    let sv = covered_pairs(CoverMethod::Sv, &dcfg, &t[1], &t[2]).unwrap();
    ensure(sv == vec![(n(2, 2), n(1, 3))], || format!("Ex2/Ex3 SV pairs {sv:?}"))?;

    let u = read_trace("table4_u.json");
    let noisy = read_trace("table4_noisy_u.json");
    let pairs = covered_pairs(CoverMethod::Ss, &cfg, &u, &noisy).unwrap();
    ensure(pairs == vec![(n(1, 1), n(4, 2)), (n(4, 2), n(5, 3))], || format!("Table 4 SS pairs {pairs:?}"))?;
    let credited = credited_neurons(CoverMethod::Ss, &pairs).len();
    let ratio = coverage_ratio(CoverMethod::Ss, &cfg, &u, &noisy).unwrap();
    ensure(credited == 3 && (ratio - 3.0 / 14.0).abs() < 1e-12, || format!("ratio {ratio}"))?;
    ensure(!(ratio >= 0.8), || "literal should be false at P = 0.8".into())?;
    within(Duration::from_secs(1), start)?;
    Ok(format!("Table 1 pairs match; Table 4 SS ratio {credited}/14 = {ratio:.2}, literal false"))
}

fn c4_coverage_goal() -> Outcome {
    let start = Instant::now();
    let net = load("fig5.nnet", &NnetOptions::default());
    let sem = Semantics::Fixed(fmt(8, 8));
    let mut parts = Vec::new();
    for method in CoverMethod::ALL {
        let p = Property::CoverageGoal(CoverageProperty {
            method,
            p: 0.5,
            base_input: vec![2.0, 2.0],
            region: BoxSpec { lo: vec![0.0, 0.0], hi: vec![4.0, 4.0] },
            d: 1.0,
            v: 0.1,
            distance: Default::default(),
            grid_step: None,
        });
        let v = verify(&net, &p, sem, &VerifyConfig::default()).map_err(|e| e.to_string())?;
        let want_unsafe = method == CoverMethod::Sv;
        ensure(v.is_unsafe() == want_unsafe && (v.is_safe() || v.is_unsafe()), || {
            format!("{method}: {}", v.label())
        })?;
        if let Some(cex) = v.counterexample() {
            ensure(replay(&net, cex).unwrap(), || format!("{method} witness does not replay"))?;
            parts.push(format!("{method} UNSAFE at ({}, {})", cex.input[0], cex.input[1]));
        } else {
            parts.push(format!("{method} SAFE"));
        }
    }
    let base = forward_fxp(&net, &[2.0, 2.0], fmt(8, 8)).unwrap().potentials();
    let reference = forward_fxp(&net, &[4.0, 1.3125], fmt(8, 8)).unwrap().potentials();
    let r = coverage_ratio(CoverMethod::Sv, &CoverConfig::default(), &base, &reference).unwrap();
    ensure(r >= 0.5, || format!("reference witness SV ratio {r}"))?;
    within(Duration::from_secs(60), start)?;
    Ok(format!("{}; reference witness (4, 1.3125) ratio {r:.3}", parts.join(", ")))
}

fn c5_distance() -> Outcome {
    let a = bitmap('A').unwrap();
    let o = bitmap('O').unwrap();
    let d = euclidean_distance(&a, &o).unwrap();
    ensure((d - 2.449).abs() <= 1e-3, || format!("A/O distance {d}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let len = rng.gen_range(1..=64);
        let p: Vec<f64> = (0..len).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let q: Vec<f64> = (0..len).map(|_| rng.gen_range(-100.0..100.0)).collect();
        // Exact sum of squares over rationals, then one rounding.
        let mut s = BigRational::zero();
        for (x, y) in p.iter().zip(&q) {
            let diff = BigRational::from_float(*x).unwrap() - BigRational::from_float(*y).unwrap();
            s += &diff * &diff;
        }
        let oracle = rational_to_f64(&s).sqrt();
        let got = euclidean_distance(&p, &q).unwrap();
        let rel = if oracle == 0.0 { got.abs() } else { ((got - oracle) / oracle).abs() };
        worst = worst.max(rel);
    }
    ensure(worst <= 1e-12, || format!("max relative error {worst:e}"))?;
    Ok(format!("A/O delta = {d:.6}; 1000 pairs, max relative error {worst:.1e}"))
}

fn rational_to_f64(r: &BigRational) -> f64 {
    let scale = BigInt::one() << 200u32;
    let scaled = (r * BigRational::from_integer(scale)).round().to_integer();
    scaled.to_string().parse::<f64>().unwrap() * 2f64.powi(-200)
}

fn c6_interval_soundness() -> Outcome {
    let start = Instant::now();
    let net = vocalic();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = 0usize;
    for _ in 0..100 {
        let (lo, hi): (Vec<f64>, Vec<f64>) = (0..25)
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..1.0);
                let b: f64 = rng.gen_range(0.0..1.0);
                (a.min(b), a.max(b))
            })
            .unzip();
        let bx = IntervalBox::from_bounds(&lo, &hi).unwrap();
        let bounds = propagate_network(&net, &bx).unwrap();
        for _ in 0..10_000 {
            let x: Vec<f64> = lo.iter().zip(&hi).map(|(&l, &h)| if l == h { l } else { rng.gen_range(l..=h) }).collect();
            if !bounds.contains_trace(&forward_float(&net, &x).unwrap()) {
                violations += 1;
            }
        }
    }
    ensure(violations == 0, || format!("{violations} samples escaped their bounds"))?;
    within(Duration::from_secs(60), start)?;
    Ok("100 boxes x 10^4 samples, 0 violations".into())
}

/// Independent integer model of the fixed-point forward pass.
struct Oracle {
    fmt: FxpFormat,
    layers: Vec<(Vec<Vec<i128>>, Vec<i128>, ActivationKind)>,
}

impl Oracle {
    fn new(net: &Network, fmt: FxpFormat) -> Self {
        let q = |x: f64| Self::clip(fmt, (x * fmt.scale()).floor() as i128);
        let layers = net
            .layers()
            .iter()
            .map(|l| {
                (
                    l.weights().iter().map(|r| r.iter().map(|&w| q(w)).collect()).collect(),
                    l.biases().iter().map(|&b| q(b)).collect(),
                    l.activation(),
                )
            })
            .collect();
        Self { fmt, layers }
    }

    fn clip(fmt: FxpFormat, v: i128) -> i128 {
        v.clamp(fmt.raw_min() as i128, fmt.raw_max() as i128)
    }

    fn output(&self, input: &[i128]) -> i128 {
        let f = self.fmt.frac_bits();
        let mut x = input.to_vec();
        for (w, b, act) in &self.layers {
            x = w
                .iter()
                .zip(b)
                .map(|(row, &bias)| {
                    let mut sum = 0i128;
                    for (&wi, &xi) in row.iter().zip(&x) {
                        let p = Self::clip(self.fmt, (wi * xi).div_euclid(1i128 << f));
                        sum = Self::clip(self.fmt, p + sum);
                    }
                    let u = Self::clip(self.fmt, sum + bias);
                    match act {
                        ActivationKind::Relu => u.max(0),
                        _ => u,
                    }
                })
                .collect();
        }
        x[0]
    }
}

struct Instance {
    net: Network,
    fmt: FxpFormat,
    lo: [i64; 2],
    count: [i64; 2],
    bound: f64,
}

impl Instance {
    fn property(&self) -> Property {
        let r = |i: usize| (self.fmt.real(self.lo[i]), self.fmt.real(self.lo[i] + self.count[i] - 1));
        Property::OutputThreshold(ThresholdProperty {
            layer: None,
            neuron: 0,
            relation: Relation::Le,
            bound: self.bound,
            input: None,
            region: Some(BoxSpec { lo: vec![r(0).0, r(1).0], hi: vec![r(0).1, r(1).1] }),
            grid_step: None,
        })
    }

    /// Whether some grid point violates `y <= bound`.
    fn exhaustive(&self) -> bool {
        let oracle = Oracle::new(&self.net, self.fmt);
        (0..self.count[0]).any(|i| {
            (0..self.count[1]).any(|j| {
                let y = oracle.output(&[(self.lo[0] + i) as i128, (self.lo[1] + j) as i128]);
                self.fmt.real(y as i64) > self.bound
            })
        })
    }
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let fmt = if rng.gen_bool(0.5) { fmt(4, 4) } else { fmt(8, 8) };
    let depth = rng.gen_range(1..=3);
    let mut widths = vec![2];
    for _ in 1..depth {
        widths.push(rng.gen_range(1..=4));
    }
    widths.push(1);
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(l, w)| {
            let weights = (0..w[1]).map(|_| (0..w[0]).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let biases = (0..w[1]).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let act = if l + 2 == widths.len() { ActivationKind::Identity } else { ActivationKind::Relu };
            Layer::new(weights, biases, act).unwrap()
        })
        .collect();
    let net = Network::new(layers).unwrap();
    let half = fmt.raw_max() / 2;
    let count: [i64; 2] = [rng.gen_range(2..=64), rng.gen_range(2..=64)];
    let lo = [rng.gen_range(-half..=half - count[0]), rng.gen_range(-half..=half - count[1])];
    let oracle = Oracle::new(&net, fmt);
    let mut ys: Vec<f64> = (0..count[0])
        .flat_map(|i| (0..count[1]).map(move |j| (i, j)))
        .map(|(i, j)| fmt.real(oracle.output(&[(lo[0] + i) as i128, (lo[1] + j) as i128]) as i64))
        .collect();
    ys.sort_by(f64::total_cmp);
    let (min, max) = (ys[0], ys[ys.len() - 1]);
    let bound = match rng.gen_range(0..3) {
        0 => ys[rng.gen_range(0..ys.len())],
        1 => max + rng.gen_range(0.0..=(max - min).max(0.25)),
        _ => max,
    };
    Instance { net, fmt, lo, count, bound }
}

struct SuiteResult {
    instances: usize,
    unsafe_count: usize,
    mismatches: Vec<String>,
    replay_failures: usize,
    explored_with: u64,
    explored_without: u64,
    per_instance_worse: usize,
    verdict_diffs: usize,
    elapsed: Duration,
}

fn oracle_suite() -> &'static SuiteResult {
    static SUITE: std::sync::OnceLock<SuiteResult> = std::sync::OnceLock::new();
    SUITE.get_or_init(|| {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut r = SuiteResult {
            instances: 0,
            unsafe_count: 0,
            mismatches: Vec::new(),
            replay_failures: 0,
            explored_with: 0,
            explored_without: 0,
            per_instance_worse: 0,
            verdict_diffs: 0,
            elapsed: Duration::ZERO,
        };
        for idx in 0..200 {
            let inst = random_instance(&mut rng);
            let prop = inst.property();
            let sem = Semantics::Fixed(inst.fmt);
            let with = verify(&inst.net, &prop, sem, &VerifyConfig::default()).unwrap();
            let cfg = VerifyConfig { use_invariants: false, ..VerifyConfig::default() };
            let without = verify(&inst.net, &prop, sem, &cfg).unwrap();
            let truth = inst.exhaustive();
            r.instances += 1;
            r.unsafe_count += truth as usize;
            for (name, v) in [("with", &with), ("without", &without)] {
                if !(v.is_safe() || v.is_unsafe()) || v.is_unsafe() != truth {
                    r.mismatches.push(format!("#{idx} {name}: {} vs exhaustive unsafe={truth}", v.label()));
                }
                if let Some(cex) = v.counterexample() {
                    if !replay(&inst.net, cex).unwrap() {
                        r.replay_failures += 1;
                    }
                }
            }
            r.verdict_diffs += (with.label() != without.label()) as usize;
            r.explored_with += with.stats.nodes_explored;
            r.explored_without += without.stats.nodes_explored;
            r.per_instance_worse += (with.stats.nodes_explored > without.stats.nodes_explored) as usize;
        }
        r.elapsed = start.elapsed();
        r
    })
}

fn c7_oracle_equivalence() -> Outcome {
    let r = oracle_suite();
    ensure(r.mismatches.is_empty(), || format!("{} mismatches, first: {}", r.mismatches.len(), r.mismatches[0]))?;
    ensure(r.replay_failures == 0, || format!("{} witnesses failed to replay", r.replay_failures))?;
    ensure(r.elapsed <= Duration::from_secs(300), || format!("took {:?}", r.elapsed))?;
    Ok(format!("{} instances ({} UNSAFE) agree with enumeration, all witnesses replay", r.instances, r.unsafe_count))
}

fn c8_invariant_pruning() -> Outcome {
    let r = oracle_suite();
    ensure(r.verdict_diffs == 0, || format!("{} verdicts differ", r.verdict_diffs))?;
    ensure(r.per_instance_worse == 0, || format!("{} instances explored more with invariants", r.per_instance_worse))?;
    let factor = r.explored_without as f64 / r.explored_with.max(1) as f64;
    ensure(factor >= 2.0, || format!("reduction only {factor:.2}x"))?;
    Ok(format!("nodes {} -> {} ({factor:.1}x reduction)", r.explored_without, r.explored_with))
}

fn c9_format_sweep() -> Outcome {
    let start = Instant::now();
    let net = vocalic();
    let inputs: Vec<Vec<f64>> = generate(&DatasetConfig::default()).unwrap().into_iter().map(|s| s.pixels).collect();
    let mut reports = Vec::new();
    for (i, f) in [(2, 2), (4, 4), (8, 8), (16, 16), (32, 32)] {
        reports.push(conformance_diff(&net, &inputs, fmt(i, f), 0.5).map_err(|e| e.to_string())?);
    }
    let json = serde_json::to_string(&reports).map_err(|e| e.to_string())?;
    ensure(serde_json::from_str::<serde_json::Value>(&json).is_ok(), || "invalid JSON".into())?;
    let wide = &reports[4].summary;
    ensure(wide.max_abs_dev <= 1e-6 && wide.classification_flips == 0, || {
        format!("<32,32> dev {} flips {}", wide.max_abs_dev, wide.classification_flips)
    })?;
    let narrow: Vec<String> = reports[..4]
        .iter()
        .filter(|r| r.summary.classification_flips > 0)
        .map(|r| format!("{} ({} flips)", r.format, r.summary.classification_flips))
        .collect();
    ensure(!narrow.is_empty(), || "no narrow format flips a classification".into())?;
    within(Duration::from_secs(60), start)?;
    Ok(format!("<32,32> max dev {:.1e}, 0 flips; flips at {}", wide.max_abs_dev, narrow.join(", ")))
}

fn c10_adversarial() -> Outcome {
    let start = Instant::now();
    let net = vocalic();
    let a = bitmap('A').unwrap();
    let p = Property::AdversarialRobustness(AdversarialProperty {
        base_input: a.clone(),
        gamma: 1.5,
        expected_class: 0,
        threshold: 0.5,
        region: Some(BoxSpec { lo: vec![0.0; 25], hi: vec![1.0; 25] }),
        grid_step: Some(1.0),
    });
    let v = verify(&net, &p, Semantics::Fixed(fmt(32, 32)), &VerifyConfig::default()).map_err(|e| e.to_string())?;
    let cex = v.counterexample().ok_or_else(|| format!("verdict {}", v.label()))?;
    ensure(replay(&net, cex).unwrap(), || "witness does not replay".into())?;
    let float = forward_float(&net, &cex.input).unwrap();
    ensure(adversarial_literal(float.scores(), 0, 0.5), || format!("float scores {:?}", float.scores()))?;
    within(Duration::from_secs(600), start)?;
    let flips: Vec<usize> = (0..25).filter(|&i| cex.input[i] != a[i]).collect();
    Ok(format!(
        "UNSAFE, witness flips pixels {flips:?} (delta {:.3}), float oracle misclassifies, {} nodes",
        cex.distance.unwrap(),
        v.stats.nodes_explored
    ))
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

fn expected_raw(op: Op, a: i64, b: i64, f: FxpFormat) -> Option<i64> {
    let den = BigInt::one() << f.frac_bits();
    let x = BigRational::new(BigInt::from(a), den.clone());
    let y = BigRational::new(BigInt::from(b), den.clone());
    let exact = match op {
        Op::Add => x + y,
        Op::Sub => x - y,
        Op::Mul => x * y,
        Op::Div => {
            if y.is_zero() {
                return None;
            }
            x / y
        }
    };
    let scaled = exact * BigRational::from_integer(den);
    let rounded = match f.rounding() {
        Rounding::Floor => scaled.floor(),
        Rounding::NearestEven => {
            let fl: BigRational = scaled.floor();
            let frac = &scaled - &fl;
            let half = BigRational::new(BigInt::one(), BigInt::from(2));
            if frac > half || (frac == half && !(fl.to_integer() % BigInt::from(2)).is_zero()) {
                fl + BigRational::one()
            } else {
                fl
            }
        }
    }
    .to_integer();
    let clipped = rounded.clamp(BigInt::from(f.raw_min()), BigInt::from(f.raw_max()));
    Some(clipped.to_string().parse().unwrap())
}

fn c11_fxp_properties() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut failures = Vec::new();
    for op in [Op::Add, Op::Sub, Op::Mul, Op::Div] {
        for _ in 0..100_000 {
            let i = rng.gen_range(1..=32);
            let fr = rng.gen_range(0..=(64 - i).min(32));
            let rounding = if rng.gen_bool(0.5) { Rounding::Floor } else { Rounding::NearestEven };
            let f = fmt(i, fr).with_rounding(rounding);
            let draw = |rng: &mut ChaCha8Rng| {
                if rng.gen_bool(0.1) {
                    [f.raw_min(), f.raw_max(), 0, 1, -1][rng.gen_range(0..5)].clamp(f.raw_min(), f.raw_max())
                } else {
                    rng.gen_range(f.raw_min()..=f.raw_max())
                }
            };
            let (a, b) = (draw(&mut rng), draw(&mut rng));
            let (x, y) = (FxpValue::from_raw(a, f).unwrap(), FxpValue::from_raw(b, f).unwrap());
            let got = match op {
                Op::Add => x.add(y),
                Op::Sub => x.sub(y),
                Op::Mul => x.mul(y),
                Op::Div => x.div(y),
            };
            let want = expected_raw(op, a, b, f);
            let ok = match (&got, want) {
                (Ok(v), Some(w)) => v.raw() == w,
                (Err(_), None) => true,
                _ => false,
            };
            if !ok && failures.len() < 3 {
                failures.push(format!("{op:?} {a} {b} in {f} {rounding:?}: got {got:?}, want {want:?}"));
            }
        }
    }
    ensure(failures.is_empty(), || failures.join("; "))?;
    within(Duration::from_secs(30), start)?;
    Ok("4 operators x 10^5 cases match the rational oracle".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("verdict flip on the motivating example", c1_verdict_flip),
        ("Table 1 activation potentials", c2_table1),
        ("covering-method regression", c3_covering_methods),
        ("coverage-goal search", c4_coverage_goal),
        ("Euclidean distance", c5_distance),
        ("interval soundness", c6_interval_soundness),
        ("oracle equivalence", c7_oracle_equivalence),
        ("invariant pruning", c8_invariant_pruning),
        ("format-sweep conformance", c9_format_sweep),
        ("adversarial search", c10_adversarial),
        ("fixed-point arithmetic properties", c11_fxp_properties),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion {:>2}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || id.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{id} PASS [{secs:7.2}s] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{id} FAIL [{secs:7.2}s] {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
