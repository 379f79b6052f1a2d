//! Subcommand implementations. Each returns the process exit code.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use nnverify_core::fxp::raw;
use nnverify_core::interval::{default_widen_limit, format_widen_limit};
use nnverify_core::vocalic::{class_of, generate, write_pgm, DatasetConfig, Sample, PIXELS, SIDE};
use nnverify_core::{
    conformance_diff, coverage_goal_search, coverage_report, forward_float, forward_fxp, propagate_box_fxp,
    propagate_network, verify as run_verify, widen, ActivationKind, AdversarialProperty, BoxSpec, ConformanceReport,
    CoverConfig, CoverageReport, FxpFormat, FxpValue, Interval, IntervalBox, LayerBounds, Network, Property,
    Rounding, Semantics, Verdict, VerifyConfig,
};

use crate::io::{self, Item};
use crate::{ConformanceArgs, ConvertArgs, CoverageArgs, GenBenchArgs, Global, IntervalsArgs, VerifyArgs};

fn summarize(v: &Verdict) -> String {
    let s = &v.stats;
    let mut line = format!("{} under {} ({} nodes, depth {})", v.label(), v.semantics, s.nodes_explored, s.depth);
    if let Some(cex) = v.counterexample() {
        line.push_str(&format!("; witness {:?}", cex.input));
    }
    line
}

fn finish(g: &Global, verdict: &Verdict) -> Result<u8> {
    let summary = summarize(verdict);
    info!("{summary}");
    io::emit(verdict, g.json.as_deref(), &summary)?;
    Ok(verdict.exit_code() as u8)
}

pub fn verify(g: &Global, a: &VerifyArgs) -> Result<u8> {
    let net = io::load_network(&a.network, &g.nnet_options())?;
    let mut property = io::load_property(&a.property)?;
    if let Some(v) = a.threshold {
        match &mut property {
            Property::AdversarialRobustness(p) => p.threshold = v,
            _ => bail!("--threshold applies only to adversarial_robustness properties"),
        }
    }
    let config = VerifyConfig {
        max_depth: a.max_depth,
        budget: a.budget,
        granularity: a.granularity,
        use_invariants: !a.no_interval_analysis,
        parallel: a.parallel,
        grid_step: a.grid_step,
    };
    let verdict = run_verify(&net, &property, g.semantics(), &config)?;
    if let (Some(path), Some(cex)) = (&a.witness, verdict.counterexample()) {
        io::write_image(path, &cex.input, a.image_width)?;
        info!("witness image written to {}", path.display());
    }
    finish(g, &verdict)
}

fn potentials(net: &Network, x: &[f64], semantics: Semantics) -> Result<Vec<Vec<f64>>> {
    Ok(match semantics {
        Semantics::Fixed(f) => forward_fxp(net, x, f)?.potentials(),
        Semantics::Float => forward_float(net, x)?.potentials,
    })
}

#[derive(Serialize)]
struct CoverageOutput {
    #[serde(flatten)]
    report: CoverageReport,
    input_pairs: usize,
    /// Semantics used to compute potentials from inputs; absent for traces.
    #[serde(skip_serializing_if = "Option::is_none")]
    semantics: Option<Semantics>,
}

pub fn coverage(g: &Global, a: &CoverageArgs) -> Result<u8> {
    let net = a.network.as_ref().map(|p| io::load_network(p, &g.nnet_options())).transpose()?;
    if let Some(goal) = &a.goal {
        let net = net.context("--goal needs --network")?;
        let property = io::load_property(goal)?;
        let verdict = coverage_goal_search(&net, &property, g.semantics(), &VerifyConfig::default())?;
        return finish(g, &verdict);
    }
    let cfg = CoverConfig { d: a.d, v: a.v, p: a.p, distance: a.distance.into() };
    cfg.validate()?;
    let mut used_network = false;
    let mut trace_of = |path: &PathBuf| -> Result<Vec<Vec<f64>>> {
        match io::load_item(path)? {
            Item::Trace(t) => Ok(t),
            Item::Input(x) => {
                let net = net.as_ref().with_context(|| format!("{} is an input; pass --network", path.display()))?;
                used_network = true;
                potentials(net, &x, g.semantics()).with_context(|| format!("cannot evaluate {}", path.display()))
            }
        }
    };
    let files = io::expand(&a.inputs)?;
    let traces = files.iter().map(&mut trace_of).collect::<Result<Vec<_>>>()?;
    let base = a.base.as_ref().map(&mut trace_of).transpose()?;
    let mut pairs: Vec<(&[Vec<f64>], &[Vec<f64>])> = Vec::new();
    match &base {
        Some(b) => pairs.extend(traces.iter().map(|t| (b.as_slice(), t.as_slice()))),
        None => {
            for i in 0..traces.len() {
                for t in &traces[i + 1..] {
                    pairs.push((&traces[i], t));
                }
            }
        }
    }
    if pairs.is_empty() {
        bail!("coverage needs at least one pair of inputs, got {} input(s)", traces.len());
    }
    let report = coverage_report(a.method.into(), &pairs, &cfg)?;
    let summary = format!(
        "{}: {} of {} neurons covered (ratio {:.4}), literal {}",
        report.method,
        report.covered_neurons.len(),
        report.total_neurons,
        report.ratio,
        report.literal
    );
    let out = CoverageOutput { report, input_pairs: pairs.len(), semantics: used_network.then(|| g.semantics()) };
    io::emit(&out, g.json.as_deref(), &summary)?;
    Ok(0)
}

#[derive(Serialize)]
struct FixedBounds {
    format: FxpFormat,
    #[serde(flatten)]
    bounds: LayerBounds,
}

#[derive(Serialize)]
struct IntervalsOutput {
    input: IntervalBox,
    /// Limit that wide input intervals were widened to.
    #[serde(skip_serializing_if = "Option::is_none")]
    widening: Option<Interval>,
    float: LayerBounds,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixed: Option<FixedBounds>,
}

pub fn intervals(g: &Global, a: &IntervalsArgs) -> Result<u8> {
    let net = io::load_network(&a.network, &g.nnet_options())?;
    let mut input = if let Some(p) = &a.point {
        IntervalBox::from_point(&io::parse_point(p)?)?
    } else if let (Some(lo), Some(hi)) = (&a.lo, &a.hi) {
        IntervalBox::from_bounds(lo, hi)?
    } else if let Some(path) = &a.input_box {
        let bounds: BoxSpec = serde_json::from_str(&io::read(path)?)
            .with_context(|| format!("cannot parse {}", path.display()))?;
        bounds.to_box()?
    } else {
        bail!("give an input box with --lo/--hi, --point or --box");
    };
    let mut widening = None;
    if a.widen {
        let sigmoid = net.layers().iter().any(|l| l.activation() == ActivationKind::SigmoidLut);
        let limit = if sigmoid { default_widen_limit() } else { format_widen_limit(g.format()) };
        input = widen(&input, limit);
        widening = Some(limit);
    }
    if input.intervals().iter().any(|iv| !iv.is_finite()) {
        bail!("input box is unbounded; pass --widen");
    }
    let float = propagate_network(&net, &input)?;
    let fixed = if g.float_oracle {
        None
    } else {
        let raw = propagate_box_fxp(&net, &input, g.format())?;
        Some(FixedBounds { format: raw.format, bounds: raw.to_layer_bounds() })
    };
    let scores: Vec<String> = float.scores().iter().map(|iv| format!("[{}, {}]", iv.lo, iv.hi)).collect();
    let summary = format!("output bounds {}", scores.join(" "));
    io::emit(&IntervalsOutput { input, widening, float, fixed }, g.json.as_deref(), &summary)?;
    Ok(0)
}

#[derive(Serialize)]
struct ConformanceOutput {
    network: Option<String>,
    inputs: usize,
    reports: Vec<ConformanceReport>,
}

pub fn conformance(g: &Global, a: &ConformanceArgs) -> Result<u8> {
    let net = io::load_network(&a.network, &g.nnet_options())?;
    let files = io::expand(&a.inputs)?;
    let inputs: Vec<Vec<f64>> = if files.is_empty() {
        if !(a.lo <= a.hi && a.lo.is_finite() && a.hi.is_finite()) {
            bail!("random input range [{}, {}] is empty or unbounded", a.lo, a.hi);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
        (0..a.samples).map(|_| (0..net.input_size()).map(|_| rng.gen_range(a.lo..=a.hi)).collect()).collect()
    } else {
        files
            .iter()
            .map(|p| match io::load_item(p)? {
                Item::Input(x) => Ok(x),
                Item::Trace(_) => bail!("{} holds a trace, not an input", p.display()),
            })
            .collect::<Result<_>>()?
    };
    let rounding = g.format().rounding();
    let mut formats = vec![g.format()];
    formats.extend(a.formats.iter().map(|f| f.with_rounding(rounding)));
    let mut reports = Vec::with_capacity(formats.len());
    let mut lines = Vec::new();
    for f in formats {
        let mut r = conformance_diff(&net, &inputs, f, a.threshold)?;
        lines.push(format!(
            "{f}: max dev {:.3e}, {} flips, {} saturations",
            r.summary.max_abs_dev, r.summary.classification_flips, r.summary.saturations
        ));
        if a.summary {
            r.per_input.clear();
        }
        reports.push(r);
    }
    let out = ConformanceOutput { network: net.name().map(str::to_string), inputs: inputs.len(), reports };
    io::emit(&out, g.json.as_deref(), &lines.join("\n"))?;
    Ok(0)
}

#[derive(Serialize)]
struct Conversion {
    raw: i64,
    value: f64,
    saturated: bool,
}

#[derive(Serialize)]
struct ConvertOutput {
    input: String,
    format: FxpFormat,
    rounding: Rounding,
    raw: i64,
    value: f64,
    saturated: bool,
    /// Absolute difference between the input and the converted value.
    error: f64,
    floor: Conversion,
    nearest: Conversion,
}

pub fn convert(g: &Global, a: &ConvertArgs) -> Result<u8> {
    let format = a.format.unwrap_or(g.fixedbv).with_rounding(g.rounding.into());
    let conv = |x: f64, r: Rounding| -> Result<Conversion> {
        let (raw, saturated) = raw::from_f64(x, format.with_rounding(r)).with_context(|| format!("{x} is not finite"))?;
        Ok(Conversion { raw, value: format.real(raw), saturated })
    };
    let (x, chosen, floor, nearest) = if a.from_raw {
        let r: i64 = a.value.trim().parse().with_context(|| format!("bad raw integer {:?}", a.value))?;
        let v = FxpValue::from_raw(r, format)?;
        let exact = || Conversion { raw: r, value: v.to_real(), saturated: false };
        (v.to_real(), exact(), exact(), exact())
    } else {
        let x: f64 = a.value.trim().parse().with_context(|| format!("bad number {:?}", a.value))?;
        (x, conv(x, format.rounding())?, conv(x, Rounding::Floor)?, conv(x, Rounding::NearestEven)?)
    };
    let summary = format!("{} -> {} in {format} ({} rounding, raw {})", a.value, chosen.value, format.rounding(), chosen.raw);
    let out = ConvertOutput {
        input: a.value.clone(),
        format,
        rounding: format.rounding(),
        raw: chosen.raw,
        value: chosen.value,
        saturated: chosen.saturated,
        error: (chosen.value - x).abs(),
        floor,
        nearest,
    };
    io::emit(&out, g.json.as_deref(), &summary)?;
    Ok(0)
}

#[derive(Serialize)]
struct ManifestEntry {
    name: String,
    label: Option<char>,
    file: String,
}

#[derive(Serialize)]
struct Manifest {
    seed: u64,
    config: DatasetConfig,
    width: usize,
    height: usize,
    images: Vec<ManifestEntry>,
    properties: Vec<String>,
}

pub fn gen_bench(g: &Global, a: &GenBenchArgs) -> Result<u8> {
    let config =
        DatasetConfig { seed: g.seed, per_letter: a.per_letter, flip_rate: a.flip_rate, non_vocalic: a.non_vocalic };
    let samples = generate(&config)?;
    let mut images = Vec::with_capacity(samples.len());
    for Sample { name, label, pixels } in &samples {
        let file = format!("images/{name}.pgm");
        io::write(&a.out.join(&file), &write_pgm(pixels, SIDE, SIDE)?)?;
        images.push(ManifestEntry { name: name.clone(), label: *label, file });
    }
    let mut properties = Vec::new();
    for s in samples.iter().filter(|s| s.name.len() == 1) {
        let letter = s.label.context("clean bitmaps are labelled")?;
        for &gamma in &a.gammas {
            if !(gamma >= 0.0 && gamma.is_finite()) {
                bail!("gamma must be finite and nonnegative, got {gamma}");
            }
            let p = Property::AdversarialRobustness(AdversarialProperty {
                base_input: s.pixels.clone(),
                gamma,
                expected_class: class_of(letter).context("known letter")?,
                threshold: 0.5,
                region: Some(BoxSpec { lo: vec![0.0; PIXELS], hi: vec![1.0; PIXELS] }),
                grid_step: Some(1.0),
            });
            let mut v = serde_json::to_value(&p)?;
            v["base_input"] = format!("../images/{}.pgm", s.name).into();
            let file = format!("properties/{letter}_gamma{gamma}.json");
            io::write(&a.out.join(&file), &(serde_json::to_string_pretty(&v)? + "\n"))?;
            properties.push(file);
        }
    }
    let manifest = Manifest { seed: g.seed, config, width: SIDE, height: SIDE, images, properties };
    io::write(&a.out.join("manifest.json"), &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    let summary = format!(
        "wrote {} images and {} properties to {}",
        manifest.images.len(),
        manifest.properties.len(),
        a.out.display()
    );
    info!("{summary}");
    io::emit(&manifest, g.json.as_deref(), &summary)?;
    Ok(0)
}
