//! `nnverify`: verification, coverage, interval, conformance and benchmark
//! commands for fixed-point multilayer perceptrons.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nnverify_core::{ActivationKind, CoverMethod, DistanceKind, FxpFormat, NnetOptions, Rounding, Semantics};

/// Exit code for usage, file and parse errors.
const EXIT_ERROR: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "nnverify", version, about = "Bit-precise verification of fixed-point neural networks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Global {
    /// Fixed-point format "<I,F>"; I includes the sign bit.
    #[arg(long, global = true, default_value = "<32,32>", value_parser = parse_format)]
    fixedbv: FxpFormat,
    /// Rounding of fixed-point conversion, multiplication and division.
    #[arg(long, global = true, value_enum, default_value_t = RoundingArg::Floor)]
    rounding: RoundingArg,
    /// Use IEEE double semantics instead of fixed point.
    #[arg(long, global = true)]
    float_oracle: bool,
    /// Write the JSON report to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Hidden-layer activation.
    #[arg(long, global = true, value_enum, default_value_t = ActivationArg::Relu)]
    activation: ActivationArg,
    /// Output-layer activation.
    #[arg(long, global = true, value_enum, default_value_t = ActivationArg::Identity)]
    output_activation: ActivationArg,
    /// Apply the .nnet input normalization.
    #[arg(long, global = true)]
    normalize: bool,
    /// Sigmoid lookup-table step (reciprocal of an integer).
    #[arg(long, global = true, value_name = "STEP")]
    lut_step: Option<f64>,
}

impl Global {
    fn format(&self) -> FxpFormat {
        self.fixedbv.with_rounding(self.rounding.into())
    }

    fn semantics(&self) -> Semantics {
        if self.float_oracle {
            Semantics::Float
        } else {
            Semantics::Fixed(self.format())
        }
    }

    fn nnet_options(&self) -> NnetOptions {
        NnetOptions {
            hidden_activation: self.activation.into(),
            output_activation: self.output_activation.into(),
            normalize: self.normalize,
            lut_step: self.lut_step,
        }
    }
}

fn parse_format(s: &str) -> Result<FxpFormat, String> {
    s.parse().map_err(|e: nnverify_core::FxpError| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RoundingArg {
    Floor,
    Nearest,
}

impl From<RoundingArg> for Rounding {
    fn from(r: RoundingArg) -> Self {
        match r {
            RoundingArg::Floor => Rounding::Floor,
            RoundingArg::Nearest => Rounding::NearestEven,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ActivationArg {
    Relu,
    Sigmoid,
    Identity,
}

impl From<ActivationArg> for ActivationKind {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Relu => ActivationKind::Relu,
            ActivationArg::Sigmoid => ActivationKind::SigmoidLut,
            ActivationArg::Identity => ActivationKind::Identity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Ss,
    Sv,
    Ds,
    Dv,
}

impl From<MethodArg> for CoverMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ss => CoverMethod::Ss,
            MethodArg::Sv => CoverMethod::Sv,
            MethodArg::Ds => CoverMethod::Ds,
            MethodArg::Dv => CoverMethod::Dv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistanceArg {
    PerNeuron,
    Euclidean,
}

impl From<DistanceArg> for DistanceKind {
    fn from(d: DistanceArg) -> Self {
        match d {
            DistanceArg::PerNeuron => DistanceKind::PerNeuron,
            DistanceArg::Euclidean => DistanceKind::Euclidean,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Verify a property file against a network.
    Verify(VerifyArgs),
    /// Coverage of input pairs, or a search for an input reaching a coverage goal.
    Coverage(CoverageArgs),
    /// Interval bounds of every neuron over an input box.
    Intervals(IntervalsArgs),
    /// Compare the fixed-point model against the float reference.
    Conformance(ConformanceArgs),
    /// Convert a real number to a fixed-point format.
    Convert(ConvertArgs),
    /// Generate the vocalic character benchmark.
    GenBench(GenBenchArgs),
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Network in .nnet format.
    network: PathBuf,
    /// Property JSON file.
    property: PathBuf,
    /// Disable interval pruning.
    #[arg(long)]
    no_interval_analysis: bool,
    /// Bisection levels per reported iteration.
    #[arg(long, default_value_t = 1)]
    granularity: usize,
    /// Deepest bisection level.
    #[arg(long, default_value_t = 4096)]
    max_depth: usize,
    /// Maximum number of search nodes.
    #[arg(long, default_value_t = 10_000_000)]
    budget: u64,
    /// Explore each level in parallel.
    #[arg(long)]
    parallel: bool,
    /// Restrict the search grid to multiples of this step.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Override the property's classification threshold V.
    #[arg(long)]
    threshold: Option<f64>,
    /// Write an UNSAFE witness as an ASCII PGM image.
    #[arg(long, value_name = "PATH")]
    witness: Option<PathBuf>,
    /// Witness image width; defaults to the square root of the input size.
    #[arg(long)]
    image_width: Option<usize>,
}

#[derive(Debug, Args)]
struct CoverageArgs {
    /// Trace files, input files (PGM or JSON) or one dataset directory.
    inputs: Vec<PathBuf>,
    /// Network used to compute potentials from inputs.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Coverage-goal property to search for instead of a report.
    #[arg(long, value_name = "PROPERTY")]
    goal: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MethodArg::Ss)]
    method: MethodArg,
    /// Sign-change ratio threshold d.
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    /// Value-change distance threshold v.
    #[arg(long, default_value_t = 0.1)]
    v: f64,
    /// Required covered fraction P.
    #[arg(long, default_value_t = 0.8)]
    p: f64,
    #[arg(long, value_enum, default_value_t = DistanceArg::PerNeuron)]
    distance: DistanceArg,
    /// Compare every input against this one instead of all pairs.
    #[arg(long)]
    base: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IntervalsArgs {
    network: PathBuf,
    /// Lower corner, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "hi")]
    lo: Option<Vec<f64>>,
    /// Upper corner, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "lo")]
    hi: Option<Vec<f64>>,
    /// A single input point, comma separated or a PGM/JSON file.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["lo", "hi", "input_box"])]
    point: Option<String>,
    /// JSON file with {"lo": [...], "hi": [...]}.
    #[arg(long = "box", value_name = "PATH", conflicts_with_all = ["lo", "hi"])]
    input_box: Option<PathBuf>,
    /// Widen input intervals to the default limit before propagating.
    #[arg(long)]
    widen: bool,
}

#[derive(Debug, Args)]
struct ConformanceArgs {
    network: PathBuf,
    /// Input files (PGM or JSON) or one dataset directory; random inputs when empty.
    inputs: Vec<PathBuf>,
    /// Additional format to compare; repeatable.
    #[arg(long = "compare", value_name = "FORMAT", value_parser = parse_format)]
    formats: Vec<FxpFormat>,
    /// Number of random inputs when none are given.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Range of random inputs.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    hi: f64,
    /// Classification threshold V.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Omit per-input rows.
    #[arg(long)]
    summary: bool,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    /// Real value, or a raw integer with --from-raw.
    #[arg(allow_hyphen_values = true)]
    value: String,
    /// Target format; defaults to --fixedbv.
    #[arg(value_parser = parse_format)]
    format: Option<FxpFormat>,
    /// Interpret the value as a raw integer.
    #[arg(long)]
    from_raw: bool,
}

#[derive(Debug, Args)]
struct GenBenchArgs {
    /// Output directory.
    #[arg(long, short)]
    out: PathBuf,
    /// Noisy variants per letter.
    #[arg(long, default_value_t = 20)]
    per_letter: usize,
    /// Per-pixel flip probability of noisy variants.
    #[arg(long, default_value_t = 0.04)]
    flip_rate: f64,
    /// Random non-vocalic images.
    #[arg(long, default_value_t = 100)]
    non_vocalic: usize,
    /// Radii of the generated adversarial properties.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,1.5,2,2.5")]
    gammas: Vec<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NNVERIFY_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Verify(a) => commands::verify(&cli.global, a),
        Command::Coverage(a) => commands::coverage(&cli.global, a),
        Command::Intervals(a) => commands::intervals(&cli.global, a),
        Command::Conformance(a) => commands::conformance(&cli.global, a),
        Command::Convert(a) => commands::convert(&cli.global, a),
        Command::GenBench(a) => commands::gen_bench(&cli.global, a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
