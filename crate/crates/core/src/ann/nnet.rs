//! Reader and writer for the `.nnet` text format.
//!
//! Layout: `//` comment lines, a header `numLayers,inputSize,outputSize,maxLayerSize`,
//! the layer sizes, five normalization lines (flag, mins, maxes, means, ranges),
//! then for each layer one weight row per neuron followed by one bias per line.
//! Trailing commas and blank lines are tolerated.

use std::fmt::Write as _;

use thiserror::Error;

use super::{ActivationKind, Layer, Network, Normalization, SigmoidTable};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Dimension { line: usize, message: String },
    #[error("line {line}: invalid number {token:?}")]
    Number { line: usize, token: String },
    #[error("line {line}: unexpected end of file while reading {expected}")]
    Truncated { line: usize, expected: &'static str },
}

/// How activations and normalization are assigned to a parsed network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnetOptions {
    pub hidden_activation: ActivationKind,
    pub output_activation: ActivationKind,
    pub normalize: bool,
    /// Sigmoid table step; `None` keeps the 0.01 default.
    pub lut_step: Option<f64>,
}

impl Default for NnetOptions {
    fn default() -> Self {
        Self {
            hidden_activation: ActivationKind::Relu,
            output_activation: ActivationKind::Identity,
            normalize: false,
            lut_step: None,
        }
    }
}

impl NnetOptions {
    /// Sigmoid on every layer, as used by the character-recognition benchmark.
    pub fn all_sigmoid() -> Self {
        Self {
            hidden_activation: ActivationKind::SigmoidLut,
            output_activation: ActivationKind::SigmoidLut,
            ..Self::default()
        }
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_values(&mut self, expected: &'static str) -> Result<(usize, Vec<f64>), ParseError> {
        for (idx, raw) in self.inner.by_ref() {
            let line = idx + 1;
            self.last = line;
            let text = raw.trim();
            if text.is_empty() || text.starts_with("//") {
                continue;
            }
            let values = text
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| ParseError::Number { line, token: t.to_string() })
                })
                .collect::<Result<Vec<_>, _>>()?;
            return Ok((line, values));
        }
        Err(ParseError::Truncated { line: self.last + 1, expected })
    }

    fn next_exact(&mut self, expected: &'static str, count: usize) -> Result<(usize, Vec<f64>), ParseError> {
        let (line, values) = self.next_values(expected)?;
        if values.len() != count {
            return Err(ParseError::Dimension {
                line,
                message: format!("{expected}: expected {count} values, found {}", values.len()),
            });
        }
        Ok((line, values))
    }

    fn at_end(&mut self) -> Option<usize> {
        for (idx, raw) in self.inner.by_ref() {
            let text = raw.trim();
            if !text.is_empty() && !text.starts_with("//") {
                return Some(idx + 1);
            }
        }
        None
    }
}

fn to_count(line: usize, v: f64, what: &str) -> Result<usize, ParseError> {
    if v < 1.0 || v.fract() != 0.0 || v > 1e6 {
        return Err(ParseError::Dimension { line, message: format!("{what} must be a positive integer, got {v}") });
    }
    Ok(v as usize)
}

pub fn parse_nnet(text: &str, options: &NnetOptions) -> Result<Network> {
    let name = text
        .lines()
        .map(str::trim)
        .take_while(|l| l.is_empty() || l.starts_with("//"))
        .find(|l| l.starts_with("//"))
        .map(|l| l.trim_start_matches('/').trim().to_string())
        .filter(|s| !s.is_empty());

    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let (hline, header) = lines.next_values("header")?;
    if header.len() < 4 {
        return Err(ParseError::Dimension {
            line: hline,
            message: format!("header needs 4 values, found {}", header.len()),
        }
        .into());
    }
    let num_layers = to_count(hline, header[0], "layer count")?;
    let input_size = to_count(hline, header[1], "input size")?;
    let output_size = to_count(hline, header[2], "output size")?;

    let (sline, sizes) = lines.next_exact("layer sizes", num_layers + 1)?;
    let sizes = sizes
        .iter()
        .map(|&s| to_count(sline, s, "layer size"))
        .collect::<Result<Vec<_>, _>>()?;
    if sizes[0] != input_size || sizes[num_layers] != output_size {
        return Err(ParseError::Dimension {
            line: sline,
            message: format!(
                "layer sizes {sizes:?} disagree with header input {input_size} / output {output_size}"
            ),
        }
        .into());
    }

    lines.next_values("normalization flag")?;
    let mut norm_vec = |what: &'static str| -> Result<Vec<f64>, ParseError> {
        let (line, v) = lines.next_values(what)?;
        if v.len() != input_size && v.len() != input_size + 1 {
            return Err(ParseError::Dimension {
                line,
                message: format!("{what}: expected {input_size} values, found {}", v.len()),
            });
        }
        Ok(v)
    };
    let mins = norm_vec("input minimums")?;
    let maxes = norm_vec("input maximums")?;
    let means = norm_vec("input means")?;
    let ranges = norm_vec("input ranges")?;

    let mut layers = Vec::with_capacity(num_layers);
    for l in 0..num_layers {
        let (fan_in, width) = (sizes[l], sizes[l + 1]);
        let mut weights = Vec::with_capacity(width);
        for r in 0..width {
            let (line, row) = lines
                .next_values("weight row")
                .map_err(|e| if r == 0 { missing_layer(e, l, num_layers) } else { e })?;
            if row.len() != fan_in {
                return Err(ParseError::Dimension {
                    line,
                    message: format!("layer {} weight row: expected {fan_in} values, found {}", l + 1, row.len()),
                }
                .into());
            }
            weights.push(row);
        }
        let mut biases = Vec::with_capacity(width);
        for _ in 0..width {
            let (_, b) = lines.next_exact("bias", 1)?;
            biases.push(b[0]);
        }
        let act = if l + 1 == num_layers { options.output_activation } else { options.hidden_activation };
        layers.push(Layer::new(weights, biases, act)?);
    }
    if let Some(line) = lines.at_end() {
        return Err(ParseError::Dimension {
            line,
            message: format!("data after the {num_layers} declared layers"),
        }
        .into());
    }

    let mut net = Network::new(layers)?.with_normalization(Normalization {
        enabled: options.normalize,
        mins,
        maxes,
        means,
        ranges,
    });
    if let Some(step) = options.lut_step {
        net = net.with_sigmoid_table(SigmoidTable::new(step)?);
    }
    if let Some(name) = name {
        net = net.with_name(name);
    }
    Ok(net)
}

// A file that ends cleanly between layers is missing whole weight blocks.
fn missing_layer(err: ParseError, layer: usize, declared: usize) -> ParseError {
    match err {
        ParseError::Truncated { line, .. } => ParseError::Dimension {
            line,
            message: format!("header declares {declared} layers but the file holds only {layer}"),
        },
        other => other,
    }
}

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for v in values {
        let _ = write!(s, "{v},");
    }
    s
}

/// Writes `net` in `.nnet` form. Values use the shortest decimal that
/// parses back to the same double.
pub fn serialize_nnet(net: &Network) -> String {
    let mut out = String::new();
    if let Some(name) = net.name() {
        for line in name.lines() {
            let _ = writeln!(out, "// {line}");
        }
    }
    let widths = net.layer_widths();
    let max_width = widths.iter().copied().chain([net.input_size()]).max().unwrap_or(0);
    let _ = writeln!(out, "{},{},{},{},", widths.len(), net.input_size(), net.output_size(), max_width);
    let mut sizes = vec![net.input_size() as f64];
    sizes.extend(widths.iter().map(|&w| w as f64));
    let _ = writeln!(out, "{}", join(&sizes));
    let _ = writeln!(out, "0,");
    let n = net.input_size();
    let norm = net.normalization();
    let or = |v: &Vec<f64>, fill: f64, len: usize| if v.is_empty() { vec![fill; len] } else { v.clone() };
    let _ = writeln!(out, "{}", join(&or(&norm.mins, 0.0, n)));
    let _ = writeln!(out, "{}", join(&or(&norm.maxes, 1.0, n)));
    let _ = writeln!(out, "{}", join(&or(&norm.means, 0.0, n + 1)));
    let _ = writeln!(out, "{}", join(&or(&norm.ranges, 1.0, n + 1)));
    for layer in net.layers() {
        for row in layer.weights() {
            let _ = writeln!(out, "{}", join(row));
        }
        for b in layer.biases() {
            let _ = writeln!(out, "{b},");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ann::forward_float;
    use crate::error::Error;
    use proptest::prelude::*;

    const FIG5: &str = "// motivating example\n2,2,1,2,\n2,2,1,\n0,\n0,0,\n1,1,\n0,0,0,\n1,1,1,\n2,-3,\n1,4,\n0,\n0,\n1,1,\n0,\n";

    fn parse_err(text: &str) -> ParseError {
        match parse_nnet(text, &NnetOptions::default()) {
            Err(Error::Parse(e)) => e,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parses_minimal_file() {
        let net = parse_nnet(FIG5, &NnetOptions::default()).unwrap();
        assert_eq!(net.name(), Some("motivating example"));
        assert_eq!(net.layer_widths(), vec![2, 1]);
        assert_eq!(net.layers()[0].weights(), &[vec![2.0, -3.0], vec![1.0, 4.0]]);
        assert_eq!(net.layers()[0].activation(), ActivationKind::Relu);
        assert_eq!(net.layers()[1].activation(), ActivationKind::Identity);
        let f = forward_float(&net, &[0.749, 0.498]).unwrap().scores()[0];
        assert!((f - 2.745).abs() < 1e-12);
    }

    #[test]
    fn missing_layer_block_is_dimension_error() {
        let text = FIG5.replace("2,2,1,2,\n2,2,1,", "3,2,1,2,\n2,2,2,1,");
        let text = text.replace("1,1,\n0,\n", "1,1,\n1,1,\n0,\n0,\n");
        assert!(matches!(parse_err(&text), ParseError::Dimension { .. }));
    }

    #[test]
    fn bad_token_reports_line() {
        let text = FIG5.replace("2,-3,", "2,x3,");
        assert_eq!(parse_err(&text), ParseError::Number { line: 9, token: "x3".into() });
    }

    #[test]
    fn truncated_file() {
        let text: String = FIG5.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_err(&text), ParseError::Truncated { .. }));
        assert!(matches!(parse_err(""), ParseError::Truncated { line: 1, .. }));
    }

    #[test]
    fn short_weight_row() {
        let text = FIG5.replace("1,4,", "1,");
        assert!(matches!(parse_err(&text), ParseError::Dimension { line: 10, .. }));
    }

    #[test]
    fn trailing_data_rejected() {
        let text = format!("{FIG5}5,\n");
        assert!(matches!(parse_err(&text), ParseError::Dimension { .. }));
    }

    #[test]
    fn sigmoid_options_and_step() {
        let opts = NnetOptions { lut_step: Some(0.001), ..NnetOptions::all_sigmoid() };
        let net = parse_nnet(FIG5, &opts).unwrap();
        assert!(net.layers().iter().all(|l| l.activation() == ActivationKind::SigmoidLut));
        assert_eq!(net.sigmoid_table().len(), 40_000);
    }

    fn arb_network() -> impl Strategy<Value = Network> {
        (1usize..4, 1usize..5).prop_flat_map(|(depth, inputs)| {
            proptest::collection::vec(1usize..5, depth).prop_flat_map(move |widths| {
                let mut fan = inputs;
                let mut layer_strats = Vec::new();
                for &w in &widths {
                    layer_strats.push((
                        proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, fan), w),
                        proptest::collection::vec(-1e3f64..1e3, w),
                    ));
                    fan = w;
                }
                layer_strats.prop_map(|ls| {
                    let last = ls.len() - 1;
                    let layers = ls
                        .into_iter()
                        .enumerate()
                        .map(|(i, (w, b))| {
                            let act = if i == last { ActivationKind::Identity } else { ActivationKind::Relu };
                            Layer::new(w, b, act).unwrap()
                        })
                        .collect();
                    Network::new(layers).unwrap()
                })
            })
        })
    }

    proptest! {
        #[test]
        fn round_trip(net in arb_network()) {
            let text = serialize_nnet(&net);
            let parsed = parse_nnet(&text, &NnetOptions::default()).unwrap();
            prop_assert_eq!(parsed.layers(), net.layers());
            let again = parse_nnet(&serialize_nnet(&parsed), &NnetOptions::default()).unwrap();
            prop_assert_eq!(again, parsed);
        }
    }
}
