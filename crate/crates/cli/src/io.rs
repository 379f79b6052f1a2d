//! File loading and report output.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::Value;

use nnverify_core::vocalic::{read_pgm, write_pgm};
use nnverify_core::{parse_nnet, Network, NnetOptions, Property};

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn load_network(path: &Path, opts: &NnetOptions) -> Result<Network> {
    let net = parse_nnet(&read(path)?, opts).with_context(|| format!("cannot parse {}", path.display()))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(net.with_name(name))
}

pub fn load_pgm(path: &Path) -> Result<Vec<f64>> {
    let (_, _, pixels) = read_pgm(&read(path)?).with_context(|| format!("cannot parse {}", path.display()))?;
    Ok(pixels)
}

fn is_pgm(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
}

/// Loads a property, replacing a string `base_input` by the pixels of the
/// PGM image it names (relative to the property file).
pub fn load_property(path: &Path) -> Result<Property> {
    let mut v: Value =
        serde_json::from_str(&read(path)?).with_context(|| format!("cannot parse {}", path.display()))?;
    if let Some(Value::String(image)) = v.get("base_input") {
        let dir = path.parent().unwrap_or(Path::new("."));
        let pixels = load_pgm(&dir.join(image))?;
        v["base_input"] = serde_json::to_value(pixels)?;
    }
    serde_json::from_value(v).with_context(|| format!("invalid property in {}", path.display()))
}

/// One item of a coverage or conformance input set.
#[derive(Debug, Clone)]
pub enum Item {
    /// A network input.
    Input(Vec<f64>),
    /// Per-layer activation potentials.
    Trace(Vec<Vec<f64>>),
}

/// Reads a PGM image, a JSON array of numbers, or a JSON object with an
/// `input` or `potentials` field.
pub fn load_item(path: &Path) -> Result<Item> {
    if is_pgm(path) {
        return Ok(Item::Input(load_pgm(path)?));
    }
    let v: Value = serde_json::from_str(&read(path)?).with_context(|| format!("cannot parse {}", path.display()))?;
    let item = if v.is_array() {
        serde_json::from_value(v).map(Item::Input)
    } else if let Some(p) = v.get("potentials") {
        serde_json::from_value(p.clone()).map(Item::Trace)
    } else if let Some(x) = v.get("input") {
        serde_json::from_value(x.clone()).map(Item::Input)
    } else {
        bail!("{}: expected an input array or an object with \"input\" or \"potentials\"", path.display())
    };
    item.with_context(|| format!("invalid data in {}", path.display()))
}

/// Expands a single directory argument into its PGM and JSON files,
/// sorted by name.
pub fn expand(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("cannot list {}", p.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            files.retain(|f| {
                f.is_file() && f.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("json"))
            });
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Parses "a,b,c" or reads the input from a PGM/JSON file.
pub fn parse_point(arg: &str) -> Result<Vec<f64>> {
    let path = Path::new(arg);
    if path.is_file() {
        return match load_item(path)? {
            Item::Input(x) => Ok(x),
            Item::Trace(_) => bail!("{arg} holds a trace, not an input"),
        };
    }
    arg.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number {t:?} in {arg:?}")))
        .collect()
}

/// Writes `report` as pretty JSON to `path`, or to stdout.
pub fn emit<T: Serialize>(report: &T, path: Option<&Path>, summary: &str) -> Result<()> {
    let text = serde_json::to_string_pretty(report)? + "\n";
    match path {
        Some(p) => {
            write(p, &text)?;
            println!("{summary}");
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// Writes pixels as a PGM image of the given width.
pub fn write_image(path: &Path, pixels: &[f64], width: Option<usize>) -> Result<()> {
    let n = pixels.len();
    let width = match width {
        Some(w) if w > 0 && n % w == 0 => w,
        Some(w) => bail!("image width {w} does not divide {n} pixels"),
        None => {
            let s = (n as f64).sqrt().round() as usize;
            if s * s == n {
                s
            } else {
                n
            }
        }
    };
    write(path, &write_pgm(pixels, width, n / width.max(1))?)
}
