//! The 5x5 vocalic character benchmark: letter bitmaps, a seeded dataset
//! generator and ASCII PGM (P2) images.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SIDE: usize = 5;
pub const PIXELS: usize = SIDE * SIDE;

/// Class order of the benchmark outputs.
pub const LETTERS: [char; 5] = ['A', 'E', 'I', 'O', 'U'];

const ROWS: [[&str; SIDE]; 5] = [
    ["#####", "#...#", "#####", "#...#", "#...#"],
    ["#####", "#....", "####.", "#....", "#####"],
    ["#####", "..#..", "..#..", "..#..", "#####"],
    ["#####", "#...#", "#...#", "#...#", "#####"],
    ["#...#", "#...#", "#...#", "#...#", "#####"],
];

/// Output index of a letter.
pub fn class_of(letter: char) -> Option<usize> {
    LETTERS.iter().position(|&c| c == letter.to_ascii_uppercase())
}

/// Row-major pixels of a letter, 1.0 for ink and 0.0 for background.
pub fn bitmap(letter: char) -> Option<Vec<f64>> {
    let rows = ROWS[class_of(letter)?];
    Some(rows.iter().flat_map(|r| r.chars().map(|c| if c == '#' { 1.0 } else { 0.0 })).collect())
}

/// One generated image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub name: String,
    /// `None` for non-vocalic images.
    pub label: Option<char>,
    pub pixels: Vec<f64>,
}

/// Generator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub seed: u64,
    /// Noisy variants per letter.
    pub per_letter: usize,
    /// Probability of flipping each pixel of a noisy variant.
    pub flip_rate: f64,
    /// Uniformly random binary images.
    pub non_vocalic: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { seed: 0, per_letter: 20, flip_rate: 0.04, non_vocalic: 100 }
    }
}

/// The five clean bitmaps, noisy variants of each and random non-vocalic
/// images, all determined by the seed.
pub fn generate(cfg: &DatasetConfig) -> Result<Vec<Sample>> {
    if !(0.0..=1.0).contains(&cfg.flip_rate) {
        return Err(Error::InvalidArgument(format!("flip rate must lie in [0, 1], got {}", cfg.flip_rate)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(LETTERS.len() * (cfg.per_letter + 1) + cfg.non_vocalic);
    for &c in &LETTERS {
        let base = bitmap(c).expect("known letter");
        out.push(Sample { name: format!("{c}"), label: Some(c), pixels: base.clone() });
        for i in 0..cfg.per_letter {
            let pixels = base.iter().map(|&p| if rng.gen_bool(cfg.flip_rate) { 1.0 - p } else { p }).collect();
            out.push(Sample { name: format!("{c}_{i:03}"), label: Some(c), pixels });
        }
    }
    for i in 0..cfg.non_vocalic {
        let pixels = (0..PIXELS).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
        out.push(Sample { name: format!("noise_{i:03}"), label: None, pixels });
    }
    Ok(out)
}

/// ASCII PGM of `pixels` in `[0, 1]`, scaled to 0..=255.
pub fn write_pgm(pixels: &[f64], width: usize, height: usize) -> Result<String> {
    if width * height != pixels.len() {
        return Err(Error::Shape { context: "pgm image", expected: width * height, found: pixels.len() });
    }
    let mut s = format!("P2\n{width} {height}\n255\n");
    for row in pixels.chunks(width.max(1)) {
        let line: Vec<String> = row.iter().map(|&p| format!("{}", (p.clamp(0.0, 1.0) * 255.0).round() as u8)).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    Ok(s)
}

/// Parses an ASCII PGM into `(width, height, pixels)` with pixels scaled
/// to `[0, 1]` by the image's maximum value.
pub fn read_pgm(text: &str) -> Result<(usize, usize, Vec<f64>)> {
    let bad = |m: &str| Error::InvalidArgument(format!("malformed PGM: {m}"));
    let mut tokens = text.lines().map(|l| l.split('#').next().unwrap_or("")).flat_map(str::split_whitespace);
    if tokens.next() != Some("P2") {
        return Err(bad("expected P2 magic"));
    }
    let mut num = |what: &str| -> Result<u64> {
        tokens.next().ok_or_else(|| bad(&format!("missing {what}")))?.parse().map_err(|_| bad(&format!("bad {what}")))
    };
    let width = num("width")? as usize;
    let height = num("height")? as usize;
    let maxval = num("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval out of range"));
    }
    let mut pixels = Vec::with_capacity(width * height);
    for _ in 0..width * height {
        let v = num("pixel")?;
        if v > maxval {
            return Err(bad("pixel exceeds maxval"));
        }
        pixels.push(v as f64 / maxval as f64);
    }
    if tokens.next().is_some() {
        return Err(bad("trailing data"));
    }
    Ok((width, height, pixels))
}
