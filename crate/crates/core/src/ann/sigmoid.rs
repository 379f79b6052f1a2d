//! ReLU and sigmoid activations, including the lookup-table sigmoid that the
//! operational models evaluate.

use crate::error::{Error, Result};

/// Inputs outside `[-DOMAIN, DOMAIN)` map to the saturated outputs 0 and 1.
pub const DOMAIN: f64 = 20.0;

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

pub fn sigmoid_exact(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// Sigmoid sampled on a uniform grid over `[-20, 20)`.
///
/// Entry `i` holds `sigmoid((i - n/2) * step)` where `n = 40 / step`; the
/// table is indexed with `floor(u / step + n/2)`. With the default step of
/// 0.01 this is the 4000-entry table indexed by `u * 100 + 2000`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmoidTable {
    per_unit: u32,
    entries: Vec<f64>,
}

impl Default for SigmoidTable {
    fn default() -> Self {
        Self::with_per_unit(100)
    }
}

impl SigmoidTable {
    /// `step` must be the reciprocal of a positive integer (0.01, 0.001, ...).
    pub fn new(step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidArgument(format!("LUT step must be positive, got {step}")));
        }
        let per_unit = (1.0 / step).round();
        if per_unit < 1.0 || per_unit > 100_000.0 || ((1.0 / per_unit) - step).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "LUT step {step} is not the reciprocal of an integer"
            )));
        }
        Ok(Self::with_per_unit(per_unit as u32))
    }

    fn with_per_unit(per_unit: u32) -> Self {
        let half = (DOMAIN as u32 * per_unit) as i64;
        let entries = (0..2 * half)
            .map(|i| sigmoid_exact((i - half) as f64 / per_unit as f64))
            .collect();
        Self { per_unit, entries }
    }

    pub fn step(&self) -> f64 {
        1.0 / self.per_unit as f64
    }

    /// Table cells per unit of input (100 for the default step).
    pub fn per_unit(&self) -> u32 {
        self.per_unit
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Index of the cell for `u = 0`.
    pub fn offset(&self) -> i64 {
        (self.entries.len() / 2) as i64
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Output for an already computed (possibly out-of-range) index.
    pub fn at_index(&self, index: i64) -> f64 {
        if index < 0 {
            0.0
        } else if index >= self.entries.len() as i64 {
            1.0
        } else {
            self.entries[index as usize]
        }
    }

    pub fn index_of(&self, u: f64) -> i64 {
        let idx = (u * self.per_unit as f64 + self.offset() as f64).floor();
        // Clamp before the cast so huge potentials cannot wrap.
        idx.clamp(-1.0, self.entries.len() as f64) as i64
    }
}

pub fn sigmoid_lut(u: f64, table: &SigmoidTable) -> f64 {
    table.at_index(table.index_of(u))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_examples() {
        assert_eq!(relu(-3.0), 0.0);
        assert_eq!(relu(0.004), 0.004);
        assert_eq!(relu(2.741), 2.741);
    }

    #[test]
    fn sigmoid_exact_examples() {
        assert_eq!(sigmoid_exact(0.0), 0.5);
        let tail = sigmoid_exact(-20.0);
        assert!((tail - 2.061e-9).abs() < 1e-11, "{tail}");
        assert!((sigmoid_exact(20.0) - (1.0 - tail)).abs() < 1e-15);
        for u in [-7.5, -1.0, 0.3, 4.0] {
            assert!((sigmoid_exact(-u) - (1.0 - sigmoid_exact(u))).abs() < 1e-15);
        }
    }

    #[test]
    fn default_table_shape() {
        let t = SigmoidTable::default();
        assert_eq!(t.len(), 4000);
        assert_eq!(t.offset(), 2000);
        assert_eq!(t.step(), 0.01);
        assert!(t.entries().iter().all(|e| (0.0..=1.0).contains(e)));
        assert!(t.entries().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn lut_branches() {
        let t = SigmoidTable::default();
        assert_eq!(sigmoid_lut(-25.0, &t), 0.0);
        assert_eq!(sigmoid_lut(0.0, &t), 0.5);
        assert_eq!(sigmoid_lut(21.0, &t), 1.0);
        assert_eq!(sigmoid_lut(20.0, &t), 1.0);
        assert_eq!(sigmoid_lut(-1e300, &t), 0.0);
        assert_eq!(sigmoid_lut(1e300, &t), 1.0);
    }

    #[test]
    fn lut_fidelity_on_grid() {
        let t = SigmoidTable::default();
        for i in -2000..2000 {
            let u = i as f64 / 100.0;
            let err = (sigmoid_lut(u, &t) - sigmoid_exact(u)).abs();
            assert!(err <= 0.01, "u={u} err={err}");
        }
    }

    #[test]
    fn finer_table() {
        let t = SigmoidTable::new(0.001).unwrap();
        assert_eq!(t.len(), 40_000);
        assert_eq!(sigmoid_lut(0.0, &t), 0.5);
        assert!(SigmoidTable::new(0.003).is_err());
        assert!(SigmoidTable::new(0.0).is_err());
    }
}
