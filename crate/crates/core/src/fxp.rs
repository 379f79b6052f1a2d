//! Two's-complement fixed-point arithmetic in a configurable `<I,F>` format.
//!
//! A value is stored as a signed raw integer of `I + F` bits and denotes
//! `raw / 2^F`. `I` counts the integer bits *including* the sign bit, so the
//! representable range is `[-2^(I-1), 2^(I-1) - 2^-F]` with resolution
//! `2^-F`.
//!
//! Overflow always saturates to the nearest bound. Addition and subtraction
//! are exact before saturation; conversion, multiplication and division
//! round according to the format's [`Rounding`] mode.
//!
//! The `raw` submodule exposes the integer kernels used by the operational
//! models and by the fixed-point interval domain. Every kernel is monotone
//! nondecreasing in each argument (for a fixed sign of the other operand),
//! which is what lets interval bounds be computed by evaluating endpoints.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FxpError {
    #[error("invalid fixed-point format <{int_bits},{frac_bits}>: need I >= 1, F >= 0, I + F <= 64")]
    InvalidFormat { int_bits: u32, frac_bits: u32 },
    #[error("cannot parse fixed-point format {0:?}; expected \"<I,F>\"")]
    ParseFormat(String),
    #[error("fixed-point format mismatch: {left} vs {right}")]
    FormatMismatch { left: FxpFormat, right: FxpFormat },
    #[error("fixed-point division by zero")]
    DivByZero,
    #[error("cannot convert non-finite value {0} to fixed point")]
    NonFinite(f64),
    #[error("raw value {raw} out of range for {format}")]
    RawOutOfRange { raw: i64, format: FxpFormat },
}

/// How results that fall between two grid points are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// Round toward negative infinity (arithmetic shift right).
    #[default]
    Floor,
    /// Round to nearest, ties to even.
    NearestEven,
}

impl fmt::Display for Rounding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rounding::Floor => f.write_str("floor"),
            Rounding::NearestEven => f.write_str("nearest"),
        }
    }
}

impl FromStr for Rounding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "floor" | "trunc" | "truncate" => Ok(Rounding::Floor),
            "nearest" | "nearest-even" | "nearest_even" | "rne" => Ok(Rounding::NearestEven),
            other => Err(format!("unknown rounding mode {other:?} (use floor or nearest)")),
        }
    }
}

/// The `<I,F>` format descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FxpFormat {
    int_bits: u32,
    frac_bits: u32,
    rounding: Rounding,
}

impl FxpFormat {
    pub fn new(int_bits: u32, frac_bits: u32) -> Result<Self, FxpError> {
        if int_bits == 0 || int_bits + frac_bits > 64 {
            return Err(FxpError::InvalidFormat { int_bits, frac_bits });
        }
        Ok(Self { int_bits, frac_bits, rounding: Rounding::default() })
    }

    pub fn with_rounding(self, rounding: Rounding) -> Self {
        Self { rounding, ..self }
    }

    pub fn int_bits(&self) -> u32 {
        self.int_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    pub fn total_bits(&self) -> u32 {
        self.int_bits + self.frac_bits
    }

    /// The smallest positive representable magnitude, `2^-F`.
    pub fn resolution(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    /// `2^F` as a float; exact for every valid format.
    pub fn scale(&self) -> f64 {
        (self.frac_bits as f64).exp2()
    }

    pub fn raw_min(&self) -> i64 {
        if self.total_bits() == 64 {
            i64::MIN
        } else {
            -(1i64 << (self.total_bits() - 1))
        }
    }

    pub fn raw_max(&self) -> i64 {
        if self.total_bits() == 64 {
            i64::MAX
        } else {
            (1i64 << (self.total_bits() - 1)) - 1
        }
    }

    pub fn min_value(&self) -> f64 {
        self.raw_min() as f64 / self.scale()
    }

    pub fn max_value(&self) -> f64 {
        self.raw_max() as f64 / self.scale()
    }

    /// Clamps a wide intermediate into range, reporting whether it had to.
    pub fn saturate(&self, wide: i128) -> (i64, bool) {
        let lo = self.raw_min() as i128;
        let hi = self.raw_max() as i128;
        if wide < lo {
            (self.raw_min(), true)
        } else if wide > hi {
            (self.raw_max(), true)
        } else {
            (wide as i64, false)
        }
    }

    /// Real value of a raw integer in this format.
    pub fn real(&self, raw: i64) -> f64 {
        raw as f64 / self.scale()
    }
}

impl fmt::Display for FxpFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.int_bits, self.frac_bits)
    }
}

impl FromStr for FxpFormat {
    type Err = FxpError;

    /// Parses `"<I,F>"` with an optional `":floor"` or `":nearest"` rounding
    /// suffix; the angle brackets are optional.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FxpError::ParseFormat(s.to_string());
        let (body, rounding) = match s.trim().split_once(':') {
            Some((b, r)) => (b.trim(), r.parse::<Rounding>().map_err(|_| bad())?),
            None => (s.trim(), Rounding::default()),
        };
        let body = body.strip_prefix('<').unwrap_or(body);
        let body = body.strip_suffix('>').unwrap_or(body);
        let (i, f) = body.split_once(',').ok_or_else(bad)?;
        let int_bits = i.trim().parse().map_err(|_| bad())?;
        let frac_bits = f.trim().parse().map_err(|_| bad())?;
        Ok(FxpFormat::new(int_bits, frac_bits)?.with_rounding(rounding))
    }
}

/// Serialized as `"<I,F>"`, with a `":nearest"` suffix for nearest-even
/// rounding.
impl Serialize for FxpFormat {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.rounding {
            Rounding::Floor => serializer.collect_str(self),
            r => serializer.collect_str(&format_args!("{self}:{r}")),
        }
    }
}

impl<'de> Deserialize<'de> for FxpFormat {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Integer kernels shared by [`FxpValue`], the operational models and the
/// fixed-point interval domain. Each returns the saturated raw result and
/// whether saturation occurred.
pub mod raw {
    use super::{FxpFormat, Rounding};

    /// Divides by `2^shift` with the format's rounding.
    fn shift_round(value: i128, shift: u32, rounding: Rounding) -> i128 {
        if shift == 0 {
            return value;
        }
        let q = value >> shift;
        match rounding {
            Rounding::Floor => q,
            Rounding::NearestEven => {
                let rem = value - (q << shift);
                let half = 1i128 << (shift - 1);
                if rem > half || (rem == half && q & 1 == 1) {
                    q + 1
                } else {
                    q
                }
            }
        }
    }

    /// `floor` or nearest-even of `num / den` for `den != 0`.
    fn div_round(num: i128, den: i128, rounding: Rounding) -> i128 {
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        let q = num.div_euclid(den);
        let rem = num.rem_euclid(den);
        match rounding {
            Rounding::Floor => q,
            Rounding::NearestEven => {
                let twice = 2 * rem;
                if twice > den || (twice == den && q & 1 == 1) {
                    q + 1
                } else {
                    q
                }
            }
        }
    }

    /// Quantizes a finite float; `None` for NaN or infinities.
    pub fn from_f64(x: f64, fmt: FxpFormat) -> Option<(i64, bool)> {
        if !x.is_finite() {
            return None;
        }
        // Scaling by a power of two is exact unless it overflows, and an
        // overflowed product saturates below anyway.
        let scaled = x * fmt.scale();
        let rounded = match fmt.rounding() {
            Rounding::Floor => scaled.floor(),
            Rounding::NearestEven => scaled.round_ties_even(),
        };
        let bound = ((fmt.total_bits() - 1) as f64).exp2();
        if rounded >= bound {
            Some((fmt.raw_max(), true))
        } else if rounded < -bound {
            Some((fmt.raw_min(), true))
        } else {
            Some((rounded as i64, false))
        }
    }

    pub fn add(a: i64, b: i64, fmt: FxpFormat) -> (i64, bool) {
        fmt.saturate(a as i128 + b as i128)
    }

    pub fn sub(a: i64, b: i64, fmt: FxpFormat) -> (i64, bool) {
        fmt.saturate(a as i128 - b as i128)
    }

    pub fn mul(a: i64, b: i64, fmt: FxpFormat) -> (i64, bool) {
        let wide = a as i128 * b as i128;
        fmt.saturate(shift_round(wide, fmt.frac_bits(), fmt.rounding()))
    }

    /// `None` when `b == 0`.
    pub fn div(a: i64, b: i64, fmt: FxpFormat) -> Option<(i64, bool)> {
        if b == 0 {
            return None;
        }
        let num = (a as i128) << fmt.frac_bits();
        Some(fmt.saturate(div_round(num, b as i128, fmt.rounding())))
    }
}

/// A quantized number together with its format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FxpValue {
    raw: i64,
    format: FxpFormat,
}

impl FxpValue {
    pub fn from_raw(raw: i64, format: FxpFormat) -> Result<Self, FxpError> {
        if raw < format.raw_min() || raw > format.raw_max() {
            return Err(FxpError::RawOutOfRange { raw, format });
        }
        Ok(Self { raw, format })
    }

    /// Nearest representable value under the format's rounding; saturates
    /// out-of-range inputs.
    pub fn from_real(x: f64, format: FxpFormat) -> Result<Self, FxpError> {
        let (raw, _) = raw::from_f64(x, format).ok_or(FxpError::NonFinite(x))?;
        Ok(Self { raw, format })
    }

    pub fn zero(format: FxpFormat) -> Self {
        Self { raw: 0, format }
    }

    /// One, or the saturated maximum when `I = 1` cannot hold it.
    pub fn one(format: FxpFormat) -> Self {
        let (raw, _) = format.saturate(1i128 << format.frac_bits());
        Self { raw, format }
    }

    pub fn raw(&self) -> i64 {
        self.raw
    }

    pub fn format(&self) -> FxpFormat {
        self.format
    }

    /// `raw / 2^F`; exact whenever `|raw| < 2^53`.
    pub fn to_real(&self) -> f64 {
        self.format.real(self.raw)
    }

    fn same_format(&self, other: &Self) -> Result<FxpFormat, FxpError> {
        if self.format != other.format {
            return Err(FxpError::FormatMismatch { left: self.format, right: other.format });
        }
        Ok(self.format)
    }

    pub fn add(self, rhs: Self) -> Result<Self, FxpError> {
        let fmt = self.same_format(&rhs)?;
        let (raw, _) = raw::add(self.raw, rhs.raw, fmt);
        Ok(Self { raw, format: fmt })
    }

    pub fn sub(self, rhs: Self) -> Result<Self, FxpError> {
        let fmt = self.same_format(&rhs)?;
        let (raw, _) = raw::sub(self.raw, rhs.raw, fmt);
        Ok(Self { raw, format: fmt })
    }

    pub fn mul(self, rhs: Self) -> Result<Self, FxpError> {
        let fmt = self.same_format(&rhs)?;
        let (raw, _) = raw::mul(self.raw, rhs.raw, fmt);
        Ok(Self { raw, format: fmt })
    }

    pub fn div(self, rhs: Self) -> Result<Self, FxpError> {
        let fmt = self.same_format(&rhs)?;
        let (raw, _) = raw::div(self.raw, rhs.raw, fmt).ok_or(FxpError::DivByZero)?;
        Ok(Self { raw, format: fmt })
    }
}

impl fmt::Display for FxpValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_real())
    }
}

pub fn fxp_add(a: FxpValue, b: FxpValue) -> Result<FxpValue, FxpError> {
    a.add(b)
}

pub fn fxp_sub(a: FxpValue, b: FxpValue) -> Result<FxpValue, FxpError> {
    a.sub(b)
}

pub fn fxp_mul(a: FxpValue, b: FxpValue) -> Result<FxpValue, FxpError> {
    a.mul(b)
}

pub fn fxp_div(a: FxpValue, b: FxpValue) -> Result<FxpValue, FxpError> {
    a.div(b)
}
