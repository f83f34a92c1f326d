//! Signed fixed-point contract shared by the circuits and the plaintext
//! oracle: values are `width`-bit two's-complement integers at scale `S`.
//!
//! Every function here is the exact integer semantics of one netlist kind;
//! circuit tests compare gate-level evaluation against these bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FixedError {
    #[error("{value} does not fit in {width} bits at scale {scale}")]
    Overflow { value: f64, width: u32, scale: u64 },
    #[error("unsupported width {0}")]
    UnsupportedWidth(u32),
    #[error("scale must be at least 1")]
    ZeroScale,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPointSpec {
    pub width: u32,
    pub scale: u64,
}

impl Default for FixedPointSpec {
    fn default() -> Self {
        Self {
            width: 64,
            scale: 1000,
        }
    }
}

impl FixedPointSpec {
    pub fn new(width: u32, scale: u64) -> Result<Self, FixedError> {
        let s = Self { width, scale };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<(), FixedError> {
        if self.width != 32 && self.width != 64 {
            return Err(FixedError::UnsupportedWidth(self.width));
        }
        if self.scale == 0 {
            return Err(FixedError::ZeroScale);
        }
        Ok(())
    }

    /// Reinterprets the low `width` bits as a signed value.
    pub fn wrap(&self, v: i128) -> i64 {
        match self.width {
            32 => v as i32 as i64,
            _ => v as i64,
        }
    }

    /// Low `2*width` bits of a value, sign-extended.
    pub fn wrap_wide(&self, v: i128) -> i128 {
        match self.width {
            32 => v as i64 as i128,
            _ => v,
        }
    }

    fn wide_mask(&self) -> u128 {
        match self.width {
            32 => u64::MAX as u128,
            _ => u128::MAX,
        }
    }

    /// Sigmoid polynomial constants `(c0, c1, c2)` at this scale.
    pub fn sigmoid_constants(&self) -> (i64, i64, i64) {
        let s = self.scale as f64;
        (
            round_half_away(0.5 * s) as i64,
            round_half_away(0.197 * s) as i64,
            round_half_away(0.004 * s) as i64,
        )
    }
}

pub fn round_half_away(x: f64) -> f64 {
    // f64::round already rounds half away from zero.
    x.round()
}

pub fn fixed_encode(v: f64, spec: FixedPointSpec) -> Result<i64, FixedError> {
    let scaled = round_half_away(v * spec.scale as f64);
    let limit = 2f64.powi(spec.width as i32 - 1);
    if !scaled.is_finite() || scaled >= limit || scaled < -limit {
        return Err(FixedError::Overflow {
            value: v,
            width: spec.width,
            scale: spec.scale,
        });
    }
    Ok(scaled as i64)
}

pub fn fixed_decode(v: i64, spec: FixedPointSpec) -> f64 {
    v as f64 / spec.scale as f64
}

pub fn add(spec: FixedPointSpec, a: i64, b: i64) -> i64 {
    spec.wrap(a as i128 + b as i128)
}

pub fn sub(spec: FixedPointSpec, a: i64, b: i64) -> i64 {
    spec.wrap(a as i128 - b as i128)
}

/// Full-width signed product (`2*width` bits, exact).
pub fn mul_wide(spec: FixedPointSpec, a: i64, b: i64) -> i128 {
    spec.wrap_wide(a as i128 * b as i128)
}

/// Truncating (toward zero) division of a `2*width`-bit value by `S`,
/// keeping the low `width` bits.
pub fn divscale(spec: FixedPointSpec, v: i128) -> i64 {
    let v = spec.wrap_wide(v);
    let mag = v.unsigned_abs() & spec.wide_mask();
    let q = (mag / spec.scale as u128) as i128;
    spec.wrap(if v < 0 { q.wrapping_neg() } else { q })
}

/// `MUL` followed by `DIVSCALE`.
pub fn mul(spec: FixedPointSpec, a: i64, b: i64) -> i64 {
    divscale(spec, mul_wide(spec, a, b))
}

pub fn relu(_spec: FixedPointSpec, z: i64) -> i64 {
    if z < 0 {
        0
    } else {
        z
    }
}

/// `c0 + trunc(c1*Z/S) - trunc(c2*Z^2/S^2)`; `Z^2` is the unsigned square of
/// `|Z|` over `2*width` bits and the `c2` term is formed modulo `2^(2*width)`.
pub fn sigmoid(spec: FixedPointSpec, z: i64) -> i64 {
    let (c0, c1, c2) = spec.sigmoid_constants();
    let mask = spec.wide_mask();
    let s = spec.scale as u128;
    let t1 = divscale(spec, mul_wide(spec, c1, z));
    let mag = (z.unsigned_abs() as u128) & mask;
    let sq = mag.wrapping_mul(mag) & mask;
    let prod = (c2 as u128).wrapping_mul(sq) & mask;
    let t2 = spec.wrap((prod / (s * s)) as i128);
    spec.wrap(c0 as i128 + t1 as i128 - t2 as i128)
}
