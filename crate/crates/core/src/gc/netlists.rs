//! Precompiled netlists, one per operation kind and fixed-point spec.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::circuit::{BooleanCircuit, Builder};
use super::fixed::{FixedError, FixedPointSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NetlistKind {
    /// `w + w -> w`, wrapping.
    Add,
    /// `w - w -> w`, wrapping.
    Sub,
    /// `w x w -> 2w`, exact signed product.
    Mul,
    /// `2w -> w`, truncating signed division by `S`.
    DivScale,
    /// `w -> w`.
    Relu,
    /// `w -> w`, degree-2 sigmoid approximation.
    Poly2Sigmoid,
    /// `rows*cols` weights then `cols` inputs, `-> rows` words of `w` bits:
    /// `sum_j divscale(W_ij * x_j)` per row.
    MatVec { rows: usize, cols: usize },
}

impl fmt::Display for NetlistKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetlistKind::Add => f.write_str("ADD"),
            NetlistKind::Sub => f.write_str("SUB"),
            NetlistKind::Mul => f.write_str("MUL"),
            NetlistKind::DivScale => f.write_str("DIVSCALE"),
            NetlistKind::Relu => f.write_str("RELU"),
            NetlistKind::Poly2Sigmoid => f.write_str("POLY2_SIGMOID"),
            NetlistKind::MatVec { rows, cols } => write!(f, "MATVEC({rows},{cols})"),
        }
    }
}

impl NetlistKind {
    /// Bit widths of the operand buses.
    pub fn input_widths(&self, spec: FixedPointSpec) -> Vec<usize> {
        let w = spec.width as usize;
        match *self {
            NetlistKind::Add | NetlistKind::Sub | NetlistKind::Mul => vec![w, w],
            NetlistKind::DivScale => vec![2 * w],
            NetlistKind::Relu | NetlistKind::Poly2Sigmoid => vec![w],
            NetlistKind::MatVec { rows, cols } => vec![w; rows * cols + cols],
        }
    }

    pub fn output_width(&self, spec: FixedPointSpec) -> usize {
        let w = spec.width as usize;
        match *self {
            NetlistKind::Mul => 2 * w,
            NetlistKind::MatVec { rows, .. } => rows * w,
            _ => w,
        }
    }
}

pub fn build_netlist(
    kind: NetlistKind,
    spec: FixedPointSpec,
) -> Result<BooleanCircuit, FixedError> {
    spec.check()?;
    let w = spec.width as usize;
    let s = spec.scale as u128;
    let mut b = Builder::new();
    let out = match kind {
        NetlistKind::Add => {
            let x = b.input(w);
            let y = b.input(w);
            b.add(&x, &y)
        }
        NetlistKind::Sub => {
            let x = b.input(w);
            let y = b.input(w);
            b.sub(&x, &y)
        }
        NetlistKind::Mul => {
            let x = b.input(w);
            let y = b.input(w);
            b.mul_signed_wide(&x, &y)
        }
        NetlistKind::DivScale => {
            let x = b.input(2 * w);
            b.sdiv_const(&x, s, w)
        }
        NetlistKind::Relu => {
            let x = b.input(w);
            let keep = b.not(x[w - 1]);
            x.iter().map(|&bit| b.and(bit, keep)).collect()
        }
        NetlistKind::Poly2Sigmoid => {
            let z = b.input(w);
            sigmoid(&mut b, &z, spec)
        }
        NetlistKind::MatVec { rows, cols } => {
            let weights: Vec<_> = (0..rows * cols).map(|_| b.input(w)).collect();
            let xs: Vec<_> = (0..cols).map(|_| b.input(w)).collect();
            let mut out = Vec::with_capacity(rows * w);
            for r in 0..rows {
                let mut acc: Option<Vec<_>> = None;
                for c in 0..cols {
                    let p = b.mul_signed_wide(&weights[r * cols + c], &xs[c]);
                    let q = b.sdiv_const(&p, s, w);
                    acc = Some(match acc {
                        None => q,
                        Some(a) => b.add(&a, &q),
                    });
                }
                out.extend(acc.unwrap_or_else(|| b.constant(0, w)));
            }
            out
        }
    };
    Ok(b.finish(&out))
}

fn sigmoid(
    b: &mut Builder,
    z: &[super::circuit::Bit],
    spec: FixedPointSpec,
) -> Vec<super::circuit::Bit> {
    let w = z.len();
    let s = spec.scale as u128;
    let (c0, c1, c2) = spec.sigmoid_constants();
    let mask: u128 = if w == 64 {
        u64::MAX as u128
    } else {
        (1u128 << w) - 1
    };

    let c1_word = b.constant(c1 as u128 & mask, w);
    let p1 = b.mul_signed_wide(&c1_word, z);
    let t1 = b.sdiv_const(&p1, s, w);

    let sign = z[w - 1];
    let mag = b.cond_neg(z, sign);
    let sq = b.mul_unsigned(&mag, &mag, 2 * w);
    let c2_word = b.constant(c2 as u128, 2 * w);
    let prod = b.mul_unsigned(&c2_word, &sq, 2 * w);
    let q = b.udiv_const(&prod, s * s);
    let t2 = q[..w].to_vec();

    let c0_word = b.constant(c0 as u128 & mask, w);
    let acc = b.add(&c0_word, &t1);
    b.sub(&acc, &t2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gc::fixed;

    fn spec() -> FixedPointSpec {
        FixedPointSpec::default()
    }

    fn run(kind: NetlistKind, ops: &[i128]) -> u128 {
        let c = build_netlist(kind, spec()).unwrap();
        let ops: Vec<u128> = ops.iter().map(|&v| v as u128).collect();
        c.eval_words(&ops).unwrap()
    }

    #[test]
    fn small_examples() {
        let s = spec();
        assert_eq!(run(NetlistKind::Add, &[1234, -234]) as u64 as i64, 1000);
        assert_eq!(run(NetlistKind::Relu, &[-2000]) as u64 as i64, 0);
        assert_eq!(run(NetlistKind::Relu, &[2000]) as u64 as i64, 2000);
        assert_eq!(run(NetlistKind::Poly2Sigmoid, &[0]) as u64 as i64, 500);
        assert_eq!(run(NetlistKind::Poly2Sigmoid, &[1000]) as u64 as i64, 693);
        let p = run(NetlistKind::Mul, &[1500, -1500]) as i128;
        assert_eq!(p, fixed::mul_wide(s, 1500, -1500));
        assert_eq!(run(NetlistKind::DivScale, &[-1999]) as u64 as i64, -1);
    }

    #[test]
    fn circuits_validate_and_are_deterministic() {
        for kind in [
            NetlistKind::Add,
            NetlistKind::Sub,
            NetlistKind::Mul,
            NetlistKind::DivScale,
            NetlistKind::Relu,
            NetlistKind::Poly2Sigmoid,
            NetlistKind::MatVec { rows: 2, cols: 3 },
        ] {
            let a = build_netlist(kind, spec()).unwrap();
            a.validate().unwrap();
            assert_eq!(a, build_netlist(kind, spec()).unwrap());
            assert_eq!(a.outputs.len(), kind.output_width(spec()));
        }
    }
}
