//! Residue-number-system polynomials: one coefficient vector per prime.
//!
//! Limb `k` of a polynomial is reduced modulo the prime whose table index is
//! `basis[k]`. Ciphertext polynomials use the chain prefix `0..level`; key
//! material additionally carries the key-switching prime as its last limb.

use super::params::CkksContext;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RnsPoly {
    pub(crate) limbs: Vec<Vec<u64>>,
    pub(crate) ntt_form: bool,
}

/// Table indices for a data polynomial at `level`.
pub(crate) fn data_basis(level: usize) -> Vec<usize> {
    (0..level).collect()
}

/// Table indices for a key-switching polynomial at `level`.
pub(crate) fn key_basis(ctx: &CkksContext, level: usize) -> Vec<usize> {
    let mut b: Vec<usize> = (0..level).collect();
    b.push(ctx.special_index());
    b
}

impl RnsPoly {
    pub fn zero(n: usize, limbs: usize, ntt_form: bool) -> Self {
        Self {
            limbs: vec![vec![0u64; n]; limbs],
            ntt_form,
        }
    }

    /// Reduces signed integer coefficients into every limb of `basis`.
    pub(crate) fn from_signed(ctx: &CkksContext, coeffs: &[i64], basis: &[usize]) -> Self {
        let limbs = basis
            .iter()
            .map(|&t| {
                let q = ctx.modulus(t);
                coeffs.iter().map(|&c| q.from_i64(c)).collect()
            })
            .collect();
        Self {
            limbs,
            ntt_form: false,
        }
    }

    pub(crate) fn from_wide(ctx: &CkksContext, coeffs: &[i128], basis: &[usize]) -> Self {
        let limbs = basis
            .iter()
            .map(|&t| {
                let q = ctx.modulus(t);
                coeffs.iter().map(|&c| q.from_i128(c)).collect()
            })
            .collect();
        Self {
            limbs,
            ntt_form: false,
        }
    }

    pub fn level(&self) -> usize {
        self.limbs.len()
    }

    pub fn degree(&self) -> usize {
        self.limbs.first().map_or(0, Vec::len)
    }

    pub fn is_ntt_form(&self) -> bool {
        self.ntt_form
    }

    pub fn limb(&self, k: usize) -> &[u64] {
        &self.limbs[k]
    }

    pub(crate) fn to_ntt(&mut self, ctx: &CkksContext, basis: &[usize]) {
        if !self.ntt_form {
            for (limb, &t) in self.limbs.iter_mut().zip(basis) {
                ctx.table(t).forward(limb);
            }
            self.ntt_form = true;
        }
    }

    pub(crate) fn to_coeff(&mut self, ctx: &CkksContext, basis: &[usize]) {
        if self.ntt_form {
            for (limb, &t) in self.limbs.iter_mut().zip(basis) {
                ctx.table(t).inverse(limb);
            }
            self.ntt_form = false;
        }
    }

    pub(crate) fn add_assign(&mut self, ctx: &CkksContext, other: &RnsPoly, basis: &[usize]) {
        debug_assert_eq!(self.ntt_form, other.ntt_form);
        for ((a, b), &t) in self.limbs.iter_mut().zip(&other.limbs).zip(basis) {
            let q = ctx.modulus(t);
            for (x, y) in a.iter_mut().zip(b) {
                *x = q.add(*x, *y);
            }
        }
    }

    pub(crate) fn sub_assign(&mut self, ctx: &CkksContext, other: &RnsPoly, basis: &[usize]) {
        debug_assert_eq!(self.ntt_form, other.ntt_form);
        for ((a, b), &t) in self.limbs.iter_mut().zip(&other.limbs).zip(basis) {
            let q = ctx.modulus(t);
            for (x, y) in a.iter_mut().zip(b) {
                *x = q.sub(*x, *y);
            }
        }
    }

    pub(crate) fn neg_assign(&mut self, ctx: &CkksContext, basis: &[usize]) {
        for (a, &t) in self.limbs.iter_mut().zip(basis) {
            let q = ctx.modulus(t);
            for x in a.iter_mut() {
                *x = q.neg(*x);
            }
        }
    }

    /// Pointwise product; both operands must be in NTT form.
    pub(crate) fn mul(&self, ctx: &CkksContext, other: &RnsPoly, basis: &[usize]) -> RnsPoly {
        debug_assert!(self.ntt_form && other.ntt_form);
        let limbs = self
            .limbs
            .iter()
            .zip(&other.limbs)
            .zip(basis)
            .map(|((a, b), &t)| {
                let q = ctx.modulus(t);
                a.iter().zip(b).map(|(x, y)| q.mul(*x, *y)).collect()
            })
            .collect();
        RnsPoly {
            limbs,
            ntt_form: true,
        }
    }

    pub(crate) fn mul_acc(&mut self, ctx: &CkksContext, a: &RnsPoly, b: &RnsPoly, basis: &[usize]) {
        for (((acc, x), y), &t) in self.limbs.iter_mut().zip(&a.limbs).zip(&b.limbs).zip(basis) {
            let q = ctx.modulus(t);
            for ((r, u), v) in acc.iter_mut().zip(x).zip(y) {
                *r = q.add(*r, q.mul(*u, *v));
            }
        }
    }

    /// Keeps only the first `level` limbs.
    pub(crate) fn truncate(&mut self, level: usize) {
        self.limbs.truncate(level);
    }

    /// Selects limbs by position (used to restrict key material to a level).
    pub(crate) fn select(&self, positions: &[usize]) -> RnsPoly {
        RnsPoly {
            limbs: positions.iter().map(|&p| self.limbs[p].clone()).collect(),
            ntt_form: self.ntt_form,
        }
    }

    /// Applies `X -> X^g` to a coefficient-form polynomial.
    pub(crate) fn automorphism(&self, ctx: &CkksContext, g: usize, basis: &[usize]) -> RnsPoly {
        debug_assert!(!self.ntt_form);
        let n = self.degree();
        let two_n = 2 * n;
        let limbs = self
            .limbs
            .iter()
            .zip(basis)
            .map(|(a, &t)| {
                let q = ctx.modulus(t);
                let mut out = vec![0u64; n];
                for (i, &c) in a.iter().enumerate() {
                    let j = i * g % two_n;
                    if j < n {
                        out[j] = c;
                    } else {
                        out[j - n] = q.neg(c);
                    }
                }
                out
            })
            .collect();
        RnsPoly {
            limbs,
            ntt_form: false,
        }
    }
}
