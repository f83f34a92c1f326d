//! Key generation and key switching.
//!
//! Key switching is RNS-digit decomposition with one auxiliary prime `P`:
//! digit `j` of the input is its residue modulo `q_j`, each key component
//! encrypts `P * s'` in limb `j` only, and the accumulated result is divided
//! by `P` with rounding. Dividing by `P` keeps the switching noise at the
//! level of fresh encryption noise.

use std::collections::BTreeMap;
use std::fmt;

use rand::{CryptoRng, Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use super::params::CkksContext;
use super::poly::{data_basis, key_basis, RnsPoly};
use super::CkksError;

pub const ERROR_STDDEV: f64 = 3.2;
pub const ERROR_BOUND: f64 = 6.0 * ERROR_STDDEV;

pub(crate) fn sample_ternary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<i64> {
    (0..n).map(|_| rng.gen_range(-1i64..=1)).collect()
}

/// Rounded centered Gaussian with tail rejection at six standard deviations.
pub(crate) fn sample_gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<i64> {
    let normal = Normal::new(0.0, ERROR_STDDEV).expect("valid stddev");
    (0..n)
        .map(|_| loop {
            let x: f64 = normal.sample(rng);
            if x.abs() <= ERROR_BOUND {
                break x.round() as i64;
            }
        })
        .collect()
}

/// Uniform polynomial drawn directly in the NTT domain.
pub(crate) fn sample_uniform<R: Rng + ?Sized>(
    ctx: &CkksContext,
    basis: &[usize],
    rng: &mut R,
) -> RnsPoly {
    let n = ctx.degree();
    let limbs = basis
        .iter()
        .map(|&t| {
            let q = ctx.modulus(t).value();
            (0..n).map(|_| rng.gen_range(0..q)).collect()
        })
        .collect();
    RnsPoly {
        limbs,
        ntt_form: true,
    }
}

/// Deterministic expansion of a 32-byte seed into the uniform mask of a
/// seeded ciphertext at `level`.
pub(crate) fn expand_seed(ctx: &CkksContext, seed: [u8; 32], level: usize) -> RnsPoly {
    let mut rng = ChaCha20Rng::from_seed(seed);
    sample_uniform(ctx, &data_basis(level), &mut rng)
}

fn error_poly<R: Rng + ?Sized>(ctx: &CkksContext, basis: &[usize], rng: &mut R) -> RnsPoly {
    let mut e = RnsPoly::from_signed(ctx, &sample_gaussian(ctx.degree(), rng), basis);
    e.to_ntt(ctx, basis);
    e
}

/// Ternary secret, kept in NTT form over the full chain plus `P`.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey {
    pub(crate) ternary: Vec<i64>,
    pub(crate) poly: RnsPoly,
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

impl SecretKey {
    pub(crate) fn from_ternary(ctx: &CkksContext, ternary: Vec<i64>) -> Self {
        let basis = key_basis(ctx, ctx.max_level());
        let mut poly = RnsPoly::from_signed(ctx, &ternary, &basis);
        poly.to_ntt(ctx, &basis);
        Self { ternary, poly }
    }

    /// Secret restricted to the data limbs of `level`.
    pub(crate) fn at_level(&self, level: usize) -> RnsPoly {
        self.poly.select(&data_basis(level))
    }
}

/// Encryption of zero under the secret: `(-a*s + e, a)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    pub(crate) p0: RnsPoly,
    pub(crate) p1: RnsPoly,
}

/// One `(b_j, a_j)` pair per chain prime, over the chain plus `P`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeySwitchKey {
    pub(crate) digits: Vec<[RnsPoly; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelinKey(pub(crate) KeySwitchKey);

/// Rotation keys keyed by slot step, normalized into `[0, slots)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GaloisKeys {
    pub(crate) keys: BTreeMap<usize, KeySwitchKey>,
}

impl GaloisKeys {
    pub fn steps(&self) -> Vec<usize> {
        self.keys.keys().copied().collect()
    }

    pub(crate) fn get(&self, ctx: &CkksContext, step: i64) -> Result<&KeySwitchKey, CkksError> {
        let k = step.rem_euclid(ctx.slot_count() as i64) as usize;
        self.keys
            .get(&k)
            .ok_or(CkksError::MissingRotationStep(step))
    }
}

#[derive(Clone, Debug)]
pub struct KeyMaterial {
    pub secret: SecretKey,
    pub public: PublicKey,
    pub relin: RelinKey,
    pub galois: GaloisKeys,
}

fn gen_switch_key<R: Rng + ?Sized>(
    ctx: &CkksContext,
    sk: &SecretKey,
    target: &RnsPoly,
    rng: &mut R,
) -> KeySwitchKey {
    let level = ctx.max_level();
    let basis = key_basis(ctx, level);
    let p = ctx.special_prime();
    let digits = (0..level)
        .map(|j| {
            let a = sample_uniform(ctx, &basis, rng);
            let mut b = error_poly(ctx, &basis, rng);
            b.sub_assign(ctx, &a.mul(ctx, &sk.poly, &basis), &basis);
            let qj = ctx.modulus(j);
            let p_mod = p % qj.value();
            for (x, &t) in b.limbs[j].iter_mut().zip(&target.limbs[j]) {
                *x = qj.add(*x, qj.mul(p_mod, t));
            }
            [b, a]
        })
        .collect();
    KeySwitchKey { digits }
}

/// Generates all key material. `rotation_steps` lists every slot rotation the
/// evaluator will request; zero steps are ignored.
pub fn keygen<R: RngCore + CryptoRng>(
    ctx: &CkksContext,
    rotation_steps: &[i64],
    rng: &mut R,
) -> KeyMaterial {
    let n = ctx.degree();
    let level = ctx.max_level();
    let secret = SecretKey::from_ternary(ctx, sample_ternary(n, rng));

    let dbasis = data_basis(level);
    let a = sample_uniform(ctx, &dbasis, rng);
    let mut p0 = error_poly(ctx, &dbasis, rng);
    p0.sub_assign(ctx, &a.mul(ctx, &secret.at_level(level), &dbasis), &dbasis);
    let public = PublicKey { p0, p1: a };

    let kbasis = key_basis(ctx, level);
    let s_squared = secret.poly.mul(ctx, &secret.poly, &kbasis);
    let relin = RelinKey(gen_switch_key(ctx, &secret, &s_squared, rng));

    let mut galois = GaloisKeys::default();
    for &step in rotation_steps {
        let k = step.rem_euclid(ctx.slot_count() as i64) as usize;
        if k == 0 || galois.keys.contains_key(&k) {
            continue;
        }
        let g = ctx.encoder().galois_element(k as i64);
        let s_coeff = RnsPoly::from_signed(ctx, &secret.ternary, &kbasis);
        let mut rotated = s_coeff.automorphism(ctx, g, &kbasis);
        rotated.to_ntt(ctx, &kbasis);
        galois
            .keys
            .insert(k, gen_switch_key(ctx, &secret, &rotated, rng));
    }

    KeyMaterial {
        secret,
        public,
        relin,
        galois,
    }
}

/// Switches `d` (coefficient form, data limbs `0..level`) to the secret the
/// key was generated under; returns NTT-form `(u0, u1)` at the same level
/// with `u0 + u1*s = d*s' + small`.
pub(crate) fn key_switch(ctx: &CkksContext, d: &RnsPoly, key: &KeySwitchKey) -> (RnsPoly, RnsPoly) {
    debug_assert!(!d.ntt_form);
    let level = d.level();
    let n = ctx.degree();
    let basis = key_basis(ctx, level);
    let mut acc0 = RnsPoly::zero(n, basis.len(), true);
    let mut acc1 = RnsPoly::zero(n, basis.len(), true);
    let mut lifted = vec![0u64; n];
    for j in 0..level {
        let [b, a] = &key.digits[j];
        let digit = &d.limbs[j];
        for (pos, &t) in basis.iter().enumerate() {
            let q = ctx.modulus(t);
            if t == j {
                lifted.copy_from_slice(digit);
            } else {
                for (dst, &v) in lifted.iter_mut().zip(digit) {
                    *dst = q.reduce(v);
                }
            }
            ctx.table(t).forward(&mut lifted);
            for (r, (x, y)) in acc0.limbs[pos]
                .iter_mut()
                .zip(lifted.iter().zip(&b.limbs[t]))
            {
                *r = q.add(*r, q.mul(*x, *y));
            }
            for (r, (x, y)) in acc1.limbs[pos]
                .iter_mut()
                .zip(lifted.iter().zip(&a.limbs[t]))
            {
                *r = q.add(*r, q.mul(*x, *y));
            }
        }
    }
    (mod_down(ctx, acc0, level), mod_down(ctx, acc1, level))
}

/// Divides a key-basis polynomial by `P` with rounding, dropping the `P` limb.
fn mod_down(ctx: &CkksContext, mut poly: RnsPoly, level: usize) -> RnsPoly {
    let special = ctx.special_index();
    let p = *ctx.modulus(special);
    let mut last = poly.limbs.pop().expect("special limb");
    ctx.table(special).inverse(&mut last);
    let centered: Vec<i64> = last.iter().map(|&v| p.center(v)).collect();
    let mut tmp = vec![0u64; ctx.degree()];
    for i in 0..level {
        let q = ctx.modulus(i);
        for (dst, &c) in tmp.iter_mut().zip(&centered) {
            *dst = q.from_i64(c);
        }
        ctx.table(i).forward(&mut tmp);
        let inv = ctx.special_inv(i);
        for (x, &r) in poly.limbs[i].iter_mut().zip(&tmp) {
            *x = q.mul(q.sub(*x, r), inv);
        }
    }
    poly
}
