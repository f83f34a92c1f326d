//! Plaintexts, ciphertexts and the homomorphic operations on them.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::{CryptoRng, RngCore};

use super::keys::{
    expand_seed, key_switch, sample_gaussian, sample_ternary, GaloisKeys, PublicKey, RelinKey,
    SecretKey,
};
use super::params::CkksContext;
use super::poly::{data_basis, RnsPoly};
use super::CkksError;

/// Relative tolerance under which two scales count as equal.
pub const SCALE_TOLERANCE: f64 = 1.0 / (1u64 << 20) as f64;

/// Encoded slot vector, stored in NTT form.
#[derive(Clone, Debug, PartialEq)]
pub struct Plaintext {
    pub(crate) poly: RnsPoly,
    pub(crate) scale: f64,
}

impl Plaintext {
    pub fn level(&self) -> usize {
        self.poly.level()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn poly(&self) -> &RnsPoly {
        &self.poly
    }
}

/// Components `c_0, c_1[, c_2]` in NTT form. A seeded ciphertext keeps the
/// seed its `c_1` was expanded from so serialization can send the seed alone.
#[derive(Clone, Debug, PartialEq)]
pub struct Ciphertext {
    pub(crate) parts: Vec<RnsPoly>,
    pub(crate) scale: f64,
    pub(crate) seed: Option<[u8; 32]>,
}

impl Ciphertext {
    pub fn level(&self) -> usize {
        self.parts[0].level()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn size(&self) -> usize {
        self.parts.len()
    }

    pub fn is_seeded(&self) -> bool {
        self.seed.is_some()
    }

    pub fn parts(&self) -> &[RnsPoly] {
        &self.parts
    }

    fn unseeded(mut self) -> Self {
        self.seed = None;
        self
    }
}

fn scales_match(a: f64, b: f64) -> bool {
    ((a - b) / a.max(b)).abs() <= SCALE_TOLERANCE
}

fn check_pair(a: (usize, f64), b: (usize, f64)) -> Result<(), CkksError> {
    if a.0 != b.0 {
        return Err(CkksError::LevelMismatch(a.0, b.0));
    }
    if !scales_match(a.1, b.1) {
        return Err(CkksError::ScaleMismatch(a.1, b.1));
    }
    Ok(())
}

impl CkksContext {
    fn check_level(&self, level: usize) -> Result<(), CkksError> {
        if level == 0 || level > self.max_level() {
            return Err(CkksError::Malformed(format!("level {level} outside chain")));
        }
        Ok(())
    }

    /// Total bits of the primes active at `level`.
    pub fn level_bits(&self, level: usize) -> f64 {
        (0..level).map(|i| (self.prime_at(i) as f64).log2()).sum()
    }

    /// Encodes up to `slot_count` reals; missing slots are zero.
    pub fn encode(&self, values: &[f64], scale: f64, level: usize) -> Result<Plaintext, CkksError> {
        self.check_level(level)?;
        if values.len() > self.slot_count() {
            return Err(CkksError::TooManyValues {
                given: values.len(),
                slots: self.slot_count(),
            });
        }
        if !(scale.is_finite() && scale >= 1.0) {
            return Err(CkksError::ScaleOutOfRange(scale));
        }
        let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !peak.is_finite() {
            return Err(CkksError::Malformed("non-finite value".into()));
        }
        let needed = (peak * scale).max(1.0).log2() + 2.0;
        if needed >= self.level_bits(level).min(126.0) {
            return Err(CkksError::ScaleOutOfRange(scale));
        }
        let coeffs = self.encoder().encode_coeffs(values, scale);
        let basis = data_basis(level);
        let mut poly = RnsPoly::from_wide(self, &coeffs, &basis);
        poly.to_ntt(self, &basis);
        Ok(Plaintext { poly, scale })
    }

    pub fn decode(&self, pt: &Plaintext) -> Vec<f64> {
        let level = pt.level();
        let basis = data_basis(level);
        let mut poly = pt.poly.clone();
        poly.to_coeff(self, &basis);
        let centered = self.crt_centered(&poly);
        self.encoder().decode_coeffs(&centered, pt.scale)
    }

    /// Reconstructs each coefficient modulo the active product and returns
    /// its centered value as a float.
    fn crt_centered(&self, poly: &RnsPoly) -> Vec<f64> {
        let level = poly.level();
        let n = poly.degree();
        if level == 1 {
            let q = self.modulus(0);
            return poly.limbs[0].iter().map(|&v| q.center(v) as f64).collect();
        }
        let primes: Vec<u64> = (0..level).map(|i| self.prime_at(i)).collect();
        let big_q = primes
            .iter()
            .fold(BigUint::from(1u32), |acc, &p| acc * BigUint::from(p));
        let half = &big_q >> 1;
        let partials: Vec<(BigUint, u64)> = primes
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let qi_hat = &big_q / BigUint::from(p);
                let m = self.modulus(i);
                let rem = (&qi_hat % BigUint::from(p)).to_u64().unwrap();
                (qi_hat, m.inv(rem))
            })
            .collect();
        (0..n)
            .map(|k| {
                let mut acc = BigUint::zero();
                for (i, (qi_hat, inv)) in partials.iter().enumerate() {
                    let m = self.modulus(i);
                    let t = m.mul(poly.limbs[i][k], *inv);
                    acc += qi_hat * t;
                }
                acc %= &big_q;
                if acc > half {
                    -(&big_q - acc).to_f64().unwrap()
                } else {
                    acc.to_f64().unwrap()
                }
            })
            .collect()
    }

    /// Public-key encryption: `(p0*u + e0 + m, p1*u + e1)`.
    pub fn encrypt<R: RngCore + CryptoRng>(
        &self,
        pt: &Plaintext,
        pk: &PublicKey,
        rng: &mut R,
    ) -> Ciphertext {
        let level = pt.level();
        let basis = data_basis(level);
        let n = self.degree();
        let mut u = RnsPoly::from_signed(self, &sample_ternary(n, rng), &basis);
        u.to_ntt(self, &basis);
        let mut e0 = RnsPoly::from_signed(self, &sample_gaussian(n, rng), &basis);
        e0.to_ntt(self, &basis);
        let mut e1 = RnsPoly::from_signed(self, &sample_gaussian(n, rng), &basis);
        e1.to_ntt(self, &basis);
        let mut p0 = pk.p0.clone();
        p0.truncate(level);
        let mut p1 = pk.p1.clone();
        p1.truncate(level);
        let mut c0 = p0.mul(self, &u, &basis);
        c0.add_assign(self, &e0, &basis);
        c0.add_assign(self, &pt.poly, &basis);
        let mut c1 = p1.mul(self, &u, &basis);
        c1.add_assign(self, &e1, &basis);
        Ciphertext {
            parts: vec![c0, c1],
            scale: pt.scale,
            seed: None,
        }
    }

    /// Secret-key encryption `(-a*s + e + m, a)` with `a` expanded from a
    /// fresh 32-byte seed.
    pub fn encrypt_symmetric<R: RngCore + CryptoRng>(
        &self,
        pt: &Plaintext,
        sk: &SecretKey,
        rng: &mut R,
    ) -> Ciphertext {
        let level = pt.level();
        let basis = data_basis(level);
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        let a = expand_seed(self, seed, level);
        let mut e = RnsPoly::from_signed(self, &sample_gaussian(self.degree(), rng), &basis);
        e.to_ntt(self, &basis);
        let mut c0 = pt.poly.clone();
        c0.add_assign(self, &e, &basis);
        c0.sub_assign(self, &a.mul(self, &sk.at_level(level), &basis), &basis);
        Ciphertext {
            parts: vec![c0, a],
            scale: pt.scale,
            seed: Some(seed),
        }
    }

    /// `c0 + c1*s (+ c2*s^2)`.
    pub fn decrypt(&self, ct: &Ciphertext, sk: &SecretKey) -> Plaintext {
        let level = ct.level();
        let basis = data_basis(level);
        let s = sk.at_level(level);
        let mut acc = ct.parts[0].clone();
        let mut s_pow = s.clone();
        for part in &ct.parts[1..] {
            acc.mul_acc(self, part, &s_pow, &basis);
            s_pow = s_pow.mul(self, &s, &basis);
        }
        Plaintext {
            poly: acc,
            scale: ct.scale,
        }
    }

    pub fn decrypt_decode(&self, ct: &Ciphertext, sk: &SecretKey) -> Vec<f64> {
        self.decode(&self.decrypt(ct, sk))
    }

    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext, CkksError> {
        check_pair((a.level(), a.scale), (b.level(), b.scale))?;
        let basis = data_basis(a.level());
        let (mut out, other) = if a.size() >= b.size() {
            (a.clone(), b)
        } else {
            (b.clone(), a)
        };
        for (p, q) in out.parts.iter_mut().zip(&other.parts) {
            p.add_assign(self, q, &basis);
        }
        Ok(out.unseeded())
    }

    pub fn sub(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext, CkksError> {
        self.add(a, &self.negate(b))
    }

    pub fn negate(&self, a: &Ciphertext) -> Ciphertext {
        let basis = data_basis(a.level());
        let mut out = a.clone().unseeded();
        for p in &mut out.parts {
            p.neg_assign(self, &basis);
        }
        out
    }

    pub fn add_plain(&self, a: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext, CkksError> {
        check_pair((a.level(), a.scale), (pt.level(), pt.scale))?;
        let basis = data_basis(a.level());
        let mut out = a.clone().unseeded();
        out.parts[0].add_assign(self, &pt.poly, &basis);
        Ok(out)
    }

    /// Adds `value` to every slot, encoded at the ciphertext's own scale.
    pub fn add_const(&self, a: &Ciphertext, value: f64) -> Ciphertext {
        let level = a.level();
        let scaled = (value * a.scale).round() as i128;
        let mut out = a.clone().unseeded();
        for i in 0..level {
            let q = self.modulus(i);
            let c = q.from_i128(scaled);
            // A constant polynomial is the same constant at every NTT point.
            for x in out.parts[0].limbs[i].iter_mut() {
                *x = q.add(*x, c);
            }
        }
        out
    }

    /// Ciphertext product, three components, scale `a.scale * b.scale`.
    pub fn multiply(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext, CkksError> {
        if a.level() != b.level() {
            return Err(CkksError::LevelMismatch(a.level(), b.level()));
        }
        if a.size() != 2 || b.size() != 2 {
            return Err(CkksError::Malformed(
                "multiply needs 2-component inputs".into(),
            ));
        }
        if a.level() < 2 {
            return Err(CkksError::LevelExhausted);
        }
        let basis = data_basis(a.level());
        let c0 = a.parts[0].mul(self, &b.parts[0], &basis);
        let mut c1 = a.parts[0].mul(self, &b.parts[1], &basis);
        c1.mul_acc(self, &a.parts[1], &b.parts[0], &basis);
        let c2 = a.parts[1].mul(self, &b.parts[1], &basis);
        Ok(Ciphertext {
            parts: vec![c0, c1, c2],
            scale: a.scale * b.scale,
            seed: None,
        })
    }

    pub fn relinearize(&self, ct: &Ciphertext, rlk: &RelinKey) -> Result<Ciphertext, CkksError> {
        match ct.size() {
            2 => Ok(ct.clone()),
            3 => {
                let level = ct.level();
                let basis = data_basis(level);
                let mut d = ct.parts[2].clone();
                d.to_coeff(self, &basis);
                let (u0, u1) = key_switch(self, &d, &rlk.0);
                let mut c0 = ct.parts[0].clone();
                c0.add_assign(self, &u0, &basis);
                let mut c1 = ct.parts[1].clone();
                c1.add_assign(self, &u1, &basis);
                Ok(Ciphertext {
                    parts: vec![c0, c1],
                    scale: ct.scale,
                    seed: None,
                })
            }
            k => Err(CkksError::Malformed(format!("{k}-component ciphertext"))),
        }
    }

    /// Ciphertext product followed by relinearization.
    pub fn eval_mul(
        &self,
        a: &Ciphertext,
        b: &Ciphertext,
        rlk: &RelinKey,
    ) -> Result<Ciphertext, CkksError> {
        self.relinearize(&self.multiply(a, b)?, rlk)
    }

    pub fn square(&self, a: &Ciphertext, rlk: &RelinKey) -> Result<Ciphertext, CkksError> {
        self.eval_mul(a, a, rlk)
    }

    pub fn mul_plain(&self, a: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext, CkksError> {
        if a.level() != pt.level() {
            return Err(CkksError::LevelMismatch(a.level(), pt.level()));
        }
        if a.level() < 2 {
            return Err(CkksError::LevelExhausted);
        }
        let basis = data_basis(a.level());
        Ok(Ciphertext {
            parts: a
                .parts
                .iter()
                .map(|p| p.mul(self, &pt.poly, &basis))
                .collect(),
            scale: a.scale * pt.scale,
            seed: None,
        })
    }

    /// Encodes `values` so that `mul_plain` with `ct` followed by one rescale
    /// lands at `target_scale`.
    pub fn encode_for_product(
        &self,
        values: &[f64],
        ct: &Ciphertext,
        target_scale: f64,
    ) -> Result<Plaintext, CkksError> {
        let level = ct.level();
        if level < 2 {
            return Err(CkksError::LevelExhausted);
        }
        let dropped = self.prime_at(level - 1) as f64;
        self.encode(values, target_scale * dropped / ct.scale, level)
    }

    /// Encodes `values` at the ciphertext's level and scale, ready for
    /// `add_plain`.
    pub fn encode_like(&self, values: &[f64], ct: &Ciphertext) -> Result<Plaintext, CkksError> {
        self.encode(values, ct.scale, ct.level())
    }

    /// Divides by the last active prime with rounding and drops it.
    pub fn rescale(&self, ct: &Ciphertext) -> Result<Ciphertext, CkksError> {
        let level = ct.level();
        if level < 2 {
            return Err(CkksError::LevelExhausted);
        }
        let last = level - 1;
        let ql = *self.modulus(last);
        let mut tmp = vec![0u64; self.degree()];
        let parts = ct
            .parts
            .iter()
            .map(|p| {
                let mut p = p.clone();
                let mut top = p.limbs.pop().expect("limb");
                self.table(last).inverse(&mut top);
                let centered: Vec<i64> = top.iter().map(|&v| ql.center(v)).collect();
                for i in 0..last {
                    let q = self.modulus(i);
                    for (dst, &c) in tmp.iter_mut().zip(&centered) {
                        *dst = q.from_i64(c);
                    }
                    self.table(i).forward(&mut tmp);
                    let inv = self.drop_inv(last, i);
                    for (x, &r) in p.limbs[i].iter_mut().zip(&tmp) {
                        *x = q.mul(q.sub(*x, r), inv);
                    }
                }
                p
            })
            .collect();
        Ok(Ciphertext {
            parts,
            scale: ct.scale / ql.value() as f64,
            seed: None,
        })
    }

    /// Drops primes without dividing, keeping the scale.
    pub fn mod_drop_to(&self, ct: &Ciphertext, level: usize) -> Result<Ciphertext, CkksError> {
        if level == 0 || level > ct.level() {
            return Err(CkksError::LevelMismatch(ct.level(), level));
        }
        let mut out = ct.clone().unseeded();
        for p in &mut out.parts {
            p.truncate(level);
        }
        Ok(out)
    }

    /// Cyclic left rotation of the slot vector by `step`.
    pub fn rotate(
        &self,
        ct: &Ciphertext,
        step: i64,
        gk: &GaloisKeys,
    ) -> Result<Ciphertext, CkksError> {
        if step.rem_euclid(self.slot_count() as i64) == 0 {
            return Ok(ct.clone());
        }
        if ct.size() != 2 {
            return Err(CkksError::Malformed(
                "rotate needs 2-component input".into(),
            ));
        }
        let key = gk.get(self, step)?;
        let level = ct.level();
        let basis = data_basis(level);
        let g = self.encoder().galois_element(step);
        let mut c0 = ct.parts[0].clone();
        c0.to_coeff(self, &basis);
        let mut c0 = c0.automorphism(self, g, &basis);
        c0.to_ntt(self, &basis);
        let mut c1 = ct.parts[1].clone();
        c1.to_coeff(self, &basis);
        let c1 = c1.automorphism(self, g, &basis);
        let (u0, u1) = key_switch(self, &c1, key);
        c0.add_assign(self, &u0, &basis);
        Ok(Ciphertext {
            parts: vec![c0, u1],
            scale: ct.scale,
            seed: None,
        })
    }
}
