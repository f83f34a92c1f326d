//! Binary payloads for parameters, keys, plaintexts and ciphertexts.
//!
//! Every object starts with `[u32 degree][u32 level]` and continues with its
//! limbs as little-endian `u64` arrays of `degree` entries, NTT form. Framing
//! is left to the caller so several objects can share one frame.

use std::collections::BTreeMap;

use super::eval::{Ciphertext, Plaintext};
use super::keys::{expand_seed, GaloisKeys, KeySwitchKey, PublicKey, RelinKey};
use super::params::{CkksContext, CkksParams};
use super::poly::{data_basis, key_basis, RnsPoly};
use super::CkksError;
use crate::wire::{Reader, Writer};

fn malformed(msg: impl Into<String>) -> CkksError {
    CkksError::Malformed(msg.into())
}

pub fn write_params(w: &mut Writer, p: &CkksParams) {
    w.u32(p.degree as u32).u32(p.modulus_bits.len() as u32);
    for &b in &p.modulus_bits {
        w.u32(b);
    }
    w.f64(p.initial_scale);
}

pub fn read_params(r: &mut Reader<'_>) -> Result<CkksParams, CkksError> {
    let degree = r.u32()? as usize;
    let count = r.u32()? as usize;
    if count > 64 {
        return Err(malformed("modulus chain too long"));
    }
    let modulus_bits = (0..count).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
    let initial_scale = r.f64()?;
    Ok(CkksParams {
        degree,
        modulus_bits,
        initial_scale,
    })
}

fn write_header(w: &mut Writer, ctx: &CkksContext, level: usize) {
    w.u32(ctx.degree() as u32).u32(level as u32);
}

fn read_header(r: &mut Reader<'_>, ctx: &CkksContext) -> Result<usize, CkksError> {
    let degree = r.u32()? as usize;
    if degree != ctx.degree() {
        return Err(malformed(format!(
            "degree {degree}, expected {}",
            ctx.degree()
        )));
    }
    let level = r.u32()? as usize;
    if level == 0 || level > ctx.max_level() {
        return Err(malformed(format!("level {level} outside chain")));
    }
    Ok(level)
}

fn write_poly(w: &mut Writer, p: &RnsPoly) {
    debug_assert!(p.ntt_form);
    for limb in &p.limbs {
        w.u64_slice(limb);
    }
}

fn read_poly(r: &mut Reader<'_>, ctx: &CkksContext, basis: &[usize]) -> Result<RnsPoly, CkksError> {
    let limbs = basis
        .iter()
        .map(|&t| {
            let limb = r.u64_vec(ctx.degree())?;
            let q = ctx.modulus(t).value();
            if limb.iter().any(|&v| v >= q) {
                return Err(malformed("residue out of range"));
            }
            Ok(limb)
        })
        .collect::<Result<Vec<_>, CkksError>>()?;
    Ok(RnsPoly {
        limbs,
        ntt_form: true,
    })
}

pub fn write_plaintext(w: &mut Writer, ctx: &CkksContext, pt: &Plaintext) {
    write_header(w, ctx, pt.level());
    w.f64(pt.scale);
    write_poly(w, &pt.poly);
}

pub fn read_plaintext(r: &mut Reader<'_>, ctx: &CkksContext) -> Result<Plaintext, CkksError> {
    let level = read_header(r, ctx)?;
    let scale = read_scale(r)?;
    let poly = read_poly(r, ctx, &data_basis(level))?;
    Ok(Plaintext { poly, scale })
}

fn read_scale(r: &mut Reader<'_>) -> Result<f64, CkksError> {
    let scale = r.f64()?;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(malformed("invalid scale"));
    }
    Ok(scale)
}

/// Seeded ciphertexts carry `c_0` and the 32-byte seed instead of `c_1`.
pub fn write_ciphertext(w: &mut Writer, ctx: &CkksContext, ct: &Ciphertext) {
    write_header(w, ctx, ct.level());
    w.u8(ct.parts.len() as u8);
    w.f64(ct.scale);
    match ct.seed {
        Some(seed) => {
            w.u8(1);
            write_poly(w, &ct.parts[0]);
            w.bytes(&seed);
        }
        None => {
            w.u8(0);
            for p in &ct.parts {
                write_poly(w, p);
            }
        }
    }
}

pub fn read_ciphertext(r: &mut Reader<'_>, ctx: &CkksContext) -> Result<Ciphertext, CkksError> {
    let level = read_header(r, ctx)?;
    let size = r.u8()? as usize;
    if !(2..=3).contains(&size) {
        return Err(malformed(format!("{size}-component ciphertext")));
    }
    let scale = read_scale(r)?;
    let basis = data_basis(level);
    match r.u8()? {
        1 if size == 2 => {
            let c0 = read_poly(r, ctx, &basis)?;
            let seed: [u8; 32] = r.array()?;
            let c1 = expand_seed(ctx, seed, level);
            Ok(Ciphertext {
                parts: vec![c0, c1],
                scale,
                seed: Some(seed),
            })
        }
        0 => {
            let parts = (0..size)
                .map(|_| read_poly(r, ctx, &basis))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Ciphertext {
                parts,
                scale,
                seed: None,
            })
        }
        f => Err(malformed(format!("seed flag {f}"))),
    }
}

pub fn write_public_key(w: &mut Writer, ctx: &CkksContext, pk: &PublicKey) {
    write_header(w, ctx, pk.p0.level());
    write_poly(w, &pk.p0);
    write_poly(w, &pk.p1);
}

pub fn read_public_key(r: &mut Reader<'_>, ctx: &CkksContext) -> Result<PublicKey, CkksError> {
    let level = read_header(r, ctx)?;
    if level != ctx.max_level() {
        return Err(malformed("public key below full level"));
    }
    let basis = data_basis(level);
    Ok(PublicKey {
        p0: read_poly(r, ctx, &basis)?,
        p1: read_poly(r, ctx, &basis)?,
    })
}

fn write_switch_key(w: &mut Writer, k: &KeySwitchKey) {
    for [b, a] in &k.digits {
        write_poly(w, b);
        write_poly(w, a);
    }
}

fn read_switch_key(r: &mut Reader<'_>, ctx: &CkksContext) -> Result<KeySwitchKey, CkksError> {
    let basis = key_basis(ctx, ctx.max_level());
    let digits = (0..ctx.max_level())
        .map(|_| Ok([read_poly(r, ctx, &basis)?, read_poly(r, ctx, &basis)?]))
        .collect::<Result<Vec<_>, CkksError>>()?;
    Ok(KeySwitchKey { digits })
}

pub fn write_relin_key(w: &mut Writer, ctx: &CkksContext, k: &RelinKey) {
    write_header(w, ctx, ctx.max_level());
    write_switch_key(w, &k.0);
}

pub fn read_relin_key(r: &mut Reader<'_>, ctx: &CkksContext) -> Result<RelinKey, CkksError> {
    let level = read_header(r, ctx)?;
    if level != ctx.max_level() {
        return Err(malformed("relinearization key below full level"));
    }
    Ok(RelinKey(read_switch_key(r, ctx)?))
}

pub fn write_galois_keys(w: &mut Writer, ctx: &CkksContext, gk: &GaloisKeys) {
    write_header(w, ctx, ctx.max_level());
    w.u32(gk.keys.len() as u32);
    for (&step, key) in &gk.keys {
        w.u32(step as u32);
        write_switch_key(w, key);
    }
}

pub fn read_galois_keys(r: &mut Reader<'_>, ctx: &CkksContext) -> Result<GaloisKeys, CkksError> {
    let level = read_header(r, ctx)?;
    if level != ctx.max_level() {
        return Err(malformed("galois keys below full level"));
    }
    let count = r.u32()? as usize;
    if count > ctx.slot_count() {
        return Err(malformed("too many galois keys"));
    }
    let mut keys = BTreeMap::new();
    for _ in 0..count {
        let step = r.u32()? as usize;
        if step == 0 || step >= ctx.slot_count() {
            return Err(malformed(format!("rotation step {step}")));
        }
        keys.insert(step, read_switch_key(r, ctx)?);
    }
    Ok(GaloisKeys { keys })
}
