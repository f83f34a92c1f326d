//! Non-interactive encrypted inference: the client sends keys and an
//! encrypted input in one message, the server evaluates the approximated
//! network homomorphically and returns one ciphertext.
//!
//! Level budget on the server (one level per line):
//!
//! 1. `W1` row products, rotate-and-sum, rescale;
//! 2. squaring activation, rescale;
//! 3. `W2` products, forming both `u = W2 h + b2` and
//!    `t = -0.004 u + 0.197`, rescale;
//! 4. `u * t`, rescale, plus `0.5`.

use std::sync::Arc;

use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::ckks::{
    self, keygen, validate_params, Ciphertext, CkksContext, CkksError, CkksParams, GaloisKeys,
    KeyMaterial, KeySwitchKey, PublicKey, RelinKey, RnsPoly, SecretKey,
};
use crate::model::{ModelParams, INPUT_DIM};
use crate::transport::{Endpoint, TransportError};
use crate::wire::{kind, Reader, WireError, Writer};

/// Rotation steps used by the length-3 rotate-and-sum.
pub const ROTATION_STEPS: [i64; 2] = [1, 2];

/// Multiplicative levels consumed by `server_infer`.
pub const SERVER_DEPTH: usize = 4;

#[derive(Debug, Error)]
pub enum FheError {
    #[error(transparent)]
    Ckks(#[from] CkksError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("input must have {INPUT_DIM} entries, got {0}")]
    InputDim(usize),
    #[error("model input dimension {0} is not {INPUT_DIM}")]
    ModelDim(usize),
    #[error("setup message carries no keys and none are cached")]
    MissingKeys,
    #[error("parameters differ from the cached session")]
    ParamsChanged,
}

/// Evaluation keys the server needs; never includes the secret key.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalKeys {
    pub public: PublicKey,
    pub relin: RelinKey,
    pub galois: GaloisKeys,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FheSetupMessage {
    pub params: CkksParams,
    /// `None` when the server reuses keys from an earlier message.
    pub keys: Option<EvalKeys>,
    pub enc_x: Ciphertext,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FheResultMessage {
    pub enc_y: Ciphertext,
}

/// Client-side state kept between setup and finish.
pub struct FheClient {
    ctx: Arc<CkksContext>,
    secret: SecretKey,
    /// Handed to the first setup message that asks for keys.
    eval: Option<EvalKeys>,
}

impl FheClient {
    pub fn new<R: RngCore + CryptoRng>(params: &CkksParams, rng: &mut R) -> Result<Self, FheError> {
        let ctx = validate_params(params)?;
        let KeyMaterial {
            secret,
            public,
            relin,
            galois,
        } = keygen(&ctx, &ROTATION_STEPS, rng);
        Ok(Self {
            ctx,
            secret,
            eval: Some(EvalKeys {
                public,
                relin,
                galois,
            }),
        })
    }

    pub fn context(&self) -> &Arc<CkksContext> {
        &self.ctx
    }

    pub fn secret_key(&self) -> &SecretKey {
        &self.secret
    }

    /// The evaluation keys, until a setup message has taken them.
    pub fn eval_keys(&self) -> Option<&EvalKeys> {
        self.eval.as_ref()
    }

    /// Encrypts `x` at full level. With `with_keys` the evaluation keys move
    /// into the message; they can be sent once per client.
    pub fn setup<R: RngCore + CryptoRng>(
        &mut self,
        x: &[f64],
        with_keys: bool,
        rng: &mut R,
    ) -> Result<FheSetupMessage, FheError> {
        if x.len() != INPUT_DIM {
            return Err(FheError::InputDim(x.len()));
        }
        let keys = if with_keys {
            Some(self.eval.take().ok_or(FheError::MissingKeys)?)
        } else {
            None
        };
        let pt = self
            .ctx
            .encode(x, self.ctx.initial_scale(), self.ctx.max_level())?;
        let enc_x = self.ctx.encrypt_symmetric(&pt, &self.secret, rng);
        Ok(FheSetupMessage {
            params: self.ctx.params().clone(),
            keys,
            enc_x,
        })
    }

    /// Slot 0 of the decrypted result.
    pub fn finish(&self, result: &FheResultMessage) -> f64 {
        client_finish(&self.ctx, result, &self.secret)
    }
}

/// One-shot client setup: fresh keys plus the encrypted input.
pub fn client_setup<R: RngCore + CryptoRng>(
    x: &[f64],
    params: &CkksParams,
    rng: &mut R,
) -> Result<(FheSetupMessage, FheClient), FheError> {
    let mut client = FheClient::new(params, rng)?;
    let msg = client.setup(x, true, rng)?;
    Ok((msg, client))
}

pub fn client_finish(ctx: &CkksContext, result: &FheResultMessage, sk: &SecretKey) -> f64 {
    ctx.decrypt_decode(&result.enc_y, sk)[0]
}

/// `sum_i w_i x_i` in slot 0; one level.
pub fn dot_product(
    ctx: &CkksContext,
    enc_x: &Ciphertext,
    w_row: &[f64],
    galois: &GaloisKeys,
    target_scale: f64,
) -> Result<Ciphertext, CkksError> {
    let pt = ctx.encode_for_product(w_row, enc_x, target_scale)?;
    let prod = ctx.mul_plain(enc_x, &pt)?;
    let mut acc = prod.clone();
    for step in 1..w_row.len() as i64 {
        let r = ctx.rotate(&prod, step, galois)?;
        acc = ctx.add(&acc, &r)?;
    }
    ctx.rescale(&acc)
}

/// `z -> z^2`; one level.
pub fn relu_square(
    ctx: &CkksContext,
    ct: &Ciphertext,
    rlk: &RelinKey,
) -> Result<Ciphertext, CkksError> {
    if ct.level() < 2 {
        return Err(CkksError::LevelExhausted);
    }
    ctx.rescale(&ctx.square(ct, rlk)?)
}

/// `0.5 + z * (0.197 - 0.004 z)`; two levels.
pub fn sigmoid_poly_ct(
    ctx: &CkksContext,
    ct: &Ciphertext,
    rlk: &RelinKey,
) -> Result<Ciphertext, CkksError> {
    let l = ct.level();
    if l < 3 {
        return Err(CkksError::LevelExhausted);
    }
    let slots = vec![-0.004; ctx.slot_count()];
    let t_scale = ctx.prime_at(l - 2) as f64;
    let pt = ctx.encode_for_product(&slots, ct, t_scale)?;
    let t = ctx.rescale(&ctx.mul_plain(ct, &pt)?)?;
    let t = ctx.add_const(&t, 0.197);
    let z = ctx.mod_drop_to(ct, l - 1)?;
    let zt = ctx.rescale(&ctx.eval_mul(&z, &t, rlk)?)?;
    Ok(ctx.add_const(&zt, 0.5))
}

/// Homomorphic two-layer inference; the result is dropped to level 1.
pub fn server_infer(
    ctx: &CkksContext,
    keys: &EvalKeys,
    enc_x: &Ciphertext,
    model: &ModelParams,
) -> Result<FheResultMessage, CkksError> {
    model
        .validate()
        .map_err(|e| CkksError::Malformed(e.to_string()))?;
    if enc_x.level() <= SERVER_DEPTH {
        return Err(CkksError::LevelExhausted);
    }
    let target = ctx.initial_scale();
    let hidden: Vec<Ciphertext> = model
        .w1
        .iter()
        .zip(&model.b1)
        .map(|(row, &b)| {
            let z = dot_product(ctx, enc_x, row, &keys.galois, target)?;
            let z = ctx.add_plain(&z, &ctx.encode_like(&[b], &z)?)?;
            relu_square(ctx, &z, &keys.relin)
        })
        .collect::<Result<_, _>>()?;

    let level = hidden[0].level();
    // t's scale is chosen so that u * t rescales back to the target.
    let t_target = ctx.prime_at(level - 2) as f64;
    let mut u_acc: Option<Ciphertext> = None;
    let mut t_acc: Option<Ciphertext> = None;
    for (h, &w) in hidden.iter().zip(model.w2_row()) {
        let pu = ctx.encode_for_product(&[w], h, target)?;
        let pt = ctx.encode_for_product(&[-0.004 * w], h, t_target)?;
        let u = ctx.mul_plain(h, &pu)?;
        let t = ctx.mul_plain(h, &pt)?;
        u_acc = Some(match u_acc {
            None => u,
            Some(a) => ctx.add(&a, &u)?,
        });
        t_acc = Some(match t_acc {
            None => t,
            Some(a) => ctx.add(&a, &t)?,
        });
    }
    let u = ctx.rescale(&u_acc.expect("h >= 1"))?;
    let t = ctx.rescale(&t_acc.expect("h >= 1"))?;
    let u = ctx.add_plain(&u, &ctx.encode_like(&[model.b2], &u)?)?;
    let t = ctx.add_plain(&t, &ctx.encode_like(&[-0.004 * model.b2 + 0.197], &t)?)?;
    let y = ctx.rescale(&ctx.eval_mul(&u, &t, &keys.relin)?)?;
    let y = ctx.add_plain(&y, &ctx.encode_like(&[0.5], &y)?)?;
    let enc_y = ctx.mod_drop_to(&y, 1)?;
    Ok(FheResultMessage { enc_y })
}

fn poly_bytes(p: &RnsPoly) -> usize {
    p.limbs.iter().map(|l| 8 * l.len()).sum()
}

fn switch_key_bytes(k: &KeySwitchKey) -> usize {
    k.digits.iter().flatten().map(poly_bytes).sum()
}

fn setup_size_hint(msg: &FheSetupMessage) -> usize {
    let keys = msg.keys.as_ref().map_or(0, |k| {
        poly_bytes(&k.public.p0)
            + poly_bytes(&k.public.p1)
            + switch_key_bytes(&k.relin.0)
            + k.galois.keys.values().map(switch_key_bytes).sum::<usize>()
    });
    let ct: usize = msg.enc_x.parts.iter().map(poly_bytes).sum();
    keys + ct + 1024
}

pub fn encode_setup(ctx: &CkksContext, msg: &FheSetupMessage) -> Vec<u8> {
    let mut w = Writer::with_capacity(setup_size_hint(msg));
    ckks::write_params(&mut w, &msg.params);
    match &msg.keys {
        Some(k) => {
            w.u8(1);
            ckks::write_public_key(&mut w, ctx, &k.public);
            ckks::write_relin_key(&mut w, ctx, &k.relin);
            ckks::write_galois_keys(&mut w, ctx, &k.galois);
        }
        None => {
            w.u8(0);
        }
    }
    ckks::write_ciphertext(&mut w, ctx, &msg.enc_x);
    w.finish()
}

/// Parses a setup payload; `cached` supplies the context when the sender
/// has already been seen.
pub fn decode_setup(
    payload: &[u8],
    cached: Option<&Arc<CkksContext>>,
) -> Result<(Arc<CkksContext>, FheSetupMessage), FheError> {
    let mut r = Reader::new(payload);
    let params = ckks::read_params(&mut r)?;
    let ctx = match cached {
        Some(c) if c.params() == &params => c.clone(),
        Some(_) => return Err(FheError::ParamsChanged),
        None => validate_params(&params)?,
    };
    let keys = match r.u8()? {
        1 => Some(EvalKeys {
            public: ckks::read_public_key(&mut r, &ctx)?,
            relin: ckks::read_relin_key(&mut r, &ctx)?,
            galois: ckks::read_galois_keys(&mut r, &ctx)?,
        }),
        0 => None,
        f => return Err(WireError::Malformed(format!("key flag {f}")).into()),
    };
    let enc_x = ckks::read_ciphertext(&mut r, &ctx)?;
    r.finish()?;
    Ok((
        ctx,
        FheSetupMessage {
            params,
            keys,
            enc_x,
        },
    ))
}

pub fn encode_result(ctx: &CkksContext, msg: &FheResultMessage) -> Vec<u8> {
    let mut w = Writer::new();
    ckks::write_ciphertext(&mut w, ctx, &msg.enc_y);
    w.finish()
}

pub fn decode_result(ctx: &CkksContext, payload: &[u8]) -> Result<FheResultMessage, FheError> {
    let mut r = Reader::new(payload);
    let enc_y = ckks::read_ciphertext(&mut r, ctx)?;
    r.finish()?;
    Ok(FheResultMessage { enc_y })
}

/// Server loop over `n` requests. Keys from the first request are kept for
/// later requests that omit them.
pub fn run_server(ep: &mut Endpoint, model: &ModelParams, n: usize) -> Result<(), FheError> {
    if model.d != INPUT_DIM {
        return Err(FheError::ModelDim(model.d));
    }
    let mut session: Option<(Arc<CkksContext>, EvalKeys)> = None;
    for _ in 0..n {
        let payload = ep.recv_kind(kind::SETUP)?;
        let (ctx, msg) = decode_setup(&payload, session.as_ref().map(|s| &s.0))?;
        drop(payload);
        let keys = match msg.keys {
            Some(k) => k,
            None => session
                .as_ref()
                .map(|s| s.1.clone())
                .ok_or(FheError::MissingKeys)?,
        };
        let result = server_infer(&ctx, &keys, &msg.enc_x, model)?;
        ep.send(kind::RESULT, encode_result(&ctx, &result))?;
        session = Some((ctx, keys));
    }
    Ok(())
}

/// Client side for a batch of inputs. With `reuse_keys`, keys travel only
/// with the first request.
pub fn run_client<R: RngCore + CryptoRng>(
    ep: &mut Endpoint,
    params: &CkksParams,
    inputs: &[[f64; 3]],
    reuse_keys: bool,
    rng: &mut R,
) -> Result<Vec<f64>, FheError> {
    let mut client: Option<FheClient> = None;
    let mut out = Vec::with_capacity(inputs.len());
    for (i, x) in inputs.iter().enumerate() {
        if !reuse_keys || client.is_none() {
            client = Some(FheClient::new(params, rng)?);
        }
        let c = client.as_mut().unwrap();
        let msg = c.setup(x, !reuse_keys || i == 0, rng)?;
        ep.send(kind::SETUP, encode_setup(c.context(), &msg))?;
        let payload = ep.recv_kind(kind::RESULT)?;
        out.push(c.finish(&decode_result(c.context(), &payload)?));
    }
    Ok(out)
}
