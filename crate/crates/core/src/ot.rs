//! 1-out-of-2 oblivious transfer of 16-byte labels, semi-honest.
//!
//! The public-key backend is the two-message Bellare–Micali construction over
//! Ristretto255 with a hashed common reference point `C`:
//!
//! * receiver, per pair: secret `k`, sends `P0 = kG` (choice 0) or
//!   `P0 = C - kG` (choice 1), so that `P_c = kG` with `P1 = C - P0`;
//! * sender: secret `r`, sends `R = rG` and `m_b ^ H(r*P_b, i, b)` for both `b`;
//! * receiver unmasks `m_c` with `H(k*R, i, c)`.
//!
//! The dealer backend exchanges the same two messages with no cryptography
//! (choices in the clear) and exists for tests.

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256, Sha512};
use thiserror::Error;

use crate::transport::{Endpoint, TransportError};
use crate::wire::{kind, Reader, WireError, Writer};

pub type Block = [u8; 16];

#[derive(Debug, Error)]
pub enum OtError {
    #[error("OT protocol abort: {0}")]
    ProtocolAbort(String),
    #[error("batch size mismatch: expected {expected}, got {got}")]
    BatchMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Wire(#[from] WireError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OtBackend {
    #[default]
    Dh,
    Dealer,
}

const BACKEND_DH: u8 = 1;
const BACKEND_DEALER: u8 = 2;

fn crs() -> RistrettoPoint {
    RistrettoPoint::hash_from_bytes::<Sha512>(b"secinfer oblivious transfer reference point")
}

fn kdf(point: &RistrettoPoint, index: u32, choice: u8) -> Block {
    let mut h = Sha256::new();
    h.update(point.compress().as_bytes());
    h.update(index.to_le_bytes());
    h.update([choice]);
    let d = h.finalize();
    d[..16].try_into().unwrap()
}

fn xor(a: &Block, b: &Block) -> Block {
    let mut o = [0u8; 16];
    for i in 0..16 {
        o[i] = a[i] ^ b[i];
    }
    o
}

fn random_scalar<R: RngCore + CryptoRng>(rng: &mut R) -> Scalar {
    let mut wide = [0u8; 64];
    rng.fill_bytes(&mut wide);
    Scalar::from_bytes_mod_order_wide(&wide)
}

fn decompress(bytes: [u8; 32]) -> Result<RistrettoPoint, OtError> {
    CompressedRistretto(bytes)
        .decompress()
        .ok_or_else(|| OtError::ProtocolAbort("malformed group element".into()))
}

/// Receiver-side secrets between the two messages.
pub struct ReceiverState {
    backend: OtBackend,
    choices: Vec<bool>,
    keys: Vec<Scalar>,
}

/// First message (receiver -> sender).
pub fn receiver_request<R: RngCore + CryptoRng>(
    choices: &[bool],
    backend: OtBackend,
    rng: &mut R,
) -> (Vec<u8>, ReceiverState) {
    let mut w = Writer::new();
    let mut keys = Vec::new();
    match backend {
        OtBackend::Dh => {
            w.u8(BACKEND_DH).u32(choices.len() as u32);
            let c = crs();
            for &choice in choices {
                let k = random_scalar(rng);
                let kg = RISTRETTO_BASEPOINT_POINT * k;
                let p0 = if choice { c - kg } else { kg };
                w.bytes(p0.compress().as_bytes());
                keys.push(k);
            }
        }
        OtBackend::Dealer => {
            w.u8(BACKEND_DEALER).u32(choices.len() as u32);
            for &choice in choices {
                w.u8(choice as u8);
            }
        }
    }
    (
        w.finish(),
        ReceiverState {
            backend,
            choices: choices.to_vec(),
            keys,
        },
    )
}

/// Second message (sender -> receiver).
pub fn sender_respond<R: RngCore + CryptoRng>(
    pairs: &[(Block, Block)],
    request: &[u8],
    rng: &mut R,
) -> Result<Vec<u8>, OtError> {
    let mut r = Reader::new(request);
    let tag = r.u8()?;
    let n = r.u32()? as usize;
    if n != pairs.len() {
        return Err(OtError::BatchMismatch {
            expected: pairs.len(),
            got: n,
        });
    }
    let mut w = Writer::new();
    match tag {
        BACKEND_DH => {
            let c = crs();
            let secret = random_scalar(rng);
            w.bytes((RISTRETTO_BASEPOINT_POINT * secret).compress().as_bytes());
            for (i, (m0, m1)) in pairs.iter().enumerate() {
                let p0 = decompress(r.array()?)?;
                let p1 = c - p0;
                let k0 = kdf(&(p0 * secret), i as u32, 0);
                let k1 = kdf(&(p1 * secret), i as u32, 1);
                w.bytes(&xor(m0, &k0)).bytes(&xor(m1, &k1));
            }
        }
        BACKEND_DEALER => {
            for (m0, m1) in pairs {
                let choice = r.u8()?;
                w.bytes(if choice == 1 { m1 } else { m0 });
            }
        }
        t => return Err(OtError::ProtocolAbort(format!("unknown backend tag {t}"))),
    }
    r.finish()?;
    Ok(w.finish())
}

/// Recovers the chosen labels from the sender's response.
pub fn receiver_finish(state: ReceiverState, response: &[u8]) -> Result<Vec<Block>, OtError> {
    let mut r = Reader::new(response);
    let out = match state.backend {
        OtBackend::Dh => {
            let big_r = decompress(r.array()?)?;
            let mut out = Vec::with_capacity(state.choices.len());
            for (i, (&c, k)) in state.choices.iter().zip(&state.keys).enumerate() {
                let e0: Block = r.array()?;
                let e1: Block = r.array()?;
                let key = kdf(&(big_r * k), i as u32, c as u8);
                out.push(xor(if c { &e1 } else { &e0 }, &key));
            }
            out
        }
        OtBackend::Dealer => (0..state.choices.len())
            .map(|_| r.array())
            .collect::<Result<Vec<Block>, _>>()?,
    };
    r.finish()?;
    Ok(out)
}

/// Sender side of one exchange over `ep`: receive the request, answer it.
pub fn ot_send<R: RngCore + CryptoRng>(
    ep: &mut Endpoint,
    pairs: &[(Block, Block)],
    rng: &mut R,
) -> Result<(), OtError> {
    let req = ep.recv_kind(kind::OT_REQ)?;
    let resp = sender_respond(pairs, &req, rng)?;
    ep.send(kind::OT_RESP, resp)?;
    Ok(())
}

/// Receiver side of one exchange over `ep`.
pub fn ot_receive<R: RngCore + CryptoRng>(
    ep: &mut Endpoint,
    choices: &[bool],
    backend: OtBackend,
    rng: &mut R,
) -> Result<Vec<Block>, OtError> {
    let (req, state) = receiver_request(choices, backend, rng);
    ep.send(kind::OT_REQ, req)?;
    let resp = ep.recv_kind(kind::OT_RESP)?;
    receiver_finish(state, &resp)
}
