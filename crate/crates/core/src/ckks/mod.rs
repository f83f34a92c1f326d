//! Leveled CKKS over an RNS modulus chain.
//!
//! A ciphertext's *level* is its number of active chain primes; a fresh
//! ciphertext sits at `max_level()` and every rescale removes one prime.

mod encoding;
mod eval;
mod keys;
pub mod math;
mod params;
mod poly;
mod serialize;

use thiserror::Error;

pub use encoding::Encoder;
pub use eval::{Ciphertext, Plaintext, SCALE_TOLERANCE};
pub use keys::{
    keygen, GaloisKeys, KeyMaterial, KeySwitchKey, PublicKey, RelinKey, SecretKey, ERROR_BOUND,
    ERROR_STDDEV,
};
pub use params::{budget_for, validate_params, CkksContext, CkksParams, Preset, SECURITY_BUDGET};
pub use poly::RnsPoly;
pub use serialize::{
    read_ciphertext, read_galois_keys, read_params, read_plaintext, read_public_key,
    read_relin_key, write_ciphertext, write_galois_keys, write_params, write_plaintext,
    write_public_key, write_relin_key,
};

use crate::wire::WireError;

#[derive(Debug, Error, PartialEq)]
pub enum CkksError {
    #[error("unsupported ring degree {0}")]
    UnsupportedDegree(usize),
    #[error("ring degree {0} cannot hold a CKKS modulus chain")]
    DegreeUnusable(usize),
    #[error("modulus chain of {bits} bits exceeds the {limit}-bit budget for degree {degree}")]
    BudgetExceeded {
        degree: usize,
        bits: u32,
        limit: u32,
    },
    #[error("{count} chain primes exceed the limit of {limit} for degree {degree}")]
    ModulusCountExceeded {
        degree: usize,
        count: usize,
        limit: usize,
    },
    #[error("no NTT-friendly prime of {bits} bits")]
    NonNttPrime { bits: u32 },
    #[error("invalid scale {0}")]
    InvalidScale(f64),
    #[error("{given} values exceed {slots} slots")]
    TooManyValues { given: usize, slots: usize },
    #[error("scale {0} out of range for the target level")]
    ScaleOutOfRange(f64),
    #[error("level mismatch: {0} vs {1}")]
    LevelMismatch(usize, usize),
    #[error("scale mismatch: {0} vs {1}")]
    ScaleMismatch(f64, f64),
    #[error("no chain prime left for this operation")]
    LevelExhausted,
    #[error("no galois key for rotation step {0}")]
    MissingRotationStep(i64),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Wire(#[from] WireError),
}
