//! 128-bit wire labels and the fixed-key gate hash.

use std::ops::BitXor;

use aes::cipher::{BlockEncrypt, KeyInit};
use aes::Aes128;
use rand::{CryptoRng, RngCore};

/// Opaque 128-bit label; the least significant bit is the permute bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct WireLabel(pub u128);

impl WireLabel {
    pub const ZERO: WireLabel = WireLabel(0);

    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut b = [0u8; 16];
        rng.fill_bytes(&mut b);
        WireLabel(u128::from_le_bytes(b))
    }

    /// Global offset: random with the permute bit forced to one.
    pub fn random_delta<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        WireLabel(Self::random(rng).0 | 1)
    }

    pub fn permute_bit(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn to_bytes(self) -> [u8; 16] {
        self.0.to_le_bytes()
    }

    pub fn from_bytes(b: [u8; 16]) -> Self {
        WireLabel(u128::from_le_bytes(b))
    }

    /// `self` if `bit` is set, zero otherwise.
    pub fn select(self, bit: bool) -> Self {
        if bit {
            self
        } else {
            WireLabel::ZERO
        }
    }
}

impl BitXor for WireLabel {
    type Output = WireLabel;

    fn bitxor(self, rhs: WireLabel) -> WireLabel {
        WireLabel(self.0 ^ rhs.0)
    }
}

const PRF_KEY: [u8; 16] = *b"secinfer-gc-key!";

/// `H(L, t) = AES_K(L ^ t) ^ L ^ t` under a fixed public key.
#[derive(Clone)]
pub struct GateHash {
    cipher: Aes128,
}

impl Default for GateHash {
    fn default() -> Self {
        Self::new()
    }
}

impl GateHash {
    pub fn new() -> Self {
        Self {
            cipher: Aes128::new(&PRF_KEY.into()),
        }
    }

    pub fn hash(&self, label: WireLabel, tweak: u64) -> WireLabel {
        let x = label.0 ^ tweak as u128;
        let mut block = x.to_le_bytes().into();
        self.cipher.encrypt_block(&mut block);
        WireLabel(u128::from_le_bytes(block.into()) ^ x)
    }
}
