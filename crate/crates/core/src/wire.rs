//! Framed binary encoding shared by every message that crosses the channel.
//!
//! A frame is `[u32 magic][u16 version][u16 kind][u64 payload_len][payload]`,
//! all little-endian. The 16-byte header is counted by the transport.

use thiserror::Error;

/// `b"SInf"` read as a little-endian `u32`.
pub const MAGIC: u32 = u32::from_le_bytes(*b"SInf");
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;

/// Frame kind tags.
pub mod kind {
    pub const SETUP: u16 = 1;
    pub const RESULT: u16 = 2;
    pub const OT_REQ: u16 = 3;
    pub const OT_RESP: u16 = 4;
    pub const TABLES: u16 = 5;
    pub const REVEAL: u16 = 6;
    pub const INPUT_LABELS: u16 = 7;
    pub const OUTPUT_DECODE: u16 = 8;
    pub const PLAIN_INPUT: u16 = 9;
    pub const PLAIN_OUTPUT: u16 = 10;

    pub const PARAMS: u16 = 0x10;
    pub const PLAINTEXT: u16 = 0x11;
    pub const CIPHERTEXT: u16 = 0x12;
    pub const PUBLIC_KEY: u16 = 0x13;
    pub const RELIN_KEY: u16 = 0x14;
    pub const GALOIS_KEYS: u16 = 0x15;
    pub const SECRET_KEY: u16 = 0x16;
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("bad frame magic {0:#010x}")]
    BadMagic(u32),
    #[error("unsupported frame version {0}")]
    BadVersion(u16),
    #[error("unexpected frame kind {found} (expected {expected})")]
    UnexpectedKind { expected: u16, found: u16 },
    #[error("frame truncated: needed {needed} bytes, {available} available")]
    Truncated { needed: usize, available: usize },
    #[error("declared payload length {declared} does not match {actual}")]
    LengthMismatch { declared: u64, actual: usize },
    #[error("malformed payload: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameHeader {
    pub kind: u16,
    pub payload_len: u64,
}

impl FrameHeader {
    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC.to_le_bytes());
        out[4..6].copy_from_slice(&VERSION.to_le_bytes());
        out[6..8].copy_from_slice(&self.kind.to_le_bytes());
        out[8..16].copy_from_slice(&self.payload_len.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8; HEADER_LEN]) -> Result<Self, WireError> {
        let magic = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
        if magic != MAGIC {
            return Err(WireError::BadMagic(magic));
        }
        let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
        if version != VERSION {
            return Err(WireError::BadVersion(version));
        }
        Ok(Self {
            kind: u16::from_le_bytes(bytes[6..8].try_into().unwrap()),
            payload_len: u64::from_le_bytes(bytes[8..16].try_into().unwrap()),
        })
    }
}

/// Wraps a payload into a standalone frame (header + payload).
pub fn frame(kind: u16, payload: &[u8]) -> Vec<u8> {
    let header = FrameHeader {
        kind,
        payload_len: payload.len() as u64,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&header.encode());
    out.extend_from_slice(payload);
    out
}

/// Splits a standalone frame and checks its kind.
pub fn unframe(expected: u16, bytes: &[u8]) -> Result<&[u8], WireError> {
    if bytes.len() < HEADER_LEN {
        return Err(WireError::Truncated {
            needed: HEADER_LEN,
            available: bytes.len(),
        });
    }
    let header = FrameHeader::decode(bytes[..HEADER_LEN].try_into().unwrap())?;
    if header.kind != expected {
        return Err(WireError::UnexpectedKind {
            expected,
            found: header.kind,
        });
    }
    let payload = &bytes[HEADER_LEN..];
    if header.payload_len != payload.len() as u64 {
        return Err(WireError::LengthMismatch {
            declared: header.payload_len,
            actual: payload.len(),
        });
    }
    Ok(payload)
}

/// Little-endian append-only writer.
#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            buf: Vec::with_capacity(n),
        }
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u16(&mut self, v: u16) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn i32(&mut self, v: i32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.u64(v.to_bits())
    }

    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(v);
        self
    }

    pub fn u64_slice(&mut self, v: &[u64]) -> &mut Self {
        self.buf.reserve(v.len() * 8);
        for x in v {
            self.buf.extend_from_slice(&x.to_le_bytes());
        }
        self
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Little-endian cursor over a payload.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let available = self.buf.len() - self.pos;
        if n > available {
            return Err(WireError::Truncated {
                needed: n,
                available,
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn i32(&mut self) -> Result<i32, WireError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64, WireError> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], WireError> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    pub fn u64_vec(&mut self, n: usize) -> Result<Vec<u64>, WireError> {
        let raw = self.take(
            n.checked_mul(8)
                .ok_or_else(|| WireError::Malformed("length overflow".into()))?,
        )?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    /// Fails unless every byte has been consumed.
    pub fn finish(self) -> Result<(), WireError> {
        if self.remaining() != 0 {
            return Err(WireError::Malformed(format!(
                "{} trailing bytes",
                self.remaining()
            )));
        }
        Ok(())
    }
}
