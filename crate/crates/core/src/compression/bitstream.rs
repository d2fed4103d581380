//! Bitstream file format: an 8-byte big-endian bit count followed by the
//! bits packed most significant bit first, with the last byte zero-padded.

use bitvec::prelude::{BitVec, Msb0};

use crate::error::{Error, Result};

pub type Bits = BitVec<u8, Msb0>;

pub fn to_bytes(bits: &Bits) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + bits.len().div_ceil(8));
    out.extend_from_slice(&(bits.len() as u64).to_be_bytes());
    let mut body = bits.clone();
    body.set_uninitialized(false);
    out.extend_from_slice(body.as_raw_slice());
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<Bits> {
    let bad = |reason: String| Error::Decode { index: 0, reason };
    if bytes.len() < 8 {
        return Err(bad("bitstream shorter than its 8-byte header".into()));
    }
    let (head, body) = bytes.split_at(8);
    let count = u64::from_be_bytes(head.try_into().expect("8 bytes"));
    let count = usize::try_from(count).map_err(|_| bad("bit count does not fit in memory".into()))?;
    if body.len() != count.div_ceil(8) {
        return Err(bad(format!("header announces {count} bits but {} payload bytes follow", body.len())));
    }
    let mut bits = Bits::from_slice(body);
    if bits[count..].any() {
        return Err(bad("padding bits are not zero".into()));
    }
    bits.truncate(count);
    Ok(bits)
}
