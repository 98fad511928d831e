//! Key and keystream files.
//!
//! Layout: a 16-byte header followed by the bits packed most significant bit
//! first, zero-padded to a whole byte.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "NKEY"
//! 4       1     version (1)
//! 5       3     reserved, zero
//! 8       8     bit count, big-endian u64
//! 16      ...   packed bits
//! ```
//!
//! The same byte sequence may be stored as lowercase hex text (optionally
//! followed by a newline); readers accept either form.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::bits::{pack, unpack};
use crate::error::{Error, Result};

pub const KEY_MAGIC: &[u8; 4] = b"NKEY";
pub const KEY_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyEncoding {
    Binary,
    Hex,
}

pub fn encode_key(bits: &[bool]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + bits.len().div_ceil(8));
    out.extend_from_slice(KEY_MAGIC);
    out.push(KEY_VERSION);
    out.extend_from_slice(&[0; 3]);
    out.extend_from_slice(&(bits.len() as u64).to_be_bytes());
    out.extend_from_slice(&pack(bits));
    out
}

pub fn decode_key(bytes: &[u8]) -> Result<Vec<bool>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::KeyFile(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != KEY_MAGIC {
        return Err(Error::KeyFile("bad magic".into()));
    }
    if bytes[4] != KEY_VERSION {
        return Err(Error::KeyFile(format!("unsupported version {}", bytes[4])));
    }
    if bytes[5..8] != [0; 3] {
        return Err(Error::KeyFile("reserved header bytes not zero".into()));
    }
    let count = u64::from_be_bytes(bytes[8..16].try_into().unwrap());
    let body = &bytes[HEADER_LEN..];
    let expected = usize::try_from(count.div_ceil(8))
        .map_err(|_| Error::KeyFile(format!("bit count {count} too large")))?;
    if body.len() != expected {
        return Err(Error::KeyFile(format!(
            "header declares {count} bits but body has {} bytes",
            body.len()
        )));
    }
    Ok(unpack(body, count as usize))
}

/// Accepts the binary form or its lowercase hex rendering.
pub fn parse_key(raw: &[u8]) -> Result<Vec<bool>> {
    if raw.starts_with(KEY_MAGIC) {
        return decode_key(raw);
    }
    let text = std::str::from_utf8(raw)
        .map_err(|_| Error::KeyFile("neither binary nor hex key file".into()))?
        .trim_end();
    if text.len() % 2 != 0 || !text.bytes().all(|c| c.is_ascii_digit() || (b'a'..=b'f').contains(&c)) {
        return Err(Error::KeyFile("hex key file must be lowercase hex digits".into()));
    }
    let bytes: Vec<u8> = (0..text.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&text[i..i + 2], 16).unwrap())
        .collect();
    decode_key(&bytes)
}

pub fn read_key(path: &Path) -> Result<Vec<bool>> {
    parse_key(&fs::read(path)?)
}

pub fn write_key(path: &Path, bits: &[bool], encoding: KeyEncoding) -> Result<()> {
    let bytes = encode_key(bits);
    match encoding {
        KeyEncoding::Binary => fs::write(path, bytes)?,
        KeyEncoding::Hex => {
            let mut text: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
            text.push('\n');
            fs::write(path, text)?;
        }
    }
    Ok(())
}

/// 64-bit fingerprint of a bit string: the first 8 bytes of
/// SHA-256(domain || bit count || packed bits).
pub fn fingerprint(domain: &[u8], salt: &[u8], bits: &[bool]) -> u64 {
    let mut h = Sha256::new();
    h.update(domain);
    h.update(salt);
    h.update((bits.len() as u64).to_be_bytes());
    h.update(pack(bits));
    u64::from_be_bytes(h.finalize()[..8].try_into().unwrap())
}
