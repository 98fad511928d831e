//! One-time-pad consumer of the distilled keystream.

use crate::bits::pack;
use crate::error::{Error, Result};

/// A keystream with a spent-bit cursor. Bits before the cursor are never
/// handed out again.
#[derive(Debug, Clone)]
pub struct OneTimePad {
    bits: Vec<bool>,
    cursor: usize,
}

impl OneTimePad {
    pub fn new(bits: Vec<bool>) -> Self {
        OneTimePad { bits, cursor: 0 }
    }

    /// Resumes a pad whose first `cursor` bits are already spent.
    pub fn resume(bits: Vec<bool>, cursor: usize) -> Result<Self> {
        if cursor > bits.len() {
            return Err(Error::Contract(format!(
                "cursor {cursor} beyond keystream of {} bits",
                bits.len()
            )));
        }
        Ok(OneTimePad { bits, cursor })
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.cursor
    }

    /// Takes `bytes` pad bytes and marks them spent.
    pub fn take(&mut self, bytes: usize) -> Result<Vec<u8>> {
        let needed = bytes * 8;
        if needed > self.remaining() {
            return Err(Error::KeyExhausted { needed, available: self.remaining() });
        }
        let pad = pack(&self.bits[self.cursor..self.cursor + needed]);
        self.cursor += needed;
        Ok(pad)
    }

    /// XORs `message` with fresh pad bytes. Encryption and decryption are the
    /// same operation on pads at the same position.
    pub fn apply(&mut self, message: &[u8]) -> Result<Vec<u8>> {
        let pad = self.take(message.len())?;
        Ok(message.iter().zip(pad).map(|(m, p)| m ^ p).collect())
    }
}

/// Stateless form: `message XOR keystream[..8 * len]`.
pub fn one_time_pad(message: &[u8], keystream: &[bool]) -> Result<Vec<u8>> {
    OneTimePad::new(keystream.to_vec()).apply(message)
}
