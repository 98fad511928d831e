//! Block-digest reconciliation.
//!
//! Each side splits its cycle bits into fixed-size blocks (the last one may
//! be short) and publishes a 64-bit digest per block. Blocks whose digests
//! disagree are dropped on both sides; no error correction is attempted.

use sha2::{Digest, Sha256};

use crate::bits::pack;
use crate::error::{Error, Result};

const DOMAIN: &[u8] = b"NKBD";

/// First 8 bytes of SHA-256 over the domain tag, cycle and block position,
/// block length and the packed block.
pub fn block_digest(cycle: u32, block_index: u32, block: &[bool]) -> u64 {
    let mut h = Sha256::new();
    h.update(DOMAIN);
    h.update(cycle.to_be_bytes());
    h.update(block_index.to_be_bytes());
    h.update((block.len() as u32).to_be_bytes());
    h.update(pack(block));
    u64::from_be_bytes(h.finalize()[..8].try_into().unwrap())
}

pub fn block_digests(cycle: u32, bits: &[bool], block_size: usize) -> Vec<u64> {
    bits.chunks(block_size.max(1))
        .enumerate()
        .map(|(i, block)| block_digest(cycle, i as u32, block))
        .collect()
}

/// Result of comparing local blocks against the peer's digests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconciled {
    pub kept: Vec<bool>,
    /// One flag per block, `true` where the block survived.
    pub block_mask: Vec<bool>,
    pub discarded_blocks: usize,
    pub discarded_bits: usize,
}

pub fn reconcile(local: &[bool], remote: &[u64], block_size: usize, cycle: u32) -> Result<Reconciled> {
    let ours = block_digests(cycle, local, block_size);
    if ours.len() != remote.len() {
        return Err(Error::ProtocolViolation(format!(
            "{} local blocks but {} remote digests",
            ours.len(),
            remote.len()
        )));
    }
    let block_mask: Vec<bool> = ours.iter().zip(remote).map(|(a, b)| a == b).collect();
    Ok(apply_mask(local, &block_mask, block_size))
}

/// Keeps the blocks flagged in `block_mask`.
pub fn apply_mask(bits: &[bool], block_mask: &[bool], block_size: usize) -> Reconciled {
    let mut kept = Vec::with_capacity(bits.len());
    let mut discarded_blocks = 0;
    let mut discarded_bits = 0;
    for (block, &keep) in bits.chunks(block_size.max(1)).zip(block_mask) {
        if keep {
            kept.extend_from_slice(block);
        } else {
            discarded_blocks += 1;
            discarded_bits += block.len();
        }
    }
    Reconciled { kept, block_mask: block_mask.to_vec(), discarded_blocks, discarded_bits }
}
