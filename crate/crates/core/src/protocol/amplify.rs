//! Privacy amplification by Toeplitz universal hashing over GF(2).
//!
//! An `m x n` Toeplitz matrix is fixed by `n + m - 1` seed bits:
//! `T[i][j] = seed[i - j + n - 1]`. Output bit `i` is the parity of row `i`
//! ANDed with the input.

use crate::bits::pack_words;
use crate::error::{contract, Result};

/// Output length kept from `input_len` bits at retained fraction `retain`.
pub fn retained_len(input_len: usize, retain: f64) -> usize {
    ((input_len as f64) * retain).floor() as usize
}

/// Seed bits needed to compress `input_len` bits to `output_len`.
pub fn seed_len(input_len: usize, output_len: usize) -> usize {
    if output_len == 0 || input_len == 0 {
        0
    } else {
        input_len + output_len - 1
    }
}

/// Multiplies `input` by the Toeplitz matrix drawn from `seed`.
pub fn toeplitz_hash(input: &[bool], output_len: usize, seed: &[bool]) -> Result<Vec<bool>> {
    let n = input.len();
    if output_len == 0 || n == 0 {
        return Ok(vec![false; output_len]);
    }
    let needed = seed_len(n, output_len);
    if seed.len() < needed {
        return Err(contract(format!(
            "Toeplitz seed has {} bits, {needed} needed for {n} -> {output_len}",
            seed.len()
        )));
    }
    // out[i] = XOR_t seed[i + t] & input[n - 1 - t]: a sliding window over
    // the seed against the reversed input. Padding bits of `x` are zero.
    let reversed: Vec<bool> = input.iter().rev().copied().collect();
    let x = pack_words(&reversed);
    let mut s = pack_words(&seed[..needed]);
    s.push(0);

    let out = (0..output_len)
        .map(|i| {
            let (base, shift) = (i / 64, (i % 64) as u32);
            let mut acc = 0u64;
            for (k, &xw) in x.iter().enumerate() {
                let hi = s[base + k];
                let window = if shift == 0 {
                    hi
                } else {
                    (hi << shift) | s.get(base + k + 1).map_or(0, |lo| lo >> (64 - shift))
                };
                acc ^= window & xw;
            }
            acc.count_ones() & 1 == 1
        })
        .collect();
    Ok(out)
}

/// Compresses `bits` to `floor(retain * len)` bits with the seed's Toeplitz
/// matrix.
pub fn privacy_amplify(bits: &[bool], retain: f64, seed: &[bool]) -> Result<Vec<bool>> {
    if !(retain > 0.0 && retain <= 1.0) {
        return Err(contract(format!("retained fraction must lie in (0, 1], got {retain}")));
    }
    toeplitz_hash(bits, retained_len(bits.len(), retain), seed)
}

/// Seed whose Toeplitz matrix is the identity (`seed[n - 1] = 1`, rest 0).
pub fn identity_seed(len: usize) -> Vec<bool> {
    let mut seed = vec![false; seed_len(len, len)];
    if len > 0 {
        seed[len - 1] = true;
    }
    seed
}
