//! Bit packing, most significant bit first.

pub fn pack(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|chunk| chunk.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i))))
        .collect()
}

/// First `count` bits of `bytes`. Panics if `bytes` is too short.
pub fn unpack(bytes: &[u8], count: usize) -> Vec<bool> {
    assert!(bytes.len() * 8 >= count, "{} bytes cannot hold {count} bits", bytes.len());
    (0..count).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1 == 1).collect()
}

/// Packs into 64-bit words, first bit in the most significant position.
pub(crate) fn pack_words(bits: &[bool]) -> Vec<u64> {
    bits.chunks(64)
        .map(|chunk| chunk.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << (63 - i))))
        .collect()
}

pub fn hamming_distance(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len())
}
