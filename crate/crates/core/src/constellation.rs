//! Phase-wheel geometry: key blocks to basis indices, (basis, bit) to a phase
//! point, and a received phase back to a bit.
//!
//! Two geometries are supported. The uniform wheel spreads `M = 2^k_M` bases
//! over the half circle with the bit-1 point of every basis opposite its bit-0
//! point. The sector wheel uses two bases a small angle `Δφ1` apart with bit
//! values interleaved, so that nearest points always carry opposite bits.

use std::fmt;

use crate::error::{contract, Error, Result};
use crate::scalar::Scalar;

/// Reduces an angle into `[0, 2π)`.
pub fn wrap_unsigned<T: Scalar>(x: T) -> T {
    let tau = T::two_pi();
    let mut r = x % tau;
    if r < T::zero() {
        r = r + tau;
    }
    // `-ε + 2π` can round up to exactly 2π.
    if r >= tau {
        r = r - tau;
    }
    r
}

/// Reduces an angle into `(-π, π]`.
pub fn wrap_signed<T: Scalar>(x: T) -> T {
    let r = wrap_unsigned(x);
    if r > T::PI() {
        r - T::two_pi()
    } else {
        r
    }
}

/// A phase in radians, always held in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Phase<T: Scalar = f64>(T);

impl<T: Scalar> Phase<T> {
    pub fn new(radians: T) -> Self {
        Phase(wrap_unsigned(radians))
    }

    pub fn zero() -> Self {
        Phase(T::zero())
    }

    pub fn radians(self) -> T {
        self.0
    }

    /// Adds an unwrapped offset (noise, bit displacement) and re-wraps.
    pub fn offset(self, radians: T) -> Self {
        Phase::new(self.0 + radians)
    }

    /// Signed shortest difference `self - other` in `(-π, π]`.
    pub fn signed_diff(self, other: Phase<T>) -> T {
        wrap_signed(self.0 - other.0)
    }

    /// Circular distance, within the fixed comparison tolerance.
    pub fn approx_eq(self, other: Phase<T>) -> bool {
        self.signed_diff(other).abs() <= T::phase_tolerance()
    }
}

impl<T: Scalar> fmt::Display for Phase<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} rad", self.0)
    }
}

/// Index of a basis on the wheel, `0 <= k < M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisIndex(u32);

impl BasisIndex {
    pub fn new<T: Scalar>(k: u32, cfg: &WheelConfig<T>) -> Result<Self> {
        if k >= cfg.bases() {
            return Err(contract(format!("basis index {k} out of range for M = {}", cfg.bases())));
        }
        Ok(BasisIndex(k))
    }

    pub fn value(self) -> u32 {
        self.0
    }

    fn is_odd(self) -> bool {
        self.0 & 1 == 1
    }
}

/// Largest `k_M` accepted for a uniform wheel.
pub const MAX_BITS_PER_BASIS: u32 = 16;

/// Constellation geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WheelConfig<T: Scalar = f64> {
    /// `M` bases uniformly spread over the circle.
    Uniform { bases: u32 },
    /// Two bases separated by `spacing` (the inter-basis angle `Δφ1`).
    Sector { spacing: T },
}

impl<T: Scalar> WheelConfig<T> {
    pub fn uniform(bases: u32) -> Result<Self> {
        if bases < 2 || !bases.is_power_of_two() || bases > 1 << MAX_BITS_PER_BASIS {
            return Err(contract(format!(
                "uniform wheel needs M a power of two in [2, 2^{MAX_BITS_PER_BASIS}], got {bases}"
            )));
        }
        Ok(WheelConfig::Uniform { bases })
    }

    /// Sector wheel with `0 < Δφ1 < π/2`.
    pub fn sector(spacing: T) -> Result<Self> {
        if !(spacing > T::zero() && spacing < T::FRAC_PI_2()) {
            return Err(contract(format!("sector spacing must lie in (0, π/2), got {spacing}")));
        }
        Ok(WheelConfig::Sector { spacing })
    }

    /// Sector wheel admitting the degenerate limit `Δφ1 = 0`, where the bit-0
    /// point of basis 0 coincides with the bit-1 point of basis 1. Only for
    /// analysis; the protocol engine rejects coincident points.
    pub fn sector_limit(spacing: T) -> Result<Self> {
        if !(spacing >= T::zero() && spacing < T::FRAC_PI_2()) {
            return Err(contract(format!("sector spacing must lie in [0, π/2), got {spacing}")));
        }
        Ok(WheelConfig::Sector { spacing })
    }

    /// Number of bases `M`.
    pub fn bases(&self) -> u32 {
        match self {
            WheelConfig::Uniform { bases } => *bases,
            WheelConfig::Sector { .. } => 2,
        }
    }

    /// Key bits consumed per basis, `k_M = log2 M`.
    pub fn bits_per_basis(&self) -> usize {
        self.bases().trailing_zeros() as usize
    }

    pub fn spacing(&self) -> Option<T> {
        match self {
            WheelConfig::Sector { spacing } => Some(*spacing),
            WheelConfig::Uniform { .. } => None,
        }
    }

    /// Phase of the bit-0 point of basis `k`.
    pub fn basis_phase(&self, k: BasisIndex) -> Result<Phase<T>> {
        if k.value() >= self.bases() {
            return Err(contract(format!(
                "basis index {} out of range for M = {}",
                k.value(),
                self.bases()
            )));
        }
        Ok(self.basis_phase_unchecked(k))
    }

    fn basis_phase_unchecked(&self, k: BasisIndex) -> Phase<T> {
        // (1 - (-1)^k) / 2 is 1 for odd k: odd bases are turned over by π.
        let flip = if k.is_odd() { T::PI() } else { T::zero() };
        let kf = T::lit(f64::from(k.value()));
        match self {
            WheelConfig::Uniform { bases } => {
                Phase::new(T::PI() * kf / T::lit(f64::from(*bases)) + flip)
            }
            WheelConfig::Sector { spacing } => Phase::new(kf * *spacing + flip),
        }
    }

    /// Noiseless constellation point for `bit` on basis `k`.
    pub fn point(&self, bit: bool, k: BasisIndex) -> Phase<T> {
        let base = self.basis_phase_unchecked(k);
        if bit {
            base.offset(T::PI())
        } else {
            base
        }
    }

    /// All `2M` constellation points as `(phase, bit, basis)`.
    pub fn points(&self) -> Vec<(Phase<T>, bool, BasisIndex)> {
        (0..self.bases())
            .flat_map(|k| {
                let k = BasisIndex(k);
                [false, true].map(|b| (self.point(b, k), b, k))
            })
            .collect()
    }

    /// `Y = R + N + k` in phase units: the point for `bit` on basis `k`,
    /// displaced by unwrapped `noise`.
    pub fn encode(&self, bit: bool, k: BasisIndex, noise: T) -> Phase<T> {
        self.point(bit, k).offset(noise)
    }

    /// Binary decision on the known basis. `|d| <= π/2` (ties included) is 0.
    pub fn decode(&self, y: Phase<T>, k: BasisIndex) -> bool {
        let d = y.signed_diff(self.basis_phase_unchecked(k));
        d.abs() > T::FRAC_PI_2()
    }

    /// Maps consecutive `k_M`-bit blocks to basis indices.
    pub fn bases_from_key(&self, bits: &[bool]) -> Result<Vec<BasisIndex>> {
        let width = self.bits_per_basis();
        if !bits.len().is_multiple_of(width) {
            return Err(contract(format!(
                "key length {} is not a multiple of k_M = {width}",
                bits.len()
            )));
        }
        Ok(bits.chunks_exact(width).map(|block| BasisIndex(fold_msb_first(block))).collect())
    }

    /// Checks that the `2M` points are pairwise distinct modulo 2π.
    pub fn check_distinct(&self) -> Result<()> {
        let points = self.points();
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                if a.0.approx_eq(b.0) {
                    return Err(Error::Contract(format!(
                        "constellation points coincide at {} (bases {} and {})",
                        a.0,
                        a.2.value(),
                        b.2.value()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn fold_msb_first(block: &[bool]) -> u32 {
    block.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b))
}

/// Basis index of one `k_M`-bit block, first bit most significant.
pub fn basis_index(block: &[bool], bits_per_basis: usize) -> Result<BasisIndex> {
    if block.len() != bits_per_basis {
        return Err(contract(format!(
            "block has {} bits, expected k_M = {bits_per_basis}",
            block.len()
        )));
    }
    if bits_per_basis == 0 || bits_per_basis > MAX_BITS_PER_BASIS as usize {
        return Err(contract(format!("k_M = {bits_per_basis} unsupported")));
    }
    Ok(BasisIndex(fold_msb_first(block)))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    use proptest::prelude::*;

    use super::*;

    const TOL: f64 = 1e-9;

    fn k(v: u32) -> BasisIndex {
        BasisIndex(v)
    }

    #[test]
    fn basis_index_examples() {
        assert_eq!(basis_index(&[true, false, true], 3).unwrap().value(), 5);
        assert_eq!(basis_index(&[false, false, false], 3).unwrap().value(), 0);
        assert_eq!(basis_index(&[true], 1).unwrap().value(), 1);
        assert!(matches!(basis_index(&[true, false], 3), Err(Error::Contract(_))));
    }

    #[test]
    fn basis_phase_examples() {
        let u4 = WheelConfig::<f64>::uniform(4).unwrap();
        assert_eq!(u4.basis_phase(k(0)).unwrap().radians(), 0.0);
        assert!((u4.basis_phase(k(1)).unwrap().radians() - 5.0 * PI / 4.0).abs() < TOL);
        let s = WheelConfig::<f64>::sector(0.1).unwrap();
        assert!((s.basis_phase(k(1)).unwrap().radians() - (PI + 0.1)).abs() < TOL);
        assert!(u4.basis_phase(k(4)).is_err());
        assert!(s.basis_phase(k(2)).is_err());
    }

    #[test]
    fn encode_examples() {
        let u4 = WheelConfig::<f64>::uniform(4).unwrap();
        assert!((u4.encode(true, k(0), 0.0).radians() - PI).abs() < TOL);
        assert!((u4.encode(false, k(1), 0.2).radians() - (5.0 * PI / 4.0 + 0.2)).abs() < TOL);
        let s = WheelConfig::<f64>::sector(0.1).unwrap();
        assert!((s.encode(true, k(1), 0.0).radians() - 0.1).abs() < TOL);
    }

    #[test]
    fn decode_examples() {
        let u4 = WheelConfig::<f64>::uniform(4).unwrap();
        let s = WheelConfig::<f64>::sector(0.1).unwrap();
        assert!(u4.decode(Phase::new(PI), k(0)));
        assert!(s.decode(Phase::new(0.1), k(1)));
        assert!(!u4.decode(Phase::new(5.0 * PI / 4.0 + 0.2), k(1)));
    }

    #[test]
    fn decode_tie_is_zero() {
        let u2 = WheelConfig::<f64>::uniform(2).unwrap();
        assert!(!u2.decode(Phase::new(FRAC_PI_2), k(0)));
        assert!(!u2.decode(Phase::new(-FRAC_PI_2), k(0)));
    }

    #[test]
    fn bases_from_key_examples() {
        let u2 = WheelConfig::<f64>::uniform(2).unwrap();
        let got: Vec<u32> =
            u2.bases_from_key(&[false, true, true]).unwrap().iter().map(|b| b.value()).collect();
        assert_eq!(got, [0, 1, 1]);
        let u4 = WheelConfig::<f64>::uniform(4).unwrap();
        let got: Vec<u32> = u4
            .bases_from_key(&[true, false, false, true])
            .unwrap()
            .iter()
            .map(|b| b.value())
            .collect();
        assert_eq!(got, [2, 1]);
        assert!(u4.bases_from_key(&[true, false, false]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(WheelConfig::<f64>::uniform(3).is_err());
        assert!(WheelConfig::<f64>::uniform(1).is_err());
        assert!(WheelConfig::<f64>::sector(0.0).is_err());
        assert!(WheelConfig::<f64>::sector(FRAC_PI_2).is_err());
        assert!(WheelConfig::<f64>::sector_limit(0.0).is_ok());
        assert!(WheelConfig::<f64>::sector_limit(0.0).unwrap().check_distinct().is_err());
        assert!(WheelConfig::<f64>::sector(0.01).unwrap().check_distinct().is_ok());
        for m in [2, 4, 8, 32, 256] {
            WheelConfig::<f64>::uniform(m).unwrap().check_distinct().unwrap();
        }
    }

    #[test]
    fn wrap_boundaries() {
        assert_eq!(wrap_unsigned(TAU), 0.0);
        assert_eq!(wrap_unsigned(-1e-300), 0.0);
        assert!(wrap_unsigned(-1e-3) < TAU);
        assert_eq!(wrap_signed(PI), PI);
        assert_eq!(wrap_signed(-PI), PI);
    }

    #[test]
    fn uniform_points_equally_spaced() {
        for m in [2u32, 4, 8, 16, 32] {
            let cfg = WheelConfig::<f64>::uniform(m).unwrap();
            let mut pts = cfg.points();
            pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let step = PI / f64::from(m);
            for (i, p) in pts.iter().enumerate() {
                assert!((p.0.radians() - step * i as f64).abs() < TOL, "M={m} i={i}");
            }
            // Within each half circle neighbours alternate; the two seams at 0
            // and π join equal bits because opposite points carry opposite bits.
            let half = m as usize;
            for w in pts[..half].windows(2).chain(pts[half..].windows(2)) {
                assert_ne!(w[0].1, w[1].1, "M={m}");
            }
            assert_eq!(pts[half - 1].1, pts[half].1);
            assert_eq!(pts[2 * half - 1].1, pts[0].1);
        }
    }

    #[test]
    fn sector_limit_coincidence() {
        let cfg = WheelConfig::<f64>::sector_limit(0.0).unwrap();
        assert!(cfg.point(false, k(0)).approx_eq(cfg.point(true, k(1))));
        assert!(cfg.point(true, k(0)).approx_eq(cfg.point(false, k(1))));
        assert!(cfg.point(true, k(0)).approx_eq(Phase::new(PI)));
    }

    #[test]
    fn f32_geometry() {
        let cfg = WheelConfig::<f32>::sector(0.1).unwrap();
        let y = cfg.encode(true, k(1), 0.3);
        assert!(cfg.decode(y, k(1)));
        assert!((cfg.encode(true, k(1), 0.0).radians() - 0.1).abs() < 1e-5);
    }

    fn wheel() -> impl Strategy<Value = WheelConfig<f64>> {
        prop_oneof![
            (1u32..=8).prop_map(|b| WheelConfig::uniform(1 << b).unwrap()),
            (0.001f64..1.5).prop_map(|s| WheelConfig::sector(s).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn round_trip(cfg in wheel(), bit: bool, kraw: u32) {
            let kk = k(kraw % cfg.bases());
            prop_assert_eq!(cfg.decode(cfg.encode(bit, kk, 0.0), kk), bit);
        }

        #[test]
        fn noise_tolerance(cfg in wheel(), bit: bool, kraw: u32, n in -(FRAC_PI_2 - 1e-4)..(FRAC_PI_2 - 1e-4), wraps in -3i32..3) {
            let kk = k(kraw % cfg.bases());
            let noise = n + TAU * f64::from(wraps);
            prop_assert_eq!(cfg.decode(cfg.encode(bit, kk, noise), kk), bit);
        }

        #[test]
        fn basis_index_bijection(width in 1usize..=12, v: u32) {
            let v = v & ((1u32 << width) - 1);
            let block: Vec<bool> = (0..width).rev().map(|i| (v >> i) & 1 == 1).collect();
            prop_assert_eq!(basis_index(&block, width).unwrap().value(), v);
        }

        #[test]
        fn phase_always_canonical(x in -1e6f64..1e6) {
            let p = Phase::new(x).radians();
            prop_assert!((0.0..TAU).contains(&p));
            let s = wrap_signed(x);
            prop_assert!(s > -PI && s <= PI);
        }
    }
}
