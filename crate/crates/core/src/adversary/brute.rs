//! Exhaustive-search cost formulas, evaluated exactly.

use num_bigint::BigUint;
use num_traits::One;

use crate::constellation::WheelConfig;
use crate::error::{contract, Error, Result};
use crate::scalar::Scalar;

/// `C = 2^|K0| · (log2 N_σ)! · N_σ` for a uniform wheel whose noise covers
/// `N_σ` bases. `N_σ` must be a power of two so that `log2 N_σ` is integral.
pub fn brute_force_count_uniform(k0_len: u32, covered: u64) -> Result<BigUint> {
    if covered == 0 || !covered.is_power_of_two() {
        return Err(contract(format!("N_σ must be a power of two >= 1, got {covered}")));
    }
    let log2 = covered.trailing_zeros();
    let factorial = (2..=u64::from(log2)).fold(BigUint::one(), |acc, i| acc * i);
    Ok((BigUint::one() << k0_len) * factorial * covered)
}

/// `C = 2 · 2^|K0|` for the two-basis sector wheel.
pub fn brute_force_count_sector(k0_len: u32) -> BigUint {
    BigUint::one() << (k0_len + 1)
}

/// Fraction `1 - N_σ/M` of key-block bits not covered by noise on a uniform
/// wheel, which Eve is assumed to resolve. `1 - fraction` is a starting point
/// for the retained fraction `f`.
pub fn eve_known_fraction<T: Scalar>(cfg: &WheelConfig<T>, covered: f64) -> Result<f64> {
    match cfg {
        WheelConfig::Sector { .. } => Err(Error::NotApplicable(
            "sector bases all sit inside the noise; no uncovered fraction".into(),
        )),
        WheelConfig::Uniform { bases } => {
            let m = f64::from(*bases);
            if !(covered > 0.0 && covered <= m / 2.0) {
                return Err(contract(format!("N_σ must lie in (0, M/2], got {covered} for M = {m}")));
            }
            Ok(1.0 - covered / m)
        }
    }
}
