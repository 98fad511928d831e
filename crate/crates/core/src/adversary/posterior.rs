use crate::constellation::{BasisIndex, Phase, WheelConfig};
use crate::error::{Error, Result};
use crate::noise::{NoiseModel, WRAP_TERMS};
use crate::scalar::Scalar;

/// `ln` of the wrapped-normal density at offset `d`, up to the normalizing
/// constant (which cancels in every ratio taken here).
pub(crate) fn log_wrapped_kernel<T: Scalar>(d: T, sigma: T) -> T {
    let two_sigma_sq = T::lit(2.0) * sigma * sigma;
    let terms = (-WRAP_TERMS..=WRAP_TERMS).map(|j| {
        let x = d + T::two_pi() * T::lit(f64::from(j));
        -(x * x) / two_sigma_sq
    });
    log_sum_exp(terms)
}

pub(crate) fn log_sum_exp<T: Scalar>(terms: impl Iterator<Item = T> + Clone) -> T {
    let max = terms.clone().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    max + terms.map(|t| (t - max).exp()).fold(T::zero(), |a, b| a + b).ln()
}

/// Posterior `P(bit = 1 | y)` for an observer who knows neither the basis
/// nor the bit (uniform priors on both), as Eve does.
///
/// With `σ_φ = 0` the likelihood is singular: an observation on the
/// constellation gets the fraction of bit-1 points there, anything else is
/// [`Error::UndefinedLikelihood`].
pub fn eve_bit_posterior<T: Scalar>(y: Phase<T>, cfg: &WheelConfig<T>, noise: &NoiseModel<T>) -> Result<T> {
    let points = cfg.points();
    if noise.sigma() <= T::zero() {
        return singular_posterior(y, points.iter().map(|&(p, b, _)| (p, b)));
    }
    let sigma = noise.sigma();
    let ll = |bit: bool| {
        let terms: Vec<T> = points
            .iter()
            .filter(|p| p.1 == bit)
            .map(|p| log_wrapped_kernel(y.signed_diff(p.0), sigma))
            .collect();
        log_sum_exp(terms.into_iter())
    };
    Ok(posterior_from_logs(ll(false), ll(true)))
}

/// Posterior `P(bit = 1 | y, k)` for an observer holding the true basis.
pub fn known_basis_posterior<T: Scalar>(
    y: Phase<T>,
    k: BasisIndex,
    cfg: &WheelConfig<T>,
    noise: &NoiseModel<T>,
) -> Result<T> {
    let p0 = cfg.point(false, k);
    let p1 = cfg.point(true, k);
    if noise.sigma() <= T::zero() {
        return singular_posterior(y, [(p0, false), (p1, true)].into_iter());
    }
    let sigma = noise.sigma();
    Ok(posterior_from_logs(
        log_wrapped_kernel(y.signed_diff(p0), sigma),
        log_wrapped_kernel(y.signed_diff(p1), sigma),
    ))
}

fn posterior_from_logs<T: Scalar>(log0: T, log1: T) -> T {
    // 1 / (1 + e^(l0 - l1)), evaluated on the side that cannot overflow.
    if log1 >= log0 {
        T::one() / (T::one() + (log0 - log1).exp())
    } else {
        let r = (log1 - log0).exp();
        r / (T::one() + r)
    }
}

fn singular_posterior<T: Scalar>(y: Phase<T>, points: impl Iterator<Item = (Phase<T>, bool)>) -> Result<T> {
    let (mut ones, mut total) = (0u32, 0u32);
    for (p, bit) in points {
        if y.approx_eq(p) {
            total += 1;
            ones += u32::from(bit);
        }
    }
    if total == 0 {
        return Err(Error::UndefinedLikelihood);
    }
    Ok(T::lit(f64::from(ones)) / T::lit(f64::from(total)))
}

/// Binary entropy in bits.
pub fn binary_entropy<T: Scalar>(p: T) -> T {
    if p <= T::zero() || p >= T::one() {
        return T::zero();
    }
    let q = T::one() - p;
    -(p * p.log2() + q * q.log2())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::noise::EntropySource;

    #[test]
    fn degenerate_sector_is_uninformative() {
        let cfg = WheelConfig::<f64>::sector_limit(0.0).unwrap();
        let mut src = EntropySource::seeded(1);
        for sigma in [0.05, 0.3, 1.2] {
            let noise = NoiseModel::new(sigma).unwrap();
            for _ in 0..1000 {
                let y = Phase::new(src.uniform() * 2.0 * PI);
                assert_eq!(eve_bit_posterior(y, &cfg, &noise).unwrap(), 0.5);
            }
        }
    }

    #[test]
    fn unambiguous_point_at_small_sigma() {
        let cfg = WheelConfig::<f64>::uniform(2).unwrap();
        let noise = NoiseModel::new(1e-3).unwrap();
        let p = eve_bit_posterior(Phase::new(PI), &cfg, &noise).unwrap();
        assert!((p - 1.0).abs() < 1e-9);
        let p = eve_bit_posterior(Phase::new(PI), &cfg, &NoiseModel::noiseless()).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn off_constellation_at_zero_sigma() {
        let cfg = WheelConfig::<f64>::sector(0.1).unwrap();
        assert!(matches!(
            eve_bit_posterior(Phase::new(0.05), &cfg, &NoiseModel::noiseless()),
            Err(Error::UndefinedLikelihood)
        ));
    }

    #[test]
    fn near_half_in_narrow_sector() {
        // Two-component likelihood ratio at y = 0.05 between the bit-0 point
        // at 0 and the bit-1 point at 0.1 (the π-side points contribute ~e^-20):
        // exp(-(0.05² - 0.05²)/2σ²) = 1 exactly, so P = 0.5 up to the far
        // terms.
        let cfg = WheelConfig::<f64>::sector(0.1).unwrap();
        let noise = NoiseModel::new(0.5).unwrap();
        let p = eve_bit_posterior(Phase::new(0.05), &cfg, &noise).unwrap();
        assert!(p > 0.49 && p < 0.51, "{p}");
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn log_domain_matches_direct_density() {
        let cfg = WheelConfig::<f64>::uniform(4).unwrap();
        let noise = NoiseModel::new(0.7).unwrap();
        for i in 0..50 {
            let y = Phase::new(i as f64 * 0.13);
            let like = |bit: bool| -> f64 {
                cfg.points()
                    .iter()
                    .filter(|p| p.1 == bit)
                    .map(|p| noise.wrapped_density(y.signed_diff(p.0)).unwrap())
                    .sum()
            };
            let direct = like(true) / (like(true) + like(false));
            assert!((eve_bit_posterior(y, &cfg, &noise).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn f32_posterior() {
        let cfg = WheelConfig::<f32>::sector_limit(0.0).unwrap();
        let noise = NoiseModel::<f32>::new(0.4).unwrap();
        assert_eq!(eve_bit_posterior(Phase::new(1.0f32), &cfg, &noise).unwrap(), 0.5);
    }

    #[test]
    fn entropy_endpoints() {
        assert_eq!(binary_entropy(0.5f64), 1.0);
        assert_eq!(binary_entropy(0.0f64), 0.0);
        assert_eq!(binary_entropy(1.0f64), 0.0);
    }
}
