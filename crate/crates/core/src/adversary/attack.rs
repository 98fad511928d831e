//! Desk-scale exhaustive search for `K0` over a recorded transcript.
//!
//! Every candidate key is replayed through the running-key chain: its bits
//! select the first cycle's bases, the candidate's own hard decisions on the
//! surviving blocks extend the key, and so on. Each observed phase adds
//! `ln p(y | k)` with the bit marginalized out.

use std::thread;

use super::posterior::{log_sum_exp, log_wrapped_kernel};
use crate::constellation::{BasisIndex, Phase, WheelConfig};
use crate::error::{Error, Result};
use crate::protocol::{apply_mask, KeyBuffer, ObservedCycle, SessionConfig};
use crate::scalar::Scalar;

/// Largest key length the exhaustive attack will enumerate.
pub const MAX_ATTACK_KEY_BITS: u32 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct AttackReport {
    pub k0_len: u32,
    pub candidates: u64,
    /// Log-likelihood per candidate; candidate `c` is the `k0_len`-bit
    /// big-endian encoding of `c`.
    pub log_likelihoods: Vec<f64>,
    /// 1-based rank of the true key (1 + number of strictly more likely
    /// candidates), when the harness knows it.
    pub true_rank: Option<u64>,
    /// Entropy of the normalized posterior over candidates, bits.
    pub posterior_entropy: f64,
    pub best_candidate: u64,
}

/// The key bits of candidate `c`.
pub fn candidate_bits(c: u64, k0_len: u32) -> Vec<bool> {
    (0..k0_len).rev().map(|i| (c >> i) & 1 == 1).collect()
}

pub fn candidate_index(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
}

/// Per-sample scoring: log-likelihood of `y` on basis `k`, bit marginalized.
struct Scorer {
    wheel: WheelConfig<f64>,
    sigma: f64,
    tolerance: f64,
}

impl Scorer {
    fn score(&self, y: Phase<f64>, k: BasisIndex) -> f64 {
        let p0 = self.wheel.point(false, k);
        let p1 = self.wheel.point(true, k);
        if self.sigma <= 0.0 {
            let hit = y.signed_diff(p0).abs() <= self.tolerance || y.signed_diff(p1).abs() <= self.tolerance;
            return if hit { 0.0 } else { f64::NEG_INFINITY };
        }
        let terms = [
            log_wrapped_kernel(y.signed_diff(p0), self.sigma),
            log_wrapped_kernel(y.signed_diff(p1), self.sigma),
        ];
        log_sum_exp(terms.into_iter())
    }
}

/// Decodes every cycle of `transcript` with the running key seeded by `k0`,
/// exactly as a legitimate receiver would. Returns the decisions per cycle
/// and, when `scorer` is given, the accumulated log-likelihood.
fn replay(
    transcript: &[ObservedCycle],
    cfg: &SessionConfig,
    k0: &[bool],
    scorer: Option<&Scorer>,
) -> Result<(Vec<Vec<bool>>, f64)> {
    let mut key = KeyBuffer::new(k0);
    let mut decoded_cycles = Vec::with_capacity(transcript.len());
    let mut ll = 0.0;
    for cycle in transcript {
        let samples = &cycle.signal.samples;
        let block = key.take(cfg.key_bits_for(samples.len()))?;
        let bases = cfg.wheel.bases_from_key(&block)?;
        let decoded: Vec<bool> = samples
            .iter()
            .zip(&bases)
            .map(|(&y, &k)| {
                if let Some(s) = scorer {
                    ll += s.score(y, k);
                }
                cfg.wheel.decode(y, k)
            })
            .collect();
        let survivors = apply_mask(&decoded, &cycle.block_mask, cfg.block_size);
        key.extend(&survivors.kept);
        decoded_cycles.push(decoded);
    }
    Ok((decoded_cycles, ll))
}

/// Eve's decisions on every cycle once `k0` is known to her.
pub fn replay_with_key(transcript: &[ObservedCycle], cfg: &SessionConfig, k0: &[bool]) -> Result<Vec<Vec<bool>>> {
    Ok(replay(transcript, cfg, k0, None)?.0)
}

/// Scores all `2^k0_len` keys against `transcript`.
///
/// `tolerance` is the phase slack for matching a constellation point when
/// `σ_φ = 0` (use the quantization bound for transcripts read off the wire).
pub fn exhaustive_attack(
    transcript: &[ObservedCycle],
    cfg: &SessionConfig,
    k0_len: u32,
    true_k0: Option<&[bool]>,
    tolerance: f64,
) -> Result<AttackReport> {
    if k0_len > MAX_ATTACK_KEY_BITS {
        return Err(Error::ResourceGuard(format!(
            "exhaustive attack limited to {MAX_ATTACK_KEY_BITS} key bits, asked for {k0_len}"
        )));
    }
    let scorer = Scorer { wheel: cfg.wheel, sigma: cfg.noise.sigma(), tolerance: tolerance.max(f64::phase_tolerance()) };
    let candidates = 1u64 << k0_len;
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(candidates as usize).max(1);
    let chunk = candidates.div_ceil(workers as u64);

    let log_likelihoods: Vec<f64> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers as u64)
            .map(|w| {
                let scorer = &scorer;
                scope.spawn(move || {
                    let start = w * chunk;
                    let end = ((w + 1) * chunk).min(candidates);
                    (start..end)
                        .map(|c| replay(transcript, cfg, &candidate_bits(c, k0_len), Some(scorer)).map(|r| r.1))
                        .collect::<Result<Vec<f64>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("attack worker panicked"))
            .collect::<Result<Vec<Vec<f64>>>>()
    })?
    .concat();

    let max = log_likelihoods.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::UndefinedLikelihood);
    }
    let weights: Vec<f64> = log_likelihoods.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let posterior_entropy = weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0);
    let best_candidate = log_likelihoods
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |best, (i, &l)| if l > best.1 { (i, l) } else { best })
        .0 as u64;
    let true_rank = match true_k0 {
        Some(k0) => {
            if k0.len() != k0_len as usize {
                return Err(Error::Contract(format!("true K0 has {} bits, attack uses {k0_len}", k0.len())));
            }
            let truth = log_likelihoods[candidate_index(k0) as usize];
            Some(1 + log_likelihoods.iter().filter(|&&l| l > truth).count() as u64)
        }
        None => None,
    };

    Ok(AttackReport { k0_len, candidates, log_likelihoods, true_rank, posterior_entropy, best_candidate })
}
