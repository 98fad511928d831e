//! Monte Carlo mutual information per transmitted bit.
//!
//! Eve's information is `1 - E[h2(P(1 | y))]` with the posterior marginalized
//! over the unknown basis. Bob holds the basis and makes a hard decision, so
//! his information is that of the resulting binary symmetric channel,
//! `1 - h2(p_err)`, with `p_err` estimated from the same simulation.
//!
//! Estimators are built from [`InfoAccumulator`]s that merge exactly, so a run
//! may be split across independent sub-streams and combined.

use std::thread;

use super::posterior::{binary_entropy, eve_bit_posterior};
use crate::constellation::{BasisIndex, WheelConfig};
use crate::error::{contract, Result};
use crate::noise::{EntropySource, NoiseModel};

/// Smallest Monte Carlo run accepted by the estimators.
pub const MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observer {
    /// Knows the basis of every sample.
    Bob,
    /// Knows only the wheel and noise model.
    Eve,
}

/// One observer's information estimate, bits per transmitted bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoComponent {
    pub bits: f64,
    pub std_err: f64,
    pub samples: usize,
}

/// `I_B`, `I_E` and their gap, bits per transmitted bit. Multiply by `L` for
/// a cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoEstimate {
    pub i_b: f64,
    pub i_e: f64,
    pub delta_i: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl InfoEstimate {
    fn from_parts(bob: InfoComponent, eve: InfoComponent) -> Self {
        InfoEstimate {
            i_b: bob.bits,
            i_e: eve.bits,
            delta_i: bob.bits - eve.bits,
            std_err: bob.std_err.hypot(eve.std_err),
            samples: bob.samples.min(eve.samples),
        }
    }
}

/// Sufficient statistics of a Monte Carlo run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InfoAccumulator {
    pub samples: usize,
    /// Σ h2(posterior) and Σ h2², for Eve.
    pub entropy_sum: f64,
    pub entropy_sq_sum: f64,
    /// Hard-decision errors, for Bob.
    pub errors: usize,
}

impl InfoAccumulator {
    pub fn merge(mut self, other: InfoAccumulator) -> Self {
        self.samples += other.samples;
        self.entropy_sum += other.entropy_sum;
        self.entropy_sq_sum += other.entropy_sq_sum;
        self.errors += other.errors;
        self
    }

    pub fn component(&self, observer: Observer) -> InfoComponent {
        let n = self.samples as f64;
        match observer {
            Observer::Eve => {
                let mean = self.entropy_sum / n;
                let var = (self.entropy_sq_sum / n - mean * mean).max(0.0);
                InfoComponent {
                    bits: (1.0 - mean).clamp(0.0, 1.0),
                    std_err: (var / n).sqrt(),
                    samples: self.samples,
                }
            }
            Observer::Bob => {
                let p = self.errors as f64 / n;
                // Delta method on 1 - h2(p); zero at p ∈ {0, 1} where the
                // estimate is degenerate.
                let slope = if p > 0.0 && p < 1.0 { ((1.0 - p) / p).log2().abs() } else { 0.0 };
                InfoComponent {
                    bits: 1.0 - binary_entropy(p),
                    std_err: slope * (p * (1.0 - p) / n).sqrt(),
                    samples: self.samples,
                }
            }
        }
    }
}

/// Simulates `samples` transmissions (random bit, random basis, Gaussian
/// noise) and accumulates statistics for `observer`.
pub fn accumulate(
    cfg: &WheelConfig<f64>,
    noise: &NoiseModel<f64>,
    observer: Observer,
    samples: usize,
    source: &mut EntropySource,
) -> Result<InfoAccumulator> {
    let width = cfg.bits_per_basis() as u32;
    let mut acc = InfoAccumulator { samples, ..Default::default() };
    for _ in 0..samples {
        let bit = source.next_u64() >> 63 == 1;
        let k = BasisIndex::new(source.next_bits(width) as u32, cfg)?;
        let y = cfg.encode(bit, k, noise.sample(source));
        match observer {
            Observer::Bob => acc.errors += usize::from(cfg.decode(y, k) != bit),
            Observer::Eve => {
                let h = binary_entropy(eve_bit_posterior(y, cfg, noise)?);
                acc.entropy_sum += h;
                acc.entropy_sq_sum += h * h;
            }
        }
    }
    Ok(acc)
}

pub fn mutual_information(
    cfg: &WheelConfig<f64>,
    noise: &NoiseModel<f64>,
    observer: Observer,
    samples: usize,
    source: &mut EntropySource,
) -> Result<InfoComponent> {
    if samples < MIN_SAMPLES {
        return Err(contract(format!("Monte Carlo needs at least {MIN_SAMPLES} samples, got {samples}")));
    }
    Ok(accumulate(cfg, noise, observer, samples, source)?.component(observer))
}

/// `ΔI = I_B - I_E` from one source (Bob's run first, then Eve's).
pub fn delta_i(
    cfg: &WheelConfig<f64>,
    noise: &NoiseModel<f64>,
    samples: usize,
    source: &mut EntropySource,
) -> Result<InfoEstimate> {
    let bob = mutual_information(cfg, noise, Observer::Bob, samples, source)?;
    let eve = mutual_information(cfg, noise, Observer::Eve, samples, source)?;
    Ok(InfoEstimate::from_parts(bob, eve))
}

/// `ΔI` with the run split into `partitions` sub-streams of `seed`, evaluated
/// on separate threads and merged. Deterministic for a given
/// `(seed, samples, partitions)`.
pub fn delta_i_partitioned(
    cfg: &WheelConfig<f64>,
    noise: &NoiseModel<f64>,
    samples: usize,
    seed: u64,
    partitions: usize,
) -> Result<InfoEstimate> {
    if samples < MIN_SAMPLES {
        return Err(contract(format!("Monte Carlo needs at least {MIN_SAMPLES} samples, got {samples}")));
    }
    let parts = partitions.clamp(1, samples);
    let run = |observer: Observer, stream_base: u64| -> Result<InfoAccumulator> {
        thread::scope(|scope| {
            let handles: Vec<_> = (0..parts)
                .map(|p| {
                    let n = samples / parts + usize::from(p < samples % parts);
                    scope.spawn(move || {
                        let mut src = EntropySource::substream(seed, stream_base + p as u64);
                        accumulate(cfg, noise, observer, n, &mut src)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("Monte Carlo worker panicked"))
                .try_fold(InfoAccumulator::default(), |acc, part| Ok(acc.merge(part?)))
        })
    };
    let bob = run(Observer::Bob, 0)?.component(Observer::Bob);
    let eve = run(Observer::Eve, 1 << 32)?.component(Observer::Eve);
    Ok(InfoEstimate::from_parts(bob, eve))
}
