//! In-process session: both endpoints on one thread with an in-memory channel.

use super::{
    CycleOutcome, DistillationLedger, PhaseSignal, Role, SessionConfig, SessionState,
};
use crate::error::{Error, Result};
use crate::noise::EntropySource;

/// Entropy for the two endpoints.
#[derive(Debug)]
pub struct SessionSources {
    pub a: EntropySource,
    pub b: EntropySource,
}

impl SessionSources {
    /// Streams 0 (A) and 1 (B) of `seed`.
    pub fn seeded(seed: u64) -> Self {
        SessionSources { a: EntropySource::substream(seed, 0), b: EntropySource::substream(seed, 1) }
    }

    pub fn system() -> Self {
        SessionSources { a: EntropySource::system(), b: EntropySource::system() }
    }

    fn emitter(&mut self, role: Role) -> &mut EntropySource {
        match role {
            Role::Initiator => &mut self.a,
            Role::Responder => &mut self.b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RestartReason {
    KeyExhausted { needed: usize, available: usize },
    BelowMinimum { distilled: usize, min_len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionStatus {
    Completed,
    /// The session stopped early; a fresh `K0` is needed to continue.
    RestartRequired(RestartReason),
}

/// What a passive tap sees of one cycle: the signal and which blocks
/// survived reconciliation (both digest lists are public).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedCycle {
    pub signal: PhaseSignal,
    pub block_mask: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct CycleRecord {
    pub outcome: CycleOutcome,
    /// Receiver decisions that differ from the emitter's fresh bits.
    pub bit_errors: usize,
    /// The emitter's fresh bits, for harness checks.
    pub sent: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct SessionReport {
    pub keystream_a: Vec<bool>,
    pub keystream_b: Vec<bool>,
    pub ledger: DistillationLedger,
    pub cycles: Vec<CycleRecord>,
    pub status: SessionStatus,
    pub transcript: Vec<ObservedCycle>,
}

impl SessionReport {
    pub fn bit_error_rate(&self) -> f64 {
        let raw: usize = self.cycles.iter().map(|c| c.outcome.raw).sum();
        let errors: usize = self.cycles.iter().map(|c| c.bit_errors).sum();
        if raw == 0 {
            0.0
        } else {
            errors as f64 / raw as f64
        }
    }
}

/// Runs up to `cycles` cycles between two endpoints sharing `k0`.
///
/// Stops early with [`SessionStatus::RestartRequired`] when the running key
/// cannot fund a cycle of at least `L_min` bits or a cycle distills fewer than
/// `L_min` bits. Diverging keystreams are a hard error.
pub fn run_session(
    cfg: &SessionConfig,
    k0: &[bool],
    cycles: usize,
    sources: &mut SessionSources,
) -> Result<SessionReport> {
    cfg.validate()?;
    let mut a = SessionState::new(Role::Initiator, k0);
    let mut b = SessionState::new(Role::Responder, k0);
    let mut records = Vec::with_capacity(cycles);
    let mut transcript = Vec::with_capacity(cycles);
    let mut status = SessionStatus::Completed;

    for _ in 0..cycles {
        let (emitter, receiver) = if a.is_emitter() { (&mut a, &mut b) } else { (&mut b, &mut a) };
        let len = match emitter.plan_cycle(cfg) {
            Ok(len) => len,
            Err(Error::KeyExhausted { needed, available }) => {
                status = SessionStatus::RestartRequired(RestartReason::KeyExhausted { needed, available });
                break;
            }
            Err(e) => return Err(e),
        };
        let source = sources.emitter(emitter.role);
        let (signal, sent) = emitter.emit_cycle(cfg, len, source)?;
        let decoded = receiver.receive_cycle(cfg, &signal)?;
        let bit_errors = sent.iter().zip(&decoded).filter(|(x, y)| x != y).count();

        let emitter_digests = emitter.local_digests(cfg)?;
        let receiver_digests = receiver.local_digests(cfg)?;
        let at_emitter = emitter.reconcile(cfg, &receiver_digests)?;
        let at_receiver = receiver.reconcile(cfg, &emitter_digests)?;
        if at_emitter.block_mask != at_receiver.block_mask {
            return Err(Error::InvariantBreach("reconciliation masks differ".into()));
        }

        let seed = source.fresh_bits(emitter.amplify_seed_len(cfg, at_emitter.kept.len()));
        let before = emitter.keystream.len();
        let outcome = emitter.finish_cycle(cfg, &at_emitter, &seed)?;
        let peer = receiver.finish_cycle(cfg, &at_receiver, &seed)?;
        if outcome != peer
            || receiver.keystream.len() != emitter.keystream.len()
            || emitter.keystream[before..] != receiver.keystream[before..]
        {
            return Err(Error::InvariantBreach(format!(
                "keystreams diverged in cycle {}",
                outcome.index
            )));
        }
        debug_assert!(emitter.ledger.is_balanced());

        transcript.push(ObservedCycle { signal, block_mask: at_emitter.block_mask.clone() });
        let below = outcome.below_minimum;
        let distilled = outcome.distilled;
        records.push(CycleRecord { outcome, bit_errors, sent });
        if below {
            status = SessionStatus::RestartRequired(RestartReason::BelowMinimum {
                distilled,
                min_len: cfg.min_len,
            });
            break;
        }
    }

    Ok(SessionReport {
        keystream_a: a.keystream,
        keystream_b: b.keystream,
        ledger: a.ledger,
        cycles: records,
        status,
        transcript,
    })
}
