//! The alternating A <-> B cycle engine.
//!
//! One cycle moves `L` fresh bits from the emitter to the receiver:
//!
//! 1. both ends take `L * k_M` bits of running key and map them to bases;
//! 2. the emitter sends `Y_i = R_i + N_i + k_i` as a [`PhaseSignal`];
//! 3. the receiver removes the basis and makes a binary decision per sample;
//! 4. both publish block digests and drop disagreeing blocks;
//! 5. the surviving bits are compressed with a Toeplitz hash whose seed the
//!    emitter publishes, and appended to the distilled keystream;
//! 6. the surviving (pre-compression) bits are appended to the running key,
//!    so the next cycle's bases depend on this cycle's bits.
//!
//! Directions alternate: even cycles go A -> B, odd cycles B -> A.

mod amplify;
mod otp;
mod reconcile;
mod session;

pub use amplify::{identity_seed, privacy_amplify, retained_len, seed_len, toeplitz_hash};
pub use otp::{one_time_pad, OneTimePad};
pub use reconcile::{apply_mask, block_digest, block_digests, reconcile, Reconciled};
pub use session::{
    run_session, CycleRecord, ObservedCycle, RestartReason, SessionReport, SessionSources,
    SessionStatus,
};

use std::fmt;

use crate::constellation::{BasisIndex, Phase, WheelConfig};
use crate::error::{contract, Error, Result};
use crate::noise::{EntropySource, NoiseModel};

/// Per-cycle retained fraction used in the worked distillation example.
pub const DEFAULT_RETAIN: f64 = 0.9991;
pub const DEFAULT_BLOCK_SIZE: usize = 64;

/// Running key: `K0` followed by every cycle's surviving shared bits.
/// Consumed strictly front to back; `consumed` only grows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyBuffer {
    bits: Vec<bool>,
    consumed: usize,
}

impl KeyBuffer {
    pub fn new(k0: &[bool]) -> Self {
        KeyBuffer { bits: k0.to_vec(), consumed: 0 }
    }

    /// Bits consumed so far (the cursor).
    pub fn cursor(&self) -> usize {
        self.consumed
    }

    pub fn available(&self) -> usize {
        self.bits.len()
    }

    /// Removes the next `n` unconsumed bits.
    pub fn take(&mut self, n: usize) -> Result<Vec<bool>> {
        if n > self.bits.len() {
            return Err(Error::KeyExhausted { needed: n, available: self.bits.len() });
        }
        self.consumed += n;
        Ok(self.bits.drain(..n).collect())
    }

    pub fn extend(&mut self, bits: &[bool]) {
        self.bits.extend_from_slice(bits);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub wheel: WheelConfig<f64>,
    pub noise: NoiseModel<f64>,
    /// Cycle length `L` in bits.
    pub cycle_len: usize,
    /// Restart threshold `L_min`.
    pub min_len: usize,
    /// Per-cycle retained fraction `f` after privacy amplification.
    pub retain: f64,
    pub block_size: usize,
}

impl SessionConfig {
    pub fn new(wheel: WheelConfig<f64>, noise: NoiseModel<f64>, cycle_len: usize) -> Self {
        SessionConfig {
            wheel,
            noise,
            cycle_len,
            min_len: 1.min(cycle_len.saturating_sub(1)),
            retain: DEFAULT_RETAIN,
            block_size: DEFAULT_BLOCK_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cycle_len == 0 {
            return Err(contract("cycle length L must be positive"));
        }
        if self.min_len >= self.cycle_len {
            return Err(contract(format!("L_min = {} must be below L = {}", self.min_len, self.cycle_len)));
        }
        if !(self.retain > 0.0 && self.retain <= 1.0) {
            return Err(contract(format!("retained fraction must lie in (0, 1], got {}", self.retain)));
        }
        if self.retain * (self.cycle_len as f64) < 1.0 {
            return Err(contract("f * L must be at least 1"));
        }
        if self.block_size == 0 {
            return Err(contract("reconciliation block size must be positive"));
        }
        self.wheel.check_distinct()
    }

    /// Cumulative retained fraction for zero-based cycle `index`: `f^(index+1)`.
    pub fn retain_for_cycle(&self, index: u32) -> f64 {
        self.retain.powi(index as i32 + 1)
    }

    /// Key bits needed to cipher `len` fresh bits.
    pub fn key_bits_for(&self, len: usize) -> usize {
        len * self.wheel.bits_per_basis()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// A: emits on even cycles.
    Initiator,
    /// B: emits on odd cycles.
    Responder,
}

impl Role {
    pub fn emits(self, cycle_index: u32) -> bool {
        Direction::of_cycle(cycle_index).emitter() == self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AToB,
    BToA,
}

impl Direction {
    pub fn of_cycle(index: u32) -> Self {
        if index.is_multiple_of(2) {
            Direction::AToB
        } else {
            Direction::BToA
        }
    }

    pub fn emitter(self) -> Role {
        match self {
            Direction::AToB => Role::Initiator,
            Direction::BToA => Role::Responder,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::AToB => "A>B",
            Direction::BToA => "B>A",
        })
    }
}

/// The public signal of one cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSignal {
    pub samples: Vec<Phase<f64>>,
    pub cycle_index: u32,
    pub direction: Direction,
}

/// Exact accounting of shared bits.
///
/// `distilled + discarded_reconciliation + discarded_privacy == raw_shared`
/// after every cycle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DistillationLedger {
    pub raw_shared: u64,
    pub distilled: u64,
    pub discarded_reconciliation: u64,
    pub discarded_privacy: u64,
}

impl DistillationLedger {
    pub fn record(&mut self, raw: usize, kept: usize, distilled: usize) {
        debug_assert!(distilled <= kept && kept <= raw);
        self.raw_shared += raw as u64;
        self.discarded_reconciliation += (raw - kept) as u64;
        self.discarded_privacy += (kept - distilled) as u64;
        self.distilled += distilled as u64;
    }

    pub fn is_balanced(&self) -> bool {
        self.distilled + self.discarded_reconciliation + self.discarded_privacy == self.raw_shared
    }

    pub fn distilled_fraction(&self) -> f64 {
        if self.raw_shared == 0 {
            0.0
        } else {
            self.distilled as f64 / self.raw_shared as f64
        }
    }

    /// Ledger of `cycles` loss-free cycles of `cycle_len` bits in which cycle
    /// `j` (1-based) keeps `floor(L * f^j)` bits, the same rounding the engine
    /// applies.
    pub fn geometric(cycle_len: usize, retain: f64, cycles: usize) -> Self {
        let mut ledger = DistillationLedger::default();
        for j in 0..cycles {
            let kept = retained_len(cycle_len, retain.powi(j as i32 + 1));
            ledger.record(cycle_len, cycle_len, kept);
        }
        ledger
    }
}

/// What one endpoint learned from a finished cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleOutcome {
    pub index: u32,
    pub direction: Direction,
    pub raw: usize,
    pub kept: usize,
    pub distilled: usize,
    pub discarded_blocks: usize,
    /// Distilled output fell below `L_min`.
    pub below_minimum: bool,
}

/// One endpoint's view of the session.
#[derive(Debug, Clone)]
pub struct SessionState {
    pub role: Role,
    pub key: KeyBuffer,
    pub cycle_index: u32,
    pub ledger: DistillationLedger,
    pub keystream: Vec<bool>,
    /// Bits of the cycle in flight: sent (emitter) or decoded (receiver).
    pending: Option<Vec<bool>>,
}

impl SessionState {
    pub fn new(role: Role, k0: &[bool]) -> Self {
        SessionState {
            role,
            key: KeyBuffer::new(k0),
            cycle_index: 0,
            ledger: DistillationLedger::default(),
            keystream: Vec::new(),
            pending: None,
        }
    }

    pub fn is_emitter(&self) -> bool {
        self.role.emits(self.cycle_index)
    }

    /// Length of the next cycle: `L`, or fewer bits when the running key is
    /// short. Fails with `KeyExhausted` once that falls below `max(L_min, 1)`.
    pub fn plan_cycle(&self, cfg: &SessionConfig) -> Result<usize> {
        let len = cfg.cycle_len.min(self.key.available() / cfg.wheel.bits_per_basis());
        let floor = cfg.min_len.max(1);
        if len < floor {
            return Err(Error::KeyExhausted { needed: cfg.key_bits_for(floor), available: self.key.available() });
        }
        Ok(len)
    }

    fn take_bases(&mut self, cfg: &SessionConfig, len: usize) -> Result<Vec<BasisIndex>> {
        let needed = cfg.key_bits_for(len);
        if needed > self.key.available() {
            return Err(Error::KeyExhausted { needed, available: self.key.available() });
        }
        let block = self.key.take(needed)?;
        cfg.wheel.bases_from_key(&block)
    }

    /// Draws `len` fresh bits, ciphers them on key-selected bases with noise,
    /// and keeps them as this side's candidate.
    pub fn emit_cycle(
        &mut self,
        cfg: &SessionConfig,
        len: usize,
        source: &mut EntropySource,
    ) -> Result<(PhaseSignal, Vec<bool>)> {
        if !self.is_emitter() {
            return Err(Error::ProtocolViolation(format!(
                "{:?} cannot emit cycle {}",
                self.role, self.cycle_index
            )));
        }
        if self.pending.is_some() {
            return Err(Error::ProtocolViolation("previous cycle not finished".into()));
        }
        let bases = self.take_bases(cfg, len)?;
        let fresh = source.fresh_bits(len);
        let samples = fresh
            .iter()
            .zip(&bases)
            .map(|(&bit, &k)| cfg.wheel.encode(bit, k, cfg.noise.sample(source)))
            .collect();
        self.pending = Some(fresh.clone());
        let signal = PhaseSignal {
            samples,
            cycle_index: self.cycle_index,
            direction: Direction::of_cycle(self.cycle_index),
        };
        Ok((signal, fresh))
    }

    /// Decodes the peer's signal with the shared bases.
    pub fn receive_cycle(&mut self, cfg: &SessionConfig, signal: &PhaseSignal) -> Result<Vec<bool>> {
        if self.is_emitter() {
            return Err(Error::ProtocolViolation(format!(
                "{:?} cannot receive cycle {}",
                self.role, self.cycle_index
            )));
        }
        if self.pending.is_some() {
            return Err(Error::ProtocolViolation("previous cycle not finished".into()));
        }
        if signal.cycle_index != self.cycle_index {
            return Err(Error::ProtocolViolation(format!(
                "signal for cycle {} while at cycle {}",
                signal.cycle_index, self.cycle_index
            )));
        }
        let expected = self.plan_cycle(cfg)?;
        if signal.samples.len() != expected {
            return Err(Error::ProtocolViolation(format!(
                "signal carries {} samples, cycle length is {expected}",
                signal.samples.len()
            )));
        }
        let bases = self.take_bases(cfg, expected)?;
        let decoded: Vec<bool> =
            signal.samples.iter().zip(&bases).map(|(&y, &k)| cfg.wheel.decode(y, k)).collect();
        self.pending = Some(decoded.clone());
        Ok(decoded)
    }

    fn pending(&self) -> Result<&[bool]> {
        self.pending
            .as_deref()
            .ok_or_else(|| Error::ProtocolViolation("no cycle in flight".into()))
    }

    /// Digests of the in-flight cycle's blocks, to publish to the peer.
    pub fn local_digests(&self, cfg: &SessionConfig) -> Result<Vec<u64>> {
        Ok(block_digests(self.cycle_index, self.pending()?, cfg.block_size))
    }

    pub fn reconcile(&self, cfg: &SessionConfig, remote: &[u64]) -> Result<Reconciled> {
        reconcile(self.pending()?, remote, cfg.block_size, self.cycle_index)
    }

    /// Output length of privacy amplification for `kept` surviving bits.
    pub fn distilled_len(&self, cfg: &SessionConfig, kept: usize) -> usize {
        retained_len(kept, cfg.retain_for_cycle(self.cycle_index))
    }

    /// Toeplitz seed length the emitter must publish; zero when no
    /// compression is due.
    pub fn amplify_seed_len(&self, cfg: &SessionConfig, kept: usize) -> usize {
        let out = self.distilled_len(cfg, kept);
        if out == kept {
            0
        } else {
            seed_len(kept, out)
        }
    }

    /// Compresses the surviving bits, appends them to the keystream, feeds the
    /// raw survivors into the running key and advances the cycle counter.
    pub fn finish_cycle(
        &mut self,
        cfg: &SessionConfig,
        reconciled: &Reconciled,
        seed: &[bool],
    ) -> Result<CycleOutcome> {
        let raw = self.pending()?.len();
        let kept = reconciled.kept.len();
        let out_len = self.distilled_len(cfg, kept);
        let distilled = if out_len == kept {
            reconciled.kept.clone()
        } else {
            toeplitz_hash(&reconciled.kept, out_len, seed)?
        };
        self.keystream.extend_from_slice(&distilled);
        self.key.extend(&reconciled.kept);
        self.ledger.record(raw, kept, distilled.len());
        let outcome = CycleOutcome {
            index: self.cycle_index,
            direction: Direction::of_cycle(self.cycle_index),
            raw,
            kept,
            distilled: distilled.len(),
            discarded_blocks: reconciled.discarded_blocks,
            below_minimum: distilled.len() < cfg.min_len,
        };
        self.pending = None;
        self.cycle_index += 1;
        Ok(outcome)
    }
}

/// Encodes `bit` twice on one random basis with independent noise and returns
/// the signed wrapped difference of the two signals.
pub fn xor_repeat_probe(
    bit: bool,
    wheel: &WheelConfig<f64>,
    noise: &NoiseModel<f64>,
    source: &mut EntropySource,
) -> f64 {
    let k = BasisIndex::new(source.next_bits(wheel.bits_per_basis() as u32) as u32, wheel)
        .expect("basis drawn within range");
    let y1 = wheel.encode(bit, k, noise.sample(source));
    let y2 = wheel.encode(bit, k, noise.sample(source));
    y1.signed_diff(y2)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn sector_cfg(len: usize) -> SessionConfig {
        SessionConfig::new(WheelConfig::sector(0.1).unwrap(), NoiseModel::noiseless(), len)
    }

    #[test]
    fn emit_examples() {
        let cfg = sector_cfg(1);
        // R = [1] on basis 0 and on basis 1; the fresh bit is fixed by
        // picking a seed whose first drawn bit is 1.
        let seed = (0u64..).find(|&s| EntropySource::seeded(s).fresh_bits(1)[0]).unwrap();
        for (key, expect) in [(false, PI), (true, 0.1)] {
            let mut a = SessionState::new(Role::Initiator, &[key]);
            let (signal, fresh) = a.emit_cycle(&cfg, 1, &mut EntropySource::seeded(seed)).unwrap();
            assert_eq!(fresh, [true]);
            assert!((signal.samples[0].radians() - expect).abs() < 1e-9);

            let mut b = SessionState::new(Role::Responder, &[key]);
            assert_eq!(b.receive_cycle(&cfg, &signal).unwrap(), [true]);
        }
    }

    #[test]
    fn emit_needs_key() {
        let cfg = SessionConfig::new(WheelConfig::uniform(4).unwrap(), NoiseModel::noiseless(), 4);
        let mut a = SessionState::new(Role::Initiator, &[true; 7]);
        let err = a.emit_cycle(&cfg, 4, &mut EntropySource::seeded(0)).unwrap_err();
        assert!(matches!(err, Error::KeyExhausted { needed: 8, available: 7 }));
    }

    #[test]
    fn wrong_direction_rejected() {
        let cfg = sector_cfg(4);
        let mut b = SessionState::new(Role::Responder, &[true; 4]);
        assert!(matches!(
            b.emit_cycle(&cfg, 4, &mut EntropySource::seeded(0)),
            Err(Error::ProtocolViolation(_))
        ));
    }

    #[test]
    fn sample_count_mismatch() {
        let cfg = sector_cfg(4);
        let mut a = SessionState::new(Role::Initiator, &[true; 4]);
        let (mut signal, _) = a.emit_cycle(&cfg, 4, &mut EntropySource::seeded(0)).unwrap();
        signal.samples.pop();
        let mut b = SessionState::new(Role::Responder, &[true; 4]);
        assert!(matches!(b.receive_cycle(&cfg, &signal), Err(Error::ProtocolViolation(_))));
    }

    #[test]
    fn key_buffer_cursor_monotone() {
        let mut kb = KeyBuffer::new(&[true, false, true]);
        assert_eq!(kb.take(2).unwrap(), [true, false]);
        kb.extend(&[false]);
        assert_eq!(kb.cursor(), 2);
        assert_eq!(kb.take(2).unwrap(), [true, false]);
        assert_eq!(kb.cursor(), 4);
        assert!(kb.take(1).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = sector_cfg(100);
        cfg.validate().unwrap();
        cfg.min_len = 100;
        assert!(cfg.validate().is_err());
        cfg.min_len = 10;
        cfg.retain = 0.0;
        assert!(cfg.validate().is_err());
        cfg.retain = 0.001;
        assert!(cfg.validate().is_err());
        cfg.retain = 1.0;
        cfg.wheel = WheelConfig::sector_limit(0.0).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn geometric_ledger_fraction() {
        // Σ_{j=1}^{1000} f^j / 1000 with f = 0.9991 is 0.65895…; flooring at
        // L = 1000 costs at most 1e-3.
        let exact: f64 = (1..=1000).map(|j| 0.9991f64.powi(j)).sum::<f64>() / 1000.0;
        assert!((exact - 0.659).abs() < 0.001, "{exact}");
        let ledger = DistillationLedger::geometric(1000, 0.9991, 1000);
        assert!(ledger.is_balanced());
        assert!((ledger.distilled_fraction() - exact).abs() <= 1e-3);
    }

    #[test]
    fn xor_probe_noiseless_is_zero() {
        let wheel = WheelConfig::uniform(8).unwrap();
        let mut src = EntropySource::seeded(2);
        for bit in [false, true] {
            assert_eq!(xor_repeat_probe(bit, &wheel, &NoiseModel::noiseless(), &mut src), 0.0);
        }
    }
}
