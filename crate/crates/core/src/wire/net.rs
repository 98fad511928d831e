//! One endpoint of a session over a byte stream.
//!
//! Frame order (strictly alternating, so both ends see the same sequence):
//!
//! ```text
//! A → B  HELLO                      salt, fingerprint, parameters
//! B → A  HELLO                      same salt, B's fingerprint
//! per cycle, E = emitter, R = receiver:
//! E → R  PHASES, DIGESTS
//! R → E  DIGESTS
//! E → R  AMPLIFY                    Toeplitz seed, possibly empty
//! on restart, the would-be emitter of the next cycle:
//! E → R  RESTART
//! ```

use std::io::{Read, Write};

use super::{
    amplify_payload, check_wire_config, digests_payload, parse_amplify, parse_digests, parse_phases,
    parse_restart, phases_payload, read_frame, restart_payload, write_frame, Frame, FrameType, Hello,
    RestartCode, MAX_PHASES,
};
use crate::error::{Error, Result};
use crate::noise::EntropySource;
use crate::protocol::{
    CycleOutcome, Direction, DistillationLedger, ObservedCycle, PhaseSignal, RestartReason, Role, SessionConfig,
    SessionState, SessionStatus,
};

/// Entropy for one endpoint.
#[derive(Debug)]
pub struct EndpointSources {
    /// Fresh bits, noise and amplification seeds.
    pub protocol: EntropySource,
    /// Session id and handshake salt (initiator only).
    pub setup: EntropySource,
}

impl EndpointSources {
    /// Deterministic streams: the same per-role streams as an in-process
    /// session under `seed`, plus stream 2 for the handshake.
    pub fn seeded(seed: u64, role: Role) -> Self {
        let stream = match role {
            Role::Initiator => 0,
            Role::Responder => 1,
        };
        EndpointSources { protocol: EntropySource::substream(seed, stream), setup: EntropySource::substream(seed, 2) }
    }

    pub fn system() -> Self {
        EndpointSources { protocol: EntropySource::system(), setup: EntropySource::system() }
    }
}

#[derive(Debug, Clone)]
pub struct NetReport {
    pub role: Role,
    pub session_id: u64,
    /// This endpoint's announcement; identical to the peer's on success.
    pub hello: Hello,
    pub keystream: Vec<bool>,
    pub ledger: DistillationLedger,
    pub cycles: Vec<CycleOutcome>,
    pub status: SessionStatus,
    /// The public record at wire precision, as a tap would see it.
    pub transcript: Vec<ObservedCycle>,
}

struct Link<'a, 't, S> {
    stream: &'a mut S,
    tap: Option<&'t mut dyn Write>,
    session_id: u64,
}

impl<S: Read + Write> Link<'_, '_, S> {
    fn record(&mut self, raw: &[u8]) -> Result<()> {
        if let Some(tap) = self.tap.as_mut() {
            tap.write_all(raw)?;
            tap.flush()?;
        }
        Ok(())
    }

    fn send(&mut self, kind: FrameType, cycle: u32, payload: Vec<u8>) -> Result<()> {
        let frame = Frame { kind, session_id: self.session_id, cycle, payload };
        let raw = write_frame(self.stream, &frame)?;
        self.record(&raw)
    }

    fn recv(&mut self, cycle: u32) -> Result<Frame> {
        let (frame, raw) = read_frame(self.stream)?;
        self.record(&raw)?;
        if frame.session_id != self.session_id {
            return Err(Error::ProtocolViolation(format!("frame for session {:016x}", frame.session_id)));
        }
        if frame.cycle != cycle {
            return Err(Error::ProtocolViolation(format!("frame for cycle {} during cycle {cycle}", frame.cycle)));
        }
        Ok(frame)
    }

    fn expect(&mut self, kind: FrameType, cycle: u32) -> Result<Vec<u8>> {
        let frame = self.recv(cycle)?;
        if frame.kind != kind {
            return Err(Error::ProtocolViolation(format!("expected {kind:?}, got {:?}", frame.kind)));
        }
        Ok(frame.payload)
    }
}

fn validate(cfg: &SessionConfig, cycles: u32) -> Result<()> {
    cfg.validate()?;
    check_wire_config(cfg)?;
    if cfg.cycle_len > MAX_PHASES {
        return Err(Error::Contract(format!("L = {} exceeds {MAX_PHASES} samples per frame", cfg.cycle_len)));
    }
    if cycles == 0 {
        return Err(Error::Contract("at least one cycle is required".into()));
    }
    Ok(())
}

/// Runs the initiating endpoint (A, emitter of even cycles).
pub fn run_initiator<S: Read + Write>(
    stream: &mut S,
    cfg: &SessionConfig,
    k0: &[bool],
    cycles: u32,
    sources: &mut EndpointSources,
    tap: Option<&mut dyn Write>,
) -> Result<NetReport> {
    validate(cfg, cycles)?;
    let salt = sources.setup.next_u64().to_be_bytes();
    let session_id = sources.setup.next_u64();
    let hello = Hello::new(cfg, cycles, k0, salt)?;
    let mut link = Link { stream, tap, session_id };
    link.send(FrameType::Hello, 0, hello.encode())?;
    let peer = Hello::decode(&link.expect(FrameType::Hello, 0)?)?;
    hello.verify_peer(&peer)?;
    run_cycles(&mut link, Role::Initiator, hello, cfg, k0, cycles, &mut sources.protocol)
}

/// Runs the responding endpoint (B, emitter of odd cycles). The responder
/// always answers HELLO, even when it is about to abort, so both ends learn
/// of a mismatch.
pub fn run_responder<S: Read + Write>(
    stream: &mut S,
    cfg: &SessionConfig,
    k0: &[bool],
    cycles: u32,
    sources: &mut EndpointSources,
    tap: Option<&mut dyn Write>,
) -> Result<NetReport> {
    validate(cfg, cycles)?;
    let mut link = Link { stream, tap, session_id: 0 };
    let (frame, raw) = read_frame(link.stream)?;
    link.record(&raw)?;
    if frame.kind != FrameType::Hello || frame.cycle != 0 {
        return Err(Error::ProtocolViolation(format!("session opened with {:?}", frame.kind)));
    }
    link.session_id = frame.session_id;
    let peer = Hello::decode(&frame.payload)?;
    let hello = Hello::new(cfg, cycles, k0, peer.salt)?;
    link.send(FrameType::Hello, 0, hello.encode())?;
    hello.verify_peer(&peer)?;
    run_cycles(&mut link, Role::Responder, hello, cfg, k0, cycles, &mut sources.protocol)
}

fn run_cycles<S: Read + Write>(
    link: &mut Link<'_, '_, S>,
    role: Role,
    hello: Hello,
    cfg: &SessionConfig,
    k0: &[bool],
    cycles: u32,
    source: &mut EntropySource,
) -> Result<NetReport> {
    let mut state = SessionState::new(role, k0);
    let mut outcomes = Vec::new();
    let mut transcript = Vec::new();
    let mut status = SessionStatus::Completed;

    for _ in 0..cycles {
        let idx = state.cycle_index;
        let (signal, reconciled) = if state.is_emitter() {
            let len = match state.plan_cycle(cfg) {
                Ok(len) => len,
                Err(Error::KeyExhausted { needed, available }) => {
                    link.send(FrameType::Restart, idx, restart_payload(RestartCode::KeyExhausted))?;
                    status = SessionStatus::RestartRequired(RestartReason::KeyExhausted { needed, available });
                    break;
                }
                Err(e) => return Err(e),
            };
            let (signal, _) = state.emit_cycle(cfg, len, source)?;
            let payload = phases_payload(&signal.samples)?;
            let on_wire = PhaseSignal { samples: parse_phases(&payload)?, ..signal };
            link.send(FrameType::Phases, idx, payload)?;
            link.send(FrameType::Digests, idx, digests_payload(&state.local_digests(cfg)?))?;
            let remote = parse_digests(&link.expect(FrameType::Digests, idx)?)?;
            let reconciled = state.reconcile(cfg, &remote)?;
            let seed = source.fresh_bits(state.amplify_seed_len(cfg, reconciled.kept.len()));
            link.send(FrameType::Amplify, idx, amplify_payload(&seed))?;
            outcomes.push(state.finish_cycle(cfg, &reconciled, &seed)?);
            (on_wire, reconciled)
        } else {
            let frame = link.recv(idx)?;
            match frame.kind {
                FrameType::Phases => {}
                FrameType::Restart => {
                    parse_restart(&frame.payload)?;
                    status = match state.plan_cycle(cfg) {
                        Err(Error::KeyExhausted { needed, available }) => {
                            SessionStatus::RestartRequired(RestartReason::KeyExhausted { needed, available })
                        }
                        _ => return Err(Error::ProtocolViolation("peer restarted with key to spare".into())),
                    };
                    break;
                }
                other => return Err(Error::ProtocolViolation(format!("expected PHASES, got {other:?}"))),
            }
            let signal =
                PhaseSignal { samples: parse_phases(&frame.payload)?, cycle_index: idx, direction: Direction::of_cycle(idx) };
            state.receive_cycle(cfg, &signal)?;
            let remote = parse_digests(&link.expect(FrameType::Digests, idx)?)?;
            link.send(FrameType::Digests, idx, digests_payload(&state.local_digests(cfg)?))?;
            let reconciled = state.reconcile(cfg, &remote)?;
            let seed = parse_amplify(&link.expect(FrameType::Amplify, idx)?)?;
            let expected = state.amplify_seed_len(cfg, reconciled.kept.len());
            if seed.len() != expected {
                return Err(Error::ProtocolViolation(format!("seed of {} bits, expected {expected}", seed.len())));
            }
            outcomes.push(state.finish_cycle(cfg, &reconciled, &seed)?);
            (signal, reconciled)
        };
        transcript.push(ObservedCycle { signal, block_mask: reconciled.block_mask });

        let last = outcomes.last().expect("cycle just finished");
        if last.below_minimum {
            let next = state.cycle_index;
            if state.is_emitter() {
                link.send(FrameType::Restart, next, restart_payload(RestartCode::BelowMinimum))?;
            } else {
                let code = parse_restart(&link.expect(FrameType::Restart, next)?)?;
                if code != RestartCode::BelowMinimum {
                    return Err(Error::ProtocolViolation(format!("unexpected restart reason {code:?}")));
                }
            }
            status = SessionStatus::RestartRequired(RestartReason::BelowMinimum {
                distilled: last.distilled,
                min_len: cfg.min_len,
            });
            break;
        }
    }

    Ok(NetReport {
        role,
        session_id: link.session_id,
        hello,
        keystream: state.keystream,
        ledger: state.ledger,
        cycles: outcomes,
        status,
        transcript,
    })
}
