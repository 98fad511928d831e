//! Offline reading of recorded frame streams.
//!
//! A tap file is the raw concatenation of every frame of a session in wire
//! order. Everything an eavesdropper needs is public: the HELLO parameters,
//! the phases and both digest lists (which reveal the surviving blocks).

use std::fs;
use std::path::Path;

use super::{decode_frame, parse_digests, parse_phases, Frame, FrameType, Hello, HEADER_LEN, TAG_LEN};
use crate::error::{Error, Result};
use crate::protocol::{Direction, ObservedCycle, PhaseSignal, SessionConfig};

/// Splits a byte stream into frames, validating each.
pub fn split_frames(mut bytes: &[u8]) -> Result<Vec<Frame>> {
    let mut frames = Vec::new();
    while !bytes.is_empty() {
        if bytes.len() < HEADER_LEN {
            return Err(Error::BadLength(format!("{} stray bytes at the end of the stream", bytes.len())));
        }
        let len = u32::from_be_bytes(bytes[18..22].try_into().unwrap()) as usize;
        let total = (HEADER_LEN + TAG_LEN).saturating_add(len).min(bytes.len());
        frames.push(decode_frame(&bytes[..total])?);
        bytes = &bytes[total..];
    }
    Ok(frames)
}

pub fn read_tap(path: &Path) -> Result<Vec<Frame>> {
    split_frames(&fs::read(path)?)
}

/// A session reconstructed from its frames.
#[derive(Debug, Clone)]
pub struct TapReplay {
    pub session_id: u64,
    pub hello: Hello,
    /// Parameters as announced, at wire precision.
    pub config: SessionConfig,
    pub transcript: Vec<ObservedCycle>,
}

pub fn observed_from_frames(frames: &[Frame]) -> Result<TapReplay> {
    let violation = |m: String| Error::ProtocolViolation(m);
    let first = frames.first().ok_or_else(|| violation("empty tap".into()))?;
    if first.kind != FrameType::Hello {
        return Err(violation(format!("tap starts with {:?}", first.kind)));
    }
    let hello = Hello::decode(&first.payload)?;
    let config = hello.declared_config()?;
    let mut transcript = Vec::new();
    let mut rest = frames[1..].iter().skip_while(|f| f.kind == FrameType::Hello).peekable();
    while let Some(frame) = rest.next() {
        match frame.kind {
            FrameType::Restart => break,
            FrameType::Phases => {}
            other => return Err(violation(format!("expected PHASES, got {other:?}"))),
        }
        let cycle = frame.cycle;
        let samples = parse_phases(&frame.payload)?;
        let mut digests = |who: &str| -> Result<Vec<u64>> {
            match rest.next() {
                Some(f) if f.kind == FrameType::Digests && f.cycle == cycle => parse_digests(&f.payload),
                _ => Err(violation(format!("cycle {cycle}: missing {who} digests"))),
            }
        };
        let emitter = digests("emitter")?;
        let receiver = digests("receiver")?;
        if emitter.len() != receiver.len() {
            return Err(violation(format!("cycle {cycle}: digest lists differ in length")));
        }
        match rest.next() {
            Some(f) if f.kind == FrameType::Amplify && f.cycle == cycle => {}
            // A tap cut mid-cycle still shows the signal and its digests.
            None => {}
            _ => return Err(violation(format!("cycle {cycle}: missing AMPLIFY"))),
        }
        transcript.push(ObservedCycle {
            signal: PhaseSignal { samples, cycle_index: cycle, direction: Direction::of_cycle(cycle) },
            block_mask: emitter.iter().zip(&receiver).map(|(a, b)| a == b).collect(),
        });
    }
    Ok(TapReplay { session_id: first.session_id, hello, config, transcript })
}
