//! Byte-exact framing of a session for transport over any reliable ordered
//! byte stream.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "NKWP"
//! 4       1     version (1)
//! 5       1     frame type
//! 6       8     session id
//! 14      4     cycle index, big-endian u32
//! 18      4     payload length, big-endian u32 (at most 2^20)
//! 22      n     payload
//! 22+n    8     tag: SHA-256(header ‖ payload)[..8]
//! ```
//!
//! Phases travel as 16-bit quanta of the circle, `φ = 2π·q/65536`.

mod hello;
mod net;
mod tap;

use std::f64::consts::PI;
use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use crate::bits::{pack, unpack};
use crate::constellation::{Phase, WheelConfig};
use crate::error::{Error, Result};
use crate::protocol::SessionConfig;

pub use hello::{Hello, WheelMode, HELLO_LEN};
pub use net::{run_initiator, run_responder, EndpointSources, NetReport};
pub use tap::{observed_from_frames, read_tap, split_frames, TapReplay};

pub const MAGIC: &[u8; 4] = b"NKWP";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 22;
pub const TAG_LEN: usize = 8;
pub const MAX_PAYLOAD: usize = 1 << 20;
pub const MAX_PHASES: usize = 1 << 19;
/// Phase quanta per turn.
pub const QUANTA: u32 = 1 << 16;
/// Smallest constellation spacing accepted on the wire, in quanta.
pub const MIN_SPACING_QUANTA: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FrameType {
    Hello = 1,
    Phases = 2,
    Digests = 3,
    Amplify = 4,
    Restart = 5,
}

impl TryFrom<u8> for FrameType {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Ok(match v {
            1 => FrameType::Hello,
            2 => FrameType::Phases,
            3 => FrameType::Digests,
            4 => FrameType::Amplify,
            5 => FrameType::Restart,
            other => return Err(Error::ProtocolViolation(format!("unknown frame type {other}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameType,
    pub session_id: u64,
    pub cycle: u32,
    pub payload: Vec<u8>,
}

fn tag(bytes: &[u8]) -> [u8; TAG_LEN] {
    Sha256::digest(bytes)[..TAG_LEN].try_into().unwrap()
}

pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>> {
    if frame.payload.len() > MAX_PAYLOAD {
        return Err(Error::BadLength(format!("payload of {} bytes exceeds 2^20", frame.payload.len())));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + frame.payload.len() + TAG_LEN);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(frame.kind as u8);
    out.extend_from_slice(&frame.session_id.to_be_bytes());
    out.extend_from_slice(&frame.cycle.to_be_bytes());
    out.extend_from_slice(&(frame.payload.len() as u32).to_be_bytes());
    out.extend_from_slice(&frame.payload);
    let t = tag(&out);
    out.extend_from_slice(&t);
    Ok(out)
}

/// Validates a header and returns the payload length it announces.
fn check_header(header: &[u8]) -> Result<usize> {
    if header.len() < 4 || &header[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if header.len() < HEADER_LEN {
        return Err(Error::BadLength(format!("{} bytes is shorter than a frame header", header.len())));
    }
    if header[4] != VERSION {
        return Err(Error::BadVersion(header[4]));
    }
    let len = u32::from_be_bytes(header[18..22].try_into().unwrap()) as usize;
    if len > MAX_PAYLOAD {
        return Err(Error::BadLength(format!("payload length {len} exceeds 2^20")));
    }
    Ok(len)
}

/// Decodes exactly one frame occupying all of `bytes`.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame> {
    let len = check_header(bytes)?;
    let total = HEADER_LEN + len + TAG_LEN;
    if bytes.len() != total {
        return Err(Error::BadLength(format!("frame announces {total} bytes, buffer holds {}", bytes.len())));
    }
    let body = &bytes[..HEADER_LEN + len];
    if tag(body) != bytes[HEADER_LEN + len..] {
        return Err(Error::BadTag);
    }
    Ok(Frame {
        kind: FrameType::try_from(bytes[5])?,
        session_id: u64::from_be_bytes(bytes[6..14].try_into().unwrap()),
        cycle: u32::from_be_bytes(bytes[14..18].try_into().unwrap()),
        payload: body[HEADER_LEN..].to_vec(),
    })
}

/// Reads one frame from `reader`, returning it with its raw bytes.
pub fn read_frame(reader: &mut impl Read) -> Result<(Frame, Vec<u8>)> {
    let mut raw = vec![0u8; HEADER_LEN];
    reader.read_exact(&mut raw)?;
    let len = check_header(&raw)?;
    raw.resize(HEADER_LEN + len + TAG_LEN, 0);
    reader.read_exact(&mut raw[HEADER_LEN..])?;
    let frame = decode_frame(&raw)?;
    Ok((frame, raw))
}

pub fn write_frame(writer: &mut impl Write, frame: &Frame) -> Result<Vec<u8>> {
    let raw = encode_frame(frame)?;
    writer.write_all(&raw)?;
    writer.flush()?;
    Ok(raw)
}

/// A phase rounded to the nearest of 65536 equally spaced points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantizedPhase(pub u16);

impl QuantizedPhase {
    pub fn quantize(phase: Phase<f64>) -> Self {
        let q = (phase.radians() * f64::from(QUANTA) / (2.0 * PI)).round() as u32;
        QuantizedPhase((q % QUANTA) as u16)
    }

    /// Quantizes a non-negative angle below half a turn (a width, not a
    /// position on the circle).
    pub fn quantize_width(radians: f64) -> Self {
        Self::quantize(Phase::new(radians))
    }

    pub fn radians(self) -> f64 {
        2.0 * PI * f64::from(self.0) / f64::from(QUANTA)
    }

    pub fn phase(self) -> Phase<f64> {
        Phase::new(self.radians())
    }
}

/// Largest phase change caused by quantization.
pub fn quantization_bound() -> f64 {
    PI / f64::from(QUANTA)
}

/// Rejects configurations whose constellation is too fine for 16-bit phases.
pub fn check_wire_config(cfg: &SessionConfig) -> Result<()> {
    let quantum = 2.0 * PI / f64::from(QUANTA);
    let min = f64::from(MIN_SPACING_QUANTA) * quantum;
    let spacing = match cfg.wheel {
        WheelConfig::Sector { spacing } => spacing,
        WheelConfig::Uniform { bases } => PI / f64::from(bases),
    };
    if spacing < min - 1e-12 {
        return Err(Error::Contract(format!(
            "constellation spacing {spacing} rad is below {MIN_SPACING_QUANTA} phase quanta ({min:.6} rad)"
        )));
    }
    Ok(())
}

fn take<'a>(payload: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if payload.len() < n {
        return Err(Error::BadLength(format!("{what}: need {n} bytes, {} left", payload.len())));
    }
    let (head, rest) = payload.split_at(n);
    *payload = rest;
    Ok(head)
}

fn take_u32(payload: &mut &[u8], what: &str) -> Result<u32> {
    Ok(u32::from_be_bytes(take(payload, 4, what)?.try_into().unwrap()))
}

fn finish(payload: &[u8], what: &str) -> Result<()> {
    if payload.is_empty() {
        Ok(())
    } else {
        Err(Error::BadLength(format!("{what}: {} trailing bytes", payload.len())))
    }
}

/// Count followed by one big-endian `u16` quantum per sample.
pub fn phases_payload(samples: &[Phase<f64>]) -> Result<Vec<u8>> {
    if samples.len() > MAX_PHASES {
        return Err(Error::BadLength(format!("{} samples exceed 2^19 per frame", samples.len())));
    }
    let mut out = Vec::with_capacity(4 + 2 * samples.len());
    out.extend_from_slice(&(samples.len() as u32).to_be_bytes());
    for &s in samples {
        out.extend_from_slice(&QuantizedPhase::quantize(s).0.to_be_bytes());
    }
    Ok(out)
}

pub fn parse_phases(mut payload: &[u8]) -> Result<Vec<Phase<f64>>> {
    let count = take_u32(&mut payload, "phase count")? as usize;
    if count > MAX_PHASES {
        return Err(Error::BadLength(format!("{count} samples exceed 2^19 per frame")));
    }
    if payload.len() != 2 * count {
        return Err(Error::BadLength(format!("{count} samples announced, {} bytes present", payload.len())));
    }
    Ok(payload
        .chunks_exact(2)
        .map(|c| QuantizedPhase(u16::from_be_bytes([c[0], c[1]])).phase())
        .collect())
}

pub fn digests_payload(digests: &[u64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 8 * digests.len());
    out.extend_from_slice(&(digests.len() as u32).to_be_bytes());
    for d in digests {
        out.extend_from_slice(&d.to_be_bytes());
    }
    out
}

pub fn parse_digests(mut payload: &[u8]) -> Result<Vec<u64>> {
    let count = take_u32(&mut payload, "digest count")? as usize;
    if payload.len() != 8 * count {
        return Err(Error::BadLength(format!("{count} digests announced, {} bytes present", payload.len())));
    }
    Ok(payload.chunks_exact(8).map(|c| u64::from_be_bytes(c.try_into().unwrap())).collect())
}

/// Bit count followed by the Toeplitz seed packed most significant bit first.
pub fn amplify_payload(seed: &[bool]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + seed.len().div_ceil(8));
    out.extend_from_slice(&(seed.len() as u32).to_be_bytes());
    out.extend_from_slice(&pack(seed));
    out
}

pub fn parse_amplify(mut payload: &[u8]) -> Result<Vec<bool>> {
    let count = take_u32(&mut payload, "seed length")? as usize;
    let body = take(&mut payload, count.div_ceil(8), "seed bits")?;
    finish(payload, "amplify payload")?;
    Ok(unpack(body, count))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum RestartCode {
    KeyExhausted = 1,
    BelowMinimum = 2,
}

pub fn restart_payload(code: RestartCode) -> Vec<u8> {
    vec![code as u8]
}

pub fn parse_restart(payload: &[u8]) -> Result<RestartCode> {
    match payload {
        [1] => Ok(RestartCode::KeyExhausted),
        [2] => Ok(RestartCode::BelowMinimum),
        [_] => Err(Error::ProtocolViolation(format!("unknown restart reason {}", payload[0]))),
        _ => Err(Error::BadLength(format!("restart payload of {} bytes", payload.len()))),
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::noise::EntropySource;

    fn frame(kind: FrameType, payload: Vec<u8>) -> Frame {
        Frame { kind, session_id: 0x0102_0304_0506_0708, cycle: 3, payload }
    }

    #[test]
    fn empty_phases_round_trip() {
        let f = frame(FrameType::Phases, phases_payload(&[]).unwrap());
        let raw = encode_frame(&f).unwrap();
        assert_eq!(raw.len(), HEADER_LEN + 4 + TAG_LEN);
        assert_eq!(decode_frame(&raw).unwrap(), f);
        assert!(parse_phases(&f.payload).unwrap().is_empty());
    }

    #[test]
    fn header_layout() {
        let raw = encode_frame(&frame(FrameType::Digests, vec![0xaa, 0xbb])).unwrap();
        assert_eq!(&raw[..4], b"NKWP");
        assert_eq!(raw[4], 1);
        assert_eq!(raw[5], 3);
        assert_eq!(raw[6..14], [1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(raw[14..18], [0, 0, 0, 3]);
        assert_eq!(raw[18..22], [0, 0, 0, 2]);
        assert_eq!(raw[22..24], [0xaa, 0xbb]);
        let mut h = Sha256::new();
        h.update(&raw[..24]);
        assert_eq!(raw[24..], h.finalize()[..8]);
    }

    #[test]
    fn every_payload_bit_flip_is_caught() {
        let raw = encode_frame(&frame(FrameType::Phases, vec![0x5a; 12])).unwrap();
        for byte in HEADER_LEN..HEADER_LEN + 12 {
            for bit in 0..8 {
                let mut bad = raw.clone();
                bad[byte] ^= 1 << bit;
                assert!(matches!(decode_frame(&bad), Err(Error::BadTag)));
            }
        }
    }

    #[test]
    fn distinct_rejections() {
        let raw = encode_frame(&frame(FrameType::Hello, vec![1, 2, 3])).unwrap();
        let mut bad = raw.clone();
        bad[0] = b'X';
        assert!(matches!(decode_frame(&bad), Err(Error::BadMagic)));
        let mut bad = raw.clone();
        bad[4] = 2;
        assert!(matches!(decode_frame(&bad), Err(Error::BadVersion(2))));
        let mut bad = raw.clone();
        bad[18..22].copy_from_slice(&((MAX_PAYLOAD as u32) + 1).to_be_bytes());
        assert!(matches!(decode_frame(&bad), Err(Error::BadLength(_))));
        assert!(matches!(decode_frame(&raw[..raw.len() - 1]), Err(Error::BadLength(_))));
        let mut bad = raw.clone();
        let last = bad.len() - 1;
        bad[last] ^= 0x80;
        assert!(matches!(decode_frame(&bad), Err(Error::BadTag)));
        assert!(encode_frame(&frame(FrameType::Phases, vec![0; MAX_PAYLOAD + 1])).is_err());
    }

    #[test]
    fn stream_reader_matches_buffer_decoder() {
        let frames = [frame(FrameType::Hello, vec![9; 46]), frame(FrameType::Restart, vec![1])];
        let mut buf = Vec::new();
        for f in &frames {
            write_frame(&mut buf, f).unwrap();
        }
        let mut cursor = &buf[..];
        for f in &frames {
            let (got, raw) = read_frame(&mut cursor).unwrap();
            assert_eq!(&got, f);
            assert_eq!(raw, encode_frame(f).unwrap());
        }
        assert!(cursor.is_empty());
    }

    #[test]
    fn quantization_examples() {
        let payload = phases_payload(&[Phase::new(0.0), Phase::new(PI)]).unwrap();
        assert_eq!(payload, [0, 0, 0, 2, 0, 0, 0x80, 0]);
        assert_eq!(QuantizedPhase::quantize(Phase::new(2.0 * PI - 1e-7)).0, 0);
        assert_eq!(QuantizedPhase(16384).radians(), PI / 2.0);
    }

    #[test]
    fn quantization_error_bound() {
        let mut src = EntropySource::seeded(42);
        let phases: Vec<_> = (0..100_000).map(|_| Phase::new(src.uniform() * 2.0 * PI)).collect();
        let back = parse_phases(&phases_payload(&phases).unwrap()).unwrap();
        let worst = phases.iter().zip(&back).map(|(a, b)| a.signed_diff(*b).abs()).fold(0.0, f64::max);
        assert!(worst <= quantization_bound() + 1e-15, "{worst}");
    }

    #[test]
    fn short_phase_payload() {
        let mut payload = phases_payload(&[Phase::new(0.1), Phase::new(0.2)]).unwrap();
        payload[..4].copy_from_slice(&3u32.to_be_bytes());
        assert!(matches!(parse_phases(&payload), Err(Error::BadLength(_))));
    }

    #[test]
    fn small_payloads_round_trip() {
        let d = [0u64, u64::MAX, 0x1234];
        assert_eq!(parse_digests(&digests_payload(&d)).unwrap(), d);
        let seed = EntropySource::seeded(1).fresh_bits(77);
        assert_eq!(parse_amplify(&amplify_payload(&seed)).unwrap(), seed);
        assert!(parse_amplify(&amplify_payload(&[])).unwrap().is_empty());
        assert_eq!(parse_restart(&restart_payload(RestartCode::BelowMinimum)).unwrap(), RestartCode::BelowMinimum);
        assert!(parse_restart(&[]).is_err());
    }

    #[test]
    fn spacing_guard() {
        use crate::noise::NoiseModel;
        let fine = SessionConfig::new(WheelConfig::sector(1e-5).unwrap(), NoiseModel::noiseless(), 8);
        assert!(check_wire_config(&fine).is_err());
        let edge = 64.0 * 2.0 * PI / 65536.0;
        let ok = SessionConfig::new(WheelConfig::sector(edge).unwrap(), NoiseModel::noiseless(), 8);
        assert!(check_wire_config(&ok).is_ok());
        let wheel = SessionConfig::new(WheelConfig::uniform(1024).unwrap(), NoiseModel::noiseless(), 8);
        assert!(check_wire_config(&wheel).is_err());
    }

    fn any_kind() -> impl Strategy<Value = FrameType> {
        prop_oneof![
            Just(FrameType::Hello),
            Just(FrameType::Phases),
            Just(FrameType::Digests),
            Just(FrameType::Amplify),
            Just(FrameType::Restart),
        ]
    }

    proptest! {
        #[test]
        fn frames_round_trip(
            kind in any_kind(),
            session_id: u64,
            cycle: u32,
            payload in proptest::collection::vec(any::<u8>(), 0..2048),
        ) {
            let f = Frame { kind, session_id, cycle, payload };
            let raw = encode_frame(&f).unwrap();
            prop_assert_eq!(raw.len(), HEADER_LEN + f.payload.len() + TAG_LEN);
            prop_assert_eq!(decode_frame(&raw).unwrap(), f);
        }

        #[test]
        fn truncation_never_decodes(payload in proptest::collection::vec(any::<u8>(), 0..64), cut in 1usize..40) {
            let raw = encode_frame(&frame(FrameType::Amplify, payload)).unwrap();
            let cut = cut.min(raw.len());
            prop_assert!(decode_frame(&raw[..raw.len() - cut]).is_err());
        }

        #[test]
        fn quantize_is_nearest(x in 0.0f64..(2.0 * PI)) {
            let q = QuantizedPhase::quantize(Phase::new(x));
            prop_assert!(Phase::new(x).signed_diff(q.phase()).abs() <= quantization_bound() + 1e-15);
        }
    }
}
