//! Handshake: both ends announce their parameters and a salted fingerprint
//! of `K0` before any key material is used.
//!
//! ```text
//! offset  size  field
//! 0       8     salt (chosen by the initiator, echoed by the responder)
//! 8       8     fingerprint of K0 under the salt
//! 16      1     wheel mode (0 uniform, 1 sector)
//! 17      1     k_M
//! 18      2     Δφ1 as a phase quantum (0 for uniform)
//! 20      2     σ_φ as a phase quantum
//! 22      4     L
//! 26      4     L_min
//! 30      4     reconciliation block size
//! 34      4     cycles
//! 38      8     retained fraction f, IEEE-754 bits
//! ```

use super::QuantizedPhase;
use crate::constellation::WheelConfig;
use crate::error::{Error, Result};
use crate::keyfile::fingerprint;
use crate::noise::NoiseModel;
use crate::protocol::SessionConfig;

pub const HELLO_LEN: usize = 46;
const FINGERPRINT_DOMAIN: &[u8] = b"NKWP-K0";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum WheelMode {
    Uniform = 0,
    Sector = 1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hello {
    pub salt: [u8; 8],
    pub fingerprint: u64,
    pub mode: WheelMode,
    pub bits_per_basis: u8,
    pub spacing: QuantizedPhase,
    pub sigma: QuantizedPhase,
    pub cycle_len: u32,
    pub min_len: u32,
    pub block_size: u32,
    pub cycles: u32,
    pub retain: f64,
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Contract(format!("{what} = {v} does not fit the handshake")))
}

impl Hello {
    pub fn new(cfg: &SessionConfig, cycles: u32, k0: &[bool], salt: [u8; 8]) -> Result<Self> {
        let (mode, spacing) = match cfg.wheel {
            WheelConfig::Uniform { .. } => (WheelMode::Uniform, QuantizedPhase(0)),
            WheelConfig::Sector { spacing } => (WheelMode::Sector, QuantizedPhase::quantize_width(spacing)),
        };
        Ok(Hello {
            salt,
            fingerprint: fingerprint(FINGERPRINT_DOMAIN, &salt, k0),
            mode,
            bits_per_basis: cfg.wheel.bits_per_basis() as u8,
            spacing,
            sigma: QuantizedPhase::quantize_width(cfg.noise.sigma()),
            cycle_len: to_u32(cfg.cycle_len, "L")?,
            min_len: to_u32(cfg.min_len, "L_min")?,
            block_size: to_u32(cfg.block_size, "block size")?,
            cycles,
            retain: cfg.retain,
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HELLO_LEN);
        out.extend_from_slice(&self.salt);
        out.extend_from_slice(&self.fingerprint.to_be_bytes());
        out.push(self.mode as u8);
        out.push(self.bits_per_basis);
        out.extend_from_slice(&self.spacing.0.to_be_bytes());
        out.extend_from_slice(&self.sigma.0.to_be_bytes());
        for v in [self.cycle_len, self.min_len, self.block_size, self.cycles] {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out.extend_from_slice(&self.retain.to_bits().to_be_bytes());
        out
    }

    pub fn decode(payload: &[u8]) -> Result<Self> {
        if payload.len() != HELLO_LEN {
            return Err(Error::BadLength(format!("HELLO payload of {} bytes, expected {HELLO_LEN}", payload.len())));
        }
        let u16_at = |i: usize| u16::from_be_bytes([payload[i], payload[i + 1]]);
        let u32_at = |i: usize| u32::from_be_bytes(payload[i..i + 4].try_into().unwrap());
        let mode = match payload[16] {
            0 => WheelMode::Uniform,
            1 => WheelMode::Sector,
            m => return Err(Error::ProtocolViolation(format!("unknown wheel mode {m}"))),
        };
        Ok(Hello {
            salt: payload[..8].try_into().unwrap(),
            fingerprint: u64::from_be_bytes(payload[8..16].try_into().unwrap()),
            mode,
            bits_per_basis: payload[17],
            spacing: QuantizedPhase(u16_at(18)),
            sigma: QuantizedPhase(u16_at(20)),
            cycle_len: u32_at(22),
            min_len: u32_at(26),
            block_size: u32_at(30),
            cycles: u32_at(34),
            retain: f64::from_bits(u64::from_be_bytes(payload[38..46].try_into().unwrap())),
        })
    }

    /// Compares the peer's announcement with ours: parameters first, then the
    /// salt and the key fingerprint.
    pub fn verify_peer(&self, peer: &Hello) -> Result<()> {
        let mut diffs = Vec::new();
        let mut check = |name: &str, same: bool| {
            if !same {
                diffs.push(name.to_string());
            }
        };
        check("wheel mode", self.mode == peer.mode);
        check("k_M", self.bits_per_basis == peer.bits_per_basis);
        check("Δφ1", self.spacing == peer.spacing);
        check("σ_φ", self.sigma == peer.sigma);
        check("L", self.cycle_len == peer.cycle_len);
        check("L_min", self.min_len == peer.min_len);
        check("block size", self.block_size == peer.block_size);
        check("cycles", self.cycles == peer.cycles);
        check("f", self.retain.to_bits() == peer.retain.to_bits());
        if !diffs.is_empty() {
            return Err(Error::ConfigMismatch(diffs.join(", ")));
        }
        if self.salt != peer.salt {
            return Err(Error::ProtocolViolation("peer answered with a different salt".into()));
        }
        if self.fingerprint != peer.fingerprint {
            return Err(Error::FingerprintMismatch);
        }
        Ok(())
    }

    /// The session parameters as announced, with phases at wire precision.
    /// This is what an observer of the channel can reconstruct.
    pub fn declared_config(&self) -> Result<SessionConfig> {
        let wheel = match self.mode {
            WheelMode::Uniform => {
                if self.bits_per_basis == 0 || self.bits_per_basis > 16 {
                    return Err(Error::ProtocolViolation(format!("k_M = {} out of range", self.bits_per_basis)));
                }
                WheelConfig::uniform(1 << self.bits_per_basis)?
            }
            WheelMode::Sector => WheelConfig::sector(self.spacing.radians())?,
        };
        let mut cfg = SessionConfig::new(wheel, NoiseModel::new(self.sigma.radians())?, self.cycle_len as usize);
        cfg.min_len = self.min_len as usize;
        cfg.block_size = self.block_size as usize;
        cfg.retain = self.retain;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::EntropySource;

    fn cfg() -> SessionConfig {
        let mut c = SessionConfig::new(WheelConfig::sector(0.02).unwrap(), NoiseModel::new(0.4).unwrap(), 64);
        c.min_len = 8;
        c
    }

    #[test]
    fn round_trip() {
        let k0 = EntropySource::seeded(1).fresh_bits(128);
        let h = Hello::new(&cfg(), 5, &k0, [7; 8]).unwrap();
        let bytes = h.encode();
        assert_eq!(bytes.len(), HELLO_LEN);
        assert_eq!(Hello::decode(&bytes).unwrap(), h);
        assert!(Hello::decode(&bytes[..45]).is_err());
    }

    #[test]
    fn same_key_same_salt_match() {
        let k0 = EntropySource::seeded(2).fresh_bits(64);
        let a = Hello::new(&cfg(), 3, &k0, [1; 8]).unwrap();
        let b = Hello::new(&cfg(), 3, &k0.clone(), [1; 8]).unwrap();
        a.verify_peer(&b).unwrap();
        // A fresh salt changes the fingerprint.
        assert_ne!(a.fingerprint, Hello::new(&cfg(), 3, &k0, [2; 8]).unwrap().fingerprint);
    }

    #[test]
    fn one_bit_of_key_differs() {
        let k0 = EntropySource::seeded(3).fresh_bits(64);
        let mut other = k0.clone();
        other[17] = !other[17];
        let a = Hello::new(&cfg(), 3, &k0, [1; 8]).unwrap();
        let b = Hello::new(&cfg(), 3, &other, [1; 8]).unwrap();
        assert!(matches!(a.verify_peer(&b), Err(Error::FingerprintMismatch)));
    }

    #[test]
    fn parameters_must_agree() {
        let k0 = EntropySource::seeded(4).fresh_bits(64);
        let a = Hello::new(&cfg(), 3, &k0, [1; 8]).unwrap();
        let mut other = cfg();
        other.wheel = WheelConfig::uniform(4).unwrap();
        let b = Hello::new(&other, 3, &k0, [1; 8]).unwrap();
        assert!(matches!(a.verify_peer(&b), Err(Error::ConfigMismatch(_))));
        let c = Hello::new(&cfg(), 4, &k0, [1; 8]).unwrap();
        assert!(matches!(a.verify_peer(&c), Err(Error::ConfigMismatch(m)) if m == "cycles"));
    }

    #[test]
    fn declared_config_is_wire_precise() {
        let k0 = EntropySource::seeded(5).fresh_bits(64);
        let h = Hello::new(&cfg(), 3, &k0, [1; 8]).unwrap();
        let d = h.declared_config().unwrap();
        assert!((d.wheel.spacing().unwrap() - 0.02).abs() <= super::super::quantization_bound());
        assert!((d.noise.sigma() - 0.4).abs() <= super::super::quantization_bound());
        assert_eq!((d.cycle_len, d.min_len, d.block_size, d.retain), (64, 8, 64, cfg().retain));
    }
}
