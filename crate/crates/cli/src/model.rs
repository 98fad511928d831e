//! Flags shared by several commands and their translation into library types.

use std::path::Path;
use std::str::FromStr;

use clap::Args;
use noisekey::keyfile::{read_key, write_key, KeyEncoding};
use noisekey::noise::splitmix64;
use noisekey::protocol::{DEFAULT_BLOCK_SIZE, DEFAULT_RETAIN};
use noisekey::wire::check_wire_config;
use noisekey::{EntropySource, NoiseModel, SessionConfig, WheelConfig};

use crate::fail::{CmdResult, Failure};

pub const SEED_ENV: &str = "NOISEKEY_TEST_SEED";

/// `uniform:M` or `sector:DPHI`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WheelSpec {
    Uniform(u32),
    Sector(f64),
}

impl FromStr for WheelSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (mode, value) = s.split_once(':').ok_or_else(|| format!("expected uniform:M or sector:DPHI, got {s:?}"))?;
        match mode {
            "uniform" => value.parse().map(WheelSpec::Uniform).map_err(|e| format!("bad basis count {value:?}: {e}")),
            "sector" => value.parse().map(WheelSpec::Sector).map_err(|e| format!("bad spacing {value:?}: {e}")),
            other => Err(format!("unknown wheel mode {other:?}")),
        }
    }
}

impl WheelSpec {
    pub fn build(self) -> CmdResult<WheelConfig> {
        Ok(match self {
            WheelSpec::Uniform(m) => WheelConfig::uniform(m)?,
            WheelSpec::Sector(d) => WheelConfig::sector(d)?,
        })
    }

    /// Like [`build`](Self::build) but admits the degenerate `sector:0`.
    pub fn build_limit(self) -> CmdResult<WheelConfig> {
        Ok(match self {
            WheelSpec::Sector(d) => WheelConfig::sector_limit(d)?,
            other => other.build()?,
        })
    }
}

#[derive(Args, Debug, Clone)]
#[group(multiple = false)]
pub struct NoiseArgs {
    /// Phase-noise standard deviation σ_φ in radians.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Mean photon number per bit; σ_φ = √(2/⟨n⟩).
    #[arg(long)]
    pub photons: Option<f64>,
    /// Bases covered by one standard deviation; σ_φ = π·N_σ/M.
    #[arg(long)]
    pub coverage: Option<f64>,
}

impl NoiseArgs {
    pub fn build(&self, wheel: &WheelConfig) -> CmdResult<NoiseModel> {
        Ok(match (self.sigma, self.photons, self.coverage) {
            (Some(s), _, _) => NoiseModel::new(s)?,
            (_, Some(n), _) => NoiseModel::from_photons(n)?,
            (_, _, Some(c)) => NoiseModel::from_coverage(c, wheel.bases())?,
            _ => NoiseModel::noiseless(),
        })
    }
}

#[derive(Args, Debug, Clone)]
pub struct SessionArgs {
    /// Constellation: uniform:M or sector:DPHI.
    #[arg(long, default_value = "sector:0.1")]
    pub wheel: WheelSpec,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Cycle length L in bits.
    #[arg(long = "L", default_value_t = 1000)]
    pub len: usize,
    /// Restart threshold L_min (default 1).
    #[arg(long = "L-min")]
    pub min_len: Option<usize>,
    /// Per-cycle retained fraction f after privacy amplification.
    #[arg(long = "f-retain", default_value_t = DEFAULT_RETAIN)]
    pub retain: f64,
    /// Reconciliation block size in bits.
    #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
    pub block: usize,
}

impl SessionArgs {
    /// Builds and validates the configuration, including the 16-bit phase
    /// guard so the same flags work for in-process and networked runs.
    pub fn build(&self) -> CmdResult<SessionConfig> {
        let wheel = self.wheel.build()?;
        let mut cfg = SessionConfig::new(wheel, self.noise.build(&wheel)?, self.len);
        if let Some(m) = self.min_len {
            cfg.min_len = m;
        }
        cfg.retain = self.retain;
        cfg.block_size = self.block;
        cfg.validate()?;
        check_wire_config(&cfg)?;
        Ok(cfg)
    }
}

/// `--seed`, else `NOISEKEY_TEST_SEED`, else none (system entropy).
pub fn resolve_seed(flag: Option<u64>) -> CmdResult<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|e| Failure::flags(format!("{SEED_ENV}={v:?}: {e}"))),
        Err(_) => Ok(None),
    }
}

/// Stream reserved for generating keys, separate from session streams.
const KEY_STREAM: u64 = 3;

pub fn key_source(seed: Option<u64>) -> EntropySource {
    match seed {
        Some(s) => EntropySource::substream(s, KEY_STREAM),
        None => EntropySource::system(),
    }
}

/// Seed for row `i` of a sweep.
pub fn row_seed(seed: u64, i: usize) -> u64 {
    splitmix64(seed ^ splitmix64(i as u64 + 1))
}

pub fn load_key(path: &Path) -> CmdResult<Vec<bool>> {
    read_key(path).map_err(|e| Failure::from(e).context(format!("reading key {}", path.display())))
}

pub fn save_key(path: &Path, bits: &[bool], hex: bool) -> CmdResult {
    let enc = if hex { KeyEncoding::Hex } else { KeyEncoding::Binary };
    write_key(path, bits, enc).map_err(|e| Failure::from(e).context(format!("writing {}", path.display())))
}

/// Nine significant digits, fixed exponent form, for diff-able tables.
pub fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wheel_specs() {
        assert_eq!("uniform:32".parse::<WheelSpec>().unwrap(), WheelSpec::Uniform(32));
        assert_eq!("sector:0.02".parse::<WheelSpec>().unwrap(), WheelSpec::Sector(0.02));
        assert!("sector".parse::<WheelSpec>().is_err());
        assert!("circle:3".parse::<WheelSpec>().is_err());
        assert!(WheelSpec::Sector(0.0).build().is_err());
        assert!(WheelSpec::Sector(0.0).build_limit().is_ok());
    }

    #[test]
    fn nine_digits() {
        assert_eq!(sig9(0.0455002619231831), "4.55002619e-2");
        assert_eq!(sig9(0.0), "0.00000000e0");
        assert_eq!(sig9(1.0), "1.00000000e0");
    }
}
