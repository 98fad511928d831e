use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use noisekey::adversary::{
    brute_force_count_sector, brute_force_count_uniform, candidate_bits, exhaustive_attack, AttackReport,
    MAX_ATTACK_KEY_BITS,
};
use noisekey::protocol::{run_session, ObservedCycle, SessionSources};
use noisekey::wire::{observed_from_frames, quantization_bound, read_tap};
use noisekey::{SessionConfig, WheelConfig};

use crate::fail::{CmdResult, Failure};
use crate::model::{key_source, load_key, resolve_seed, NoiseArgs, WheelSpec};

#[derive(Args, Debug)]
pub struct AttackArgs {
    /// Length of the key to search for (at most 20 bits).
    #[arg(long)]
    pub k0_len: Option<u32>,
    /// Constellation of the simulated session: uniform:M or sector:DPHI.
    #[arg(long, default_value = "sector:0.1")]
    pub wheel: WheelSpec,
    /// Sector spacing Δφ1; shorthand for --wheel sector:DPHI.
    #[arg(long, conflicts_with = "wheel")]
    pub dphi: Option<f64>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Phase samples in the simulated transcript.
    #[arg(long, default_value_t = 64)]
    pub transcript_bits: usize,
    /// Attack a recorded frame stream instead of simulating a session.
    #[arg(long)]
    pub tap: Option<PathBuf>,
    /// The true key, for ranking (tap mode).
    #[arg(long)]
    pub k0: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

struct Target {
    cfg: SessionConfig,
    transcript: Vec<ObservedCycle>,
    k0: Option<Vec<bool>>,
    k0_len: u32,
    tolerance: f64,
}

fn check_len(len: u32) -> CmdResult {
    if len > MAX_ATTACK_KEY_BITS {
        return Err(Failure::flags(format!("--k0-len {len} exceeds the limit of {MAX_ATTACK_KEY_BITS} bits")));
    }
    Ok(())
}

fn from_tap(args: &AttackArgs, path: &Path) -> CmdResult<Target> {
    let frames = read_tap(path).map_err(|e| Failure::from(e).context(format!("reading tap {}", path.display())))?;
    let replay = observed_from_frames(&frames)?;
    let k0 = args.k0.as_ref().map(|p| load_key(p)).transpose()?;
    let k0_len = match (args.k0_len, &k0) {
        (Some(n), _) => n,
        (None, Some(k)) => k.len() as u32,
        (None, None) => return Err(Failure::flags("--tap needs --k0-len or --k0")),
    };
    check_len(k0_len)?;
    if let Some(k) = &k0 {
        if k.len() != k0_len as usize {
            return Err(Failure::flags(format!("--k0 holds {} bits but --k0-len is {k0_len}", k.len())));
        }
    }
    Ok(Target { cfg: replay.config, transcript: replay.transcript, k0, k0_len, tolerance: quantization_bound() + 1e-9 })
}

/// Runs a session long enough to put `transcript_bits` phases on the
/// channel. Each cycle ciphers as many bits as the key can fund.
fn simulated(args: &AttackArgs) -> CmdResult<Target> {
    let k0_len = args.k0_len.unwrap_or(8);
    check_len(k0_len)?;
    let spec = args.dphi.map_or(args.wheel, WheelSpec::Sector);
    let wheel = spec.build()?;
    let noise = args.noise.build(&wheel)?;
    let per_cycle = (k0_len as usize / wheel.bits_per_basis()).min(args.transcript_bits);
    if per_cycle == 0 {
        return Err(Failure::flags("key too short to cipher a single bit"));
    }
    let mut cfg = SessionConfig::new(wheel, noise, per_cycle);
    cfg.retain = 1.0;
    cfg.block_size = per_cycle;
    cfg.validate()?;
    let seed = resolve_seed(args.seed)?;
    let k0 = key_source(seed).fresh_bits(k0_len as usize);
    let mut sources = seed.map_or_else(SessionSources::system, SessionSources::seeded);
    let cycles = args.transcript_bits.div_ceil(per_cycle);
    let report = run_session(&cfg, &k0, cycles, &mut sources)?;
    Ok(Target { cfg, transcript: report.transcript, k0: Some(k0), k0_len, tolerance: 0.0 })
}

fn brute_force_cost(cfg: &SessionConfig, k0_len: u32) -> String {
    match cfg.wheel {
        WheelConfig::Sector { .. } => brute_force_count_sector(k0_len).to_string(),
        WheelConfig::Uniform { bases } => {
            let covered = (cfg.noise.sigma() * f64::from(bases) / std::f64::consts::PI).round() as u64;
            brute_force_count_uniform(k0_len, covered).map_or_else(|_| "n/a".into(), |c| c.to_string())
        }
    }
}

fn wheel_label(w: &WheelConfig) -> String {
    match w {
        WheelConfig::Uniform { bases } => format!("uniform:{bases}"),
        WheelConfig::Sector { spacing } => format!("sector:{spacing}"),
    }
}

pub fn print_report(out: &mut impl Write, cfg: &SessionConfig, samples: usize, r: &AttackReport) -> std::io::Result<()> {
    writeln!(out, "wheel: {}", wheel_label(&cfg.wheel))?;
    writeln!(out, "sigma_phi: {}", cfg.noise.sigma())?;
    writeln!(out, "k0_len: {}", r.k0_len)?;
    writeln!(out, "transcript_bits: {samples}")?;
    writeln!(out, "candidates: {}", r.candidates)?;
    writeln!(out, "brute_force_cost: {}", brute_force_cost(cfg, r.k0_len))?;
    let best: String = candidate_bits(r.best_candidate, r.k0_len).iter().map(|&b| if b { '1' } else { '0' }).collect();
    writeln!(out, "best_candidate: {best}")?;
    match r.true_rank {
        Some(rank) => writeln!(out, "true_rank: {rank}")?,
        None => writeln!(out, "true_rank: unknown")?,
    }
    writeln!(out, "posterior_entropy_bits: {:.6}", r.posterior_entropy)
}

pub fn run(args: AttackArgs) -> CmdResult {
    let target = match &args.tap {
        Some(path) => from_tap(&args, path)?,
        None => simulated(&args)?,
    };
    let report =
        exhaustive_attack(&target.transcript, &target.cfg, target.k0_len, target.k0.as_deref(), target.tolerance)?;
    let samples = target.transcript.iter().map(|c| c.signal.samples.len()).sum();
    print_report(&mut std::io::stdout().lock(), &target.cfg, samples, &report)?;
    Ok(())
}
