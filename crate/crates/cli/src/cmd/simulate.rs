use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use noisekey::protocol::{run_session, SessionSources, SessionStatus};
use noisekey::DistillationLedger;

use crate::fail::{CmdResult, Failure, EXHAUSTED};
use crate::model::{key_source, load_key, resolve_seed, save_key, sig9, SessionArgs};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Number of cycles (directions alternate A→B, B→A, ...).
    #[arg(long, default_value_t = 1)]
    pub cycles: usize,
    #[command(flatten)]
    pub session: SessionArgs,
    /// Deterministic seed (falls back to NOISEKEY_TEST_SEED, then system entropy).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Shared starting key; generated from the seed when absent.
    #[arg(long)]
    pub k0: Option<PathBuf>,
    /// Write the distilled keystream here.
    #[arg(long)]
    pub out_keystream: Option<PathBuf>,
    /// Write one CSV row per cycle here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Skip the simulation and print the loss-free geometric ledger.
    #[arg(long)]
    pub ledger_only: bool,
}

fn print_ledger(out: &mut impl Write, ledger: &DistillationLedger) -> std::io::Result<()> {
    writeln!(out, "raw_shared: {}", ledger.raw_shared)?;
    writeln!(out, "distilled: {}", ledger.distilled)?;
    writeln!(out, "discarded_reconciliation: {}", ledger.discarded_reconciliation)?;
    writeln!(out, "discarded_privacy: {}", ledger.discarded_privacy)?;
    writeln!(out, "distilled_fraction: {:.6}", ledger.distilled_fraction())
}

pub fn run(args: SimulateArgs) -> CmdResult {
    let cfg = args.session.build()?;
    let mut out = std::io::stdout().lock();
    if args.ledger_only {
        let ledger = DistillationLedger::geometric(cfg.cycle_len, cfg.retain, args.cycles);
        writeln!(out, "model: geometric")?;
        writeln!(out, "cycles: {}", args.cycles)?;
        print_ledger(&mut out, &ledger)?;
        return Ok(());
    }

    let seed = resolve_seed(args.seed)?;
    let k0 = match &args.k0 {
        Some(path) => load_key(path)?,
        None => key_source(seed).fresh_bits(cfg.key_bits_for(cfg.cycle_len)),
    };
    let mut sources = match seed {
        Some(s) => SessionSources::seeded(s),
        None => SessionSources::system(),
    };
    let report = run_session(&cfg, &k0, args.cycles, &mut sources)?;

    if let Some(path) = &args.out_keystream {
        save_key(path, &report.keystream_a, false)?;
    }
    if let Some(path) = &args.csv {
        let mut w = csv::Writer::from_path(path).map_err(|e| Failure::flags(format!("{}: {e}", path.display())))?;
        let mut rows = || -> csv::Result<()> {
            w.write_record(["cycle", "direction", "raw", "kept", "distilled", "bit_errors", "ber"])?;
            for rec in &report.cycles {
                let o = &rec.outcome;
                let ber = if o.raw == 0 { 0.0 } else { rec.bit_errors as f64 / o.raw as f64 };
                w.write_record([
                    o.index.to_string(),
                    o.direction.to_string(),
                    o.raw.to_string(),
                    o.kept.to_string(),
                    o.distilled.to_string(),
                    rec.bit_errors.to_string(),
                    sig9(ber),
                ])?;
            }
            w.flush()?;
            Ok(())
        };
        rows().map_err(|e| Failure::flags(format!("{}: {e}", path.display())))?;
    }

    writeln!(out, "cycles_run: {}", report.cycles.len())?;
    print_ledger(&mut out, &report.ledger)?;
    writeln!(out, "bob_ber: {}", sig9(report.bit_error_rate()))?;
    match &report.status {
        SessionStatus::Completed => {
            writeln!(out, "status: completed")?;
            Ok(())
        }
        SessionStatus::RestartRequired(reason) => {
            writeln!(out, "status: restart-required ({reason:?})")?;
            Err(Failure::new(EXHAUSTED, anyhow::anyhow!("restart required: {reason:?}")))
        }
    }
}
