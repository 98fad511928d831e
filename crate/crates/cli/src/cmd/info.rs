use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use noisekey::adversary::{delta_i_partitioned, MIN_SAMPLES};
use noisekey::NoiseModel;

use crate::fail::{CmdResult, Failure};
use crate::model::{resolve_seed, row_seed, sig9, WheelSpec};

#[derive(Args, Debug)]
pub struct InfoArgs {
    /// Noise levels σ_φ (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub sigma: Vec<f64>,
    /// Sector spacings Δφ1 (comma separated); 0 is the degenerate sector.
    #[arg(long, value_delimiter = ',')]
    pub dphi: Vec<f64>,
    /// Sector spacings given as σ_φ/Δφ1 (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub ratio: Vec<f64>,
    /// Uniform wheel sizes M (comma separated).
    #[arg(long = "M", value_delimiter = ',')]
    pub bases: Vec<u32>,
    /// Monte Carlo samples per grid point and observer.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Independent sub-streams per grid point (evaluated in parallel).
    #[arg(long, default_value_t = 4)]
    pub partitions: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub const HEADER: [&str; 7] = ["sigma_phi", "mode", "param", "I_B", "I_E", "delta_I", "std_err"];

pub fn run(args: InfoArgs) -> CmdResult {
    let mut grid = Vec::new();
    for &sigma in &args.sigma {
        for &d in &args.dphi {
            grid.push((sigma, WheelSpec::Sector(d), "sector", d.to_string()));
        }
        for &r in &args.ratio {
            if r.is_nan() || r <= 0.0 {
                return Err(Failure::flags(format!("--ratio must be positive, got {r}")));
            }
            let d = sigma / r;
            grid.push((sigma, WheelSpec::Sector(d), "sector", d.to_string()));
        }
        for &m in &args.bases {
            grid.push((sigma, WheelSpec::Uniform(m), "uniform", m.to_string()));
        }
    }
    if grid.is_empty() {
        return Err(Failure::flags("empty grid: give --sigma and at least one of --dphi, --ratio, --M"));
    }
    if args.samples < MIN_SAMPLES {
        return Err(Failure::flags(format!("--samples must be at least {MIN_SAMPLES}")));
    }
    // System entropy still needs one base seed for the partitioned streams.
    let seed = resolve_seed(args.seed)?.unwrap_or_else(|| noisekey::EntropySource::system().next_u64());

    let mut rows = Vec::with_capacity(grid.len());
    for (i, (sigma, spec, mode, param)) in grid.into_iter().enumerate() {
        let wheel = spec.build_limit()?;
        let noise = NoiseModel::new(sigma)?;
        let est = delta_i_partitioned(&wheel, &noise, args.samples, row_seed(seed, i), args.partitions)?;
        rows.push([
            sig9(sigma),
            mode.to_string(),
            param,
            sig9(est.i_b),
            sig9(est.i_e),
            sig9(est.delta_i),
            sig9(est.std_err),
        ]);
    }

    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let write = |w: &mut csv::Writer<Box<dyn Write>>| -> csv::Result<()> {
        w.write_record(HEADER)?;
        for row in &rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    };
    write(&mut w).map_err(|e| Failure::flags(format!("writing CSV: {e}")))
}
