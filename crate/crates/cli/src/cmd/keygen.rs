use std::path::PathBuf;

use clap::Args;

use crate::fail::{CmdResult, Failure};
use crate::model::{key_source, resolve_seed, save_key};

#[derive(Args, Debug)]
pub struct KeygenArgs {
    /// Key length in bits.
    #[arg(long)]
    pub bits: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Write lowercase hex text instead of binary.
    #[arg(long)]
    pub hex: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: KeygenArgs) -> CmdResult {
    if args.bits == 0 {
        return Err(Failure::flags("--bits must be positive"));
    }
    let bits = key_source(resolve_seed(args.seed)?).fresh_bits(args.bits);
    save_key(&args.out, &bits, args.hex)
}
