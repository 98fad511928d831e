//! One-time pad over a keystream file, with the spent-bit cursor persisted
//! in a sidecar next to the key.
//!
//! Sidecar (text):
//!
//! ```text
//! noisekey-otp 1
//! cursor <bits spent>
//! key <16 hex digits: fingerprint of the keystream>
//! check <16 hex digits: fingerprint of the three lines above>
//! ```
//!
//! Encrypting and decrypting are the same operation; each party keeps its
//! own copy of the keystream and its own sidecar.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use clap::Args;
use noisekey::keyfile::fingerprint;
use noisekey::protocol::OneTimePad;

use crate::fail::{CmdResult, Failure, SIDECAR};
use crate::model::load_key;

const HEADER: &str = "noisekey-otp 1";

#[derive(Args, Debug)]
pub struct OtpArgs {
    /// Keystream file.
    #[arg(long)]
    pub key: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Cursor sidecar (default: the key path with ".cursor" appended).
    #[arg(long)]
    pub cursor: Option<PathBuf>,
}

fn sidecar_path(args: &OtpArgs) -> PathBuf {
    args.cursor.clone().unwrap_or_else(|| {
        let mut p = args.key.clone().into_os_string();
        p.push(".cursor");
        p.into()
    })
}

fn key_fingerprint(bits: &[bool]) -> u64 {
    fingerprint(b"NKOTP-KEY", &[], bits)
}

fn render(cursor: usize, key_fp: u64) -> String {
    let body = format!("{HEADER}\ncursor {cursor}\nkey {key_fp:016x}\n");
    let check = fingerprint(b"NKOTP-SIDECAR", body.as_bytes(), &[]);
    format!("{body}check {check:016x}\n")
}

fn corrupt(path: &Path, why: impl std::fmt::Display) -> Failure {
    Failure::new(SIDECAR, anyhow::anyhow!("cursor sidecar {} is corrupt: {why}", path.display()))
}

/// Spent bits recorded for `bits`; zero when no sidecar exists yet.
fn read_cursor(path: &Path, bits: &[bool]) -> CmdResult<usize> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == ErrorKind::NotFound => return Ok(0),
        Err(e) => return Err(corrupt(path, e)),
    };
    let lines: Vec<&str> = text.lines().collect();
    let [header, cursor, key, check] = lines[..] else {
        return Err(corrupt(path, "expected four lines"));
    };
    if header != HEADER {
        return Err(corrupt(path, "unknown header"));
    }
    let cursor: usize = cursor
        .strip_prefix("cursor ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| corrupt(path, "bad cursor line"))?;
    let key_fp = key
        .strip_prefix("key ")
        .and_then(|v| u64::from_str_radix(v, 16).ok())
        .ok_or_else(|| corrupt(path, "bad key line"))?;
    if !check.starts_with("check ") || render(cursor, key_fp) != text {
        return Err(corrupt(path, "checksum mismatch"));
    }
    if key_fp != key_fingerprint(bits) {
        return Err(corrupt(path, "written for a different keystream"));
    }
    if cursor > bits.len() {
        return Err(corrupt(path, format!("cursor {cursor} beyond keystream of {} bits", bits.len())));
    }
    Ok(cursor)
}

fn write_cursor(path: &Path, cursor: usize, key_fp: u64) -> CmdResult {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, render(cursor, key_fp))?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn run(args: OtpArgs) -> CmdResult {
    let bits = load_key(&args.key)?;
    let sidecar = sidecar_path(&args);
    let cursor = read_cursor(&sidecar, &bits)?;
    let message = fs::read(&args.input)?;
    let key_fp = key_fingerprint(&bits);
    let mut pad = OneTimePad::resume(bits, cursor)?;
    let output = pad.apply(&message)?;
    // Spend the bits before releasing any output derived from them.
    if pad.cursor() != cursor {
        write_cursor(&sidecar, pad.cursor(), key_fp)?;
    }
    fs::write(&args.out, output)?;
    eprintln!("otp: {} bytes, cursor {} -> {}, {} bits left", message.len(), cursor, pad.cursor(), pad.remaining());
    Ok(())
}
