#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

pub const GOLDEN_SEED: &str = "42";
pub const GOLDEN_KEY_SEED: &str = "5";
pub const GOLDEN_KEY_BITS: &str = "16";

/// Session flags of the recorded conformance session.
pub const GOLDEN_SESSION: &[&str] = &[
    "--wheel", "sector:0.1", "--sigma", "0.2", "--L", "16", "--cycles", "2", "--f-retain", "0.9", "--block", "8",
];

/// Flags of the recorded simulation CSV.
pub const GOLDEN_SIMULATE: &[&str] = &[
    "simulate", "--seed", "42", "--cycles", "12", "--L", "256", "--wheel", "sector:0.05", "--sigma", "0.45",
    "--f-retain", "0.99", "--block", "8",
];

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noisekey"))
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

pub fn updating_golden() -> bool {
    std::env::var_os("UPDATE_GOLDEN").is_some()
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("NOISEKEY_TEST_SEED").output().expect("spawn noisekey")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// `key: value` lookup in command output.
pub fn field(out: &str, key: &str) -> Option<String> {
    out.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix(": ").map(str::to_string))
}

pub struct Pair {
    pub serve: Output,
    pub connect: Output,
}

/// Runs `serve` and `connect` as two processes over TCP loopback. `a` and
/// `b` are the per-side extra flags (key, outputs, tap).
pub fn loopback(seed: Option<&str>, session: &[&str], a: &[&str], b: &[&str]) -> Pair {
    let mut serve = bin();
    serve.args(["serve", "--listen", "127.0.0.1:0", "--timeout", "20"]).args(session).args(b);
    let mut connect = bin();
    connect.args(["connect", "--timeout", "20"]).args(session).args(a);
    for cmd in [&mut serve, &mut connect] {
        match seed {
            Some(s) => cmd.env("NOISEKEY_TEST_SEED", s),
            None => cmd.env_remove("NOISEKEY_TEST_SEED"),
        };
    }
    let mut child = serve.stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().expect("spawn serve");
    let mut reader = BufReader::new(child.stdout.take().unwrap());
    let mut first = String::new();
    reader.read_line(&mut first).unwrap();
    let addr = first.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("serve said {first:?}")).to_string();
    let connect = connect.args(["--peer", &addr]).output().expect("spawn connect");
    let mut rest = String::new();
    reader.read_to_string(&mut rest).unwrap();
    let mut serve = child.wait_with_output().unwrap();
    serve.stdout = (first + &rest).into_bytes();
    Pair { serve, connect }
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}
