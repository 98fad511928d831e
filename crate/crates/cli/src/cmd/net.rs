use std::fs::File;
use std::io::{self, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::thread;
use std::time::Duration;

use clap::Args;
use noisekey::protocol::SessionStatus;
use noisekey::wire::{run_initiator, run_responder, EndpointSources, NetReport};
use noisekey::Role;

use crate::fail::{transport, CmdResult, Failure, EXHAUSTED, TRANSPORT};
use crate::model::{load_key, resolve_seed, save_key, SessionArgs};

#[derive(Args, Debug)]
pub struct EndpointArgs {
    #[command(flatten)]
    pub session: SessionArgs,
    /// Number of cycles; both ends must agree.
    #[arg(long, default_value_t = 1)]
    pub cycles: u32,
    /// Shared starting key.
    #[arg(long)]
    pub k0: PathBuf,
    /// Write the distilled keystream here.
    #[arg(long)]
    pub out_keystream: Option<PathBuf>,
    /// Record every frame of the session, in wire order, to this file.
    #[arg(long)]
    pub tap: Option<PathBuf>,
    /// Deterministic seed (falls back to NOISEKEY_TEST_SEED, then system entropy).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seconds to wait for the peer before giving up.
    #[arg(long, default_value_t = 30)]
    pub timeout: u64,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    /// Address to accept one session on, e.g. 127.0.0.1:7700 (port 0 picks one).
    #[arg(long)]
    pub listen: String,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
}

#[derive(Args, Debug)]
pub struct ConnectArgs {
    /// Address of the serving peer.
    #[arg(long)]
    pub peer: String,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
}

fn transport_io(e: io::Error, what: &str) -> Failure {
    Failure::new(TRANSPORT, anyhow::Error::new(e).context(what.to_string()))
}

fn session(
    stream: &mut TcpStream,
    role: Role,
    args: &EndpointArgs,
) -> CmdResult {
    let cfg = args.session.build()?;
    let k0 = load_key(&args.k0)?;
    let timeout = Some(Duration::from_secs(args.timeout.max(1)));
    stream.set_read_timeout(timeout).map_err(|e| transport_io(e, "configuring socket"))?;
    stream.set_write_timeout(timeout).map_err(|e| transport_io(e, "configuring socket"))?;
    stream.set_nodelay(true).map_err(|e| transport_io(e, "configuring socket"))?;
    let mut sources = match resolve_seed(args.seed)? {
        Some(s) => EndpointSources::seeded(s, role),
        None => EndpointSources::system(),
    };
    let mut tap = args.tap.as_ref().map(File::create).transpose()?;
    let tap_ref = tap.as_mut().map(|f| f as &mut dyn Write);
    let result = match role {
        Role::Initiator => run_initiator(stream, &cfg, &k0, args.cycles, &mut sources, tap_ref),
        Role::Responder => run_responder(stream, &cfg, &k0, args.cycles, &mut sources, tap_ref),
    };
    let report = result.map_err(transport)?;
    finish(&report, args)
}

fn finish(report: &NetReport, args: &EndpointArgs) -> CmdResult {
    if let Some(path) = &args.out_keystream {
        save_key(path, &report.keystream, false)?;
    }
    let mut out = io::stdout().lock();
    writeln!(out, "session_id: {:016x}", report.session_id)?;
    writeln!(out, "cycles_run: {}", report.cycles.len())?;
    writeln!(out, "raw_shared: {}", report.ledger.raw_shared)?;
    writeln!(out, "distilled: {}", report.ledger.distilled)?;
    writeln!(out, "discarded_reconciliation: {}", report.ledger.discarded_reconciliation)?;
    writeln!(out, "discarded_privacy: {}", report.ledger.discarded_privacy)?;
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

pub fn serve(args: ServeArgs) -> CmdResult {
    let listener = TcpListener::bind(&args.listen).map_err(|e| transport_io(e, "binding listener"))?;
    let addr = listener.local_addr().map_err(|e| transport_io(e, "binding listener"))?;
    {
        let mut out = io::stdout().lock();
        writeln!(out, "listening on {addr}")?;
        out.flush()?;
    }
    let (mut stream, _) = listener.accept().map_err(|e| transport_io(e, "accepting peer"))?;
    session(&mut stream, Role::Responder, &args.endpoint)
}

pub fn connect(args: ConnectArgs) -> CmdResult {
    // Validate locally before touching the network.
    args.endpoint.session.build()?;
    load_key(&args.endpoint.k0)?;
    let deadline = std::time::Instant::now() + Duration::from_secs(args.endpoint.timeout.max(1));
    let mut stream = loop {
        match TcpStream::connect(&args.peer) {
            Ok(s) => break s,
            Err(e) if std::time::Instant::now() < deadline && e.kind() == io::ErrorKind::ConnectionRefused => {
                thread::sleep(Duration::from_millis(50));
            }
            Err(e) => return Err(transport_io(e, "connecting to peer")),
        }
    };
    session(&mut stream, Role::Initiator, &args.endpoint)
}
