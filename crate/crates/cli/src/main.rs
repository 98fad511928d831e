//! `noisekey`: run simulated or networked key-expansion sessions, attack
//! recorded transcripts, sweep information estimates and apply one-time pads.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod cmd;
mod fail;
mod model;

#[derive(Parser, Debug)]
#[command(name = "noisekey", version, about = "Noise-secured key expansion over a public channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a session with both endpoints in this process.
    Simulate(cmd::simulate::SimulateArgs),
    /// Exhaustive search for a short K0 over a simulated or recorded transcript.
    Attack(cmd::attack::AttackArgs),
    /// Monte Carlo I_B, I_E and their gap over a parameter grid, as CSV.
    Info(cmd::info::InfoArgs),
    /// Accept one session over TCP as endpoint B.
    Serve(cmd::net::ServeArgs),
    /// Open a session over TCP as endpoint A.
    Connect(cmd::net::ConnectArgs),
    /// XOR a file with unspent keystream bits.
    Otp(cmd::otp::OtpArgs),
    /// Write a random key file.
    Keygen(cmd::keygen::KeygenArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd::simulate::run(a),
        Command::Attack(a) => cmd::attack::run(a),
        Command::Info(a) => cmd::info::run(a),
        Command::Serve(a) => cmd::net::serve(a),
        Command::Connect(a) => cmd::net::connect(a),
        Command::Otp(a) => cmd::otp::run(a),
        Command::Keygen(a) => cmd::keygen::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("noisekey: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
