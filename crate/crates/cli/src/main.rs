use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cad_cli::{commands, table, DemoGdOptions, DemoUrnnOptions, Report};
use cad_core::corpus::LossId;

#[derive(Parser)]
#[command(name = "cad", version, about = "Gradient checks and optimization demos for the complex AD engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every table adjoint against its closed form and finite differences.
    VerifyTable {
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
    /// Compare the engine with finite differences, pair mode and split-real on a corpus loss.
    Gradcheck {
        #[arg(long, value_parser = parse_loss)]
        loss: LossId,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
        dims: u64,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
    /// Run gradient descent on a corpus loss.
    DemoGd {
        #[arg(long, value_parser = parse_loss)]
        loss: LossId,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
        dims: u64,
        /// Start at the all-zero point.
        #[arg(long)]
        zero_start: bool,
        /// urnn_unrolled only: optimize W directly with the Cayley update.
        #[arg(long)]
        full_w: bool,
    },
    /// Train a small unitary RNN on a teacher-generated sequence.
    DemoUrnn {
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
        dim: u64,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        seq_len: u64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
    },
}

fn parse_loss(s: &str) -> Result<LossId, String> {
    s.parse().map_err(|e: cad_core::Error| e.to_string())
}

fn run(cmd: Command) -> cad_core::Result<Report> {
    match cmd {
        Command::VerifyTable { trials, seed, tol } => Ok(table::verify_table(trials as usize, seed, tol)),
        Command::Gradcheck { loss, dims, trials, seed, tol } => {
            commands::gradcheck(loss, dims as usize, trials as usize, seed, tol)
        }
        Command::DemoGd { loss, lr, steps, seed, dims, zero_start, full_w } => commands::demo_gd(DemoGdOptions {
            loss,
            lr,
            steps,
            seed,
            dims: dims as usize,
            zero_start,
            full_w,
        }),
        Command::DemoUrnn { dim, seq_len, steps, seed, lr } => commands::demo_urnn(DemoUrnnOptions {
            dim: dim as usize,
            seq_len: seq_len as usize,
            steps,
            seed,
            lr,
            ..DemoUrnnOptions::default()
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(report) => {
            println!("{}", report.to_json());
            eprint!("{}", report.summary_text());
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
