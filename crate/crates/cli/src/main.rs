//! `nrfctl`: file-based pipelines around `nrf-core`.
//!
//! Exit codes: 0 ok, 2 a mathematical violation was found, 1 error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nrf_core::nrfsyn::CertMode;

mod commands;
mod report;

#[derive(Parser)]
#[command(name = "nrfctl", version, about = "Synthesize, verify, realize and simulate distributed controllers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Doubly coprime factorization of a plant (state-space or TFM JSON).
    Dcf {
        #[arg(long)]
        plant: PathBuf,
        /// Comma-separated closed-loop targets, e.g. `0.5,0.4,0.3+0.1i,0.3-0.1i`.
        #[arg(long)]
        targets: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// NRF pair from a factorization and a Youla parameter.
    Nrf {
        #[arg(long)]
        dcf: PathBuf,
        #[arg(long)]
        q: PathBuf,
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Frequency grid size for the closed-loop norm estimate.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Internal-stability audit of an NRF loop.
    Check {
        #[arg(long)]
        nrf: PathBuf,
        #[arg(long)]
        plant: PathBuf,
    },
    /// Per-row (or grouped) state-space sub-controllers.
    Realize {
        #[arg(long)]
        nrf: PathBuf,
        /// Row groups, 1-based, e.g. `1;2,3;4;5`.
        #[arg(long)]
        grouping: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Instability certificate for an alternative representation.
    Cert {
        #[arg(long)]
        dcf: PathBuf,
        #[arg(long)]
        q: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: CertMode,
    },
    /// Closed-loop simulation of a scenario file; writes the trace CSV.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Built-in end-to-end example.
    Demo {
        name: String,
        /// Output directory (default `grid5-demo`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        no_sim: bool,
        #[arg(long)]
        grid: Option<usize>,
    },
}

fn parse_mode(s: &str) -> Result<CertMode, String> {
    s.parse().map_err(|e: nrf_core::NrfError| e.to_string())
}

fn run(cmd: Command) -> anyhow::Result<report::Report> {
    match cmd {
        Command::Dcf { plant, targets, out } => commands::dcf(&plant, targets.as_deref(), &out),
        Command::Nrf { dcf, q, patterns, out, grid } => commands::nrf(&dcf, &q, patterns.as_deref(), &out, grid),
        Command::Check { nrf, plant } => commands::check(&nrf, &plant),
        Command::Realize { nrf, grouping, out } => commands::realize(&nrf, grouping.as_deref(), &out),
        Command::Cert { dcf, q, mode } => commands::cert(&dcf, &q, mode),
        Command::Simulate { scenario, out, seed } => commands::simulate(&scenario, &out, seed),
        Command::Demo { name, out, seed, no_sim, grid } => commands::demo(&name, out.as_deref(), seed, no_sim, grid),
    }
}

fn main() -> ExitCode {
    // clap's own usage errors exit with 2, which is reserved for violations here
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(rep) => {
            print!("{}", rep.render());
            if rep.violated {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            println!("status: error");
            ExitCode::from(1)
        }
    }
}
