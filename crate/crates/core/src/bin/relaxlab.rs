//! Command-line driver. One JSON report per invocation on stdout;
//! diagnostics on stderr. Exit codes: 0 ok, 2 parse error, 3 cap exceeded,
//! 4 demo claim refuted.

use clap::{Parser, Subcommand};
use relaxlab::cli::{self, Report};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "relaxlab",
    about = "Exact rational bounds for ReLU networks: relaxations, oracles, and complete verifiers",
    long_about = None,
    after_help = "The CONVEX_BARRIER_CAP environment variable overrides the geometry/oracle dimension caps."
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Relaxation bounds for a network over an input set.
    Bound {
        #[arg(long)]
        network: String,
        /// `box:lo..hi,...` or a polytope JSON file.
        #[arg(long)]
        input: String,
        /// ibp | triangle | mk:K | p1 | pr:R
        #[arg(long)]
        method: String,
    },
    /// Exact bounds from the linear-region oracle.
    Exact {
        #[arg(long)]
        network: String,
        #[arg(long)]
        input: String,
    },
    /// Named end-to-end demonstrations; exits 4 if a claim is refuted.
    Demo {
        /// sec3 | zero | max:d | gap:T | pump:alpha | transform | ibp-divergence
        name: String,
    },
    /// Partition-complexity table on the nested max networks.
    Complexity {
        #[arg(long, default_value_t = 4)]
        d_max: usize,
        /// Also write the table as CSV to this path.
        #[arg(long)]
        csv: Option<String>,
    },
}

fn emit(report: &Report) -> ExitCode {
    match serde_json::to_string_pretty(report) {
        Ok(text) => {
            println!("{text}");
            if report.command == "demo" && !report.all_claims_pass() {
                eprintln!("demo claim refuted");
                return ExitCode::from(cli::EXIT_CLAIM as u8);
            }
            ExitCode::from(cli::EXIT_OK as u8)
        }
        Err(e) => {
            eprintln!("cannot serialize report: {e}");
            ExitCode::from(cli::EXIT_PARSE as u8)
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let started = Instant::now();
    let caps = match cli::caps_from_env() {
        Ok(caps) => caps,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(cli::EXIT_PARSE as u8);
        }
    };
    let result = match &args.command {
        Command::Bound {
            network,
            input,
            method,
        } => cli::run_bound(network, input, method, &caps),
        Command::Exact { network, input } => cli::run_exact(network, input, &caps),
        Command::Demo { name } => cli::run_demo(name, &caps),
        Command::Complexity { d_max, csv } => cli::run_complexity(*d_max, csv.as_deref(), &caps),
    };
    match result {
        Ok(mut report) => {
            report.wall_time_ms = started.elapsed().as_millis();
            emit(&report)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(cli::exit_code_for(&e) as u8)
        }
    }
}
