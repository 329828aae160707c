//! `quasirest`: restriction exponents, Strichartz pairs, scaling experiments
//! and kernel sweeps from the command line.
//!
//! Exit status: 0 when every verdict passes, 2 when any fails, 1 on errors.

mod config;
mod delta;
mod factor;
mod kernel;
mod pairs;
mod render;
mod run;
mod store;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "quasirest", version, about = "Restriction bounds for semiclassical quasimodes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Restriction exponent δ(n, k, p), at one p or swept over 1/p.
    Delta(delta::Args),
    /// Admissible Strichartz pairs and their h-exponents.
    Pairs(pairs::Args),
    /// Run a scaling experiment from a config file.
    Run(run::Args),
    /// Sweep the restricted kernel and fit its decay exponents.
    Kernel(kernel::Args),
    /// Factorise a built-in symbol near a characteristic point.
    Factor(factor::Args),
    /// Regenerate the plot data of a results directory.
    Render(render::Args),
}

pub enum Status {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are errors, not failed verdicts
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Delta(a) => delta::run(a),
        Command::Pairs(a) => pairs::run(a),
        Command::Run(a) => run::run(a),
        Command::Kernel(a) => kernel::run(a),
        Command::Factor(a) => factor::run(a),
        Command::Render(a) => render::run(a),
    };
    match outcome {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
