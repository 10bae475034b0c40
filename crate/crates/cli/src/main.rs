mod commands;
mod error;
mod io;
mod report;
mod selftest;
mod specs;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::RunConfig;
use error::CliError;
use report::{Format, Rendered};

/// Lower and upper bounds for state discrimination, channel reversal, maximum
/// overlap and conditional min-entropy.
#[derive(Parser)]
#[command(name = "qbounds", version)]
struct Cli {
    /// Seed for random instances (ChaCha8).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Stop iterating once successive values differ by less than this.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long = "max-iters", global = true, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Min-entropy parameter; repeat for a sweep (default 0, 1/4, 1/2, 3/4, 1).
    #[arg(long = "s", global = true, allow_negative_numbers = true)]
    s: Vec<f64>,
    /// Include Choi matrices of the recovery maps.
    #[arg(long = "dump-choi", global = true)]
    dump_choi: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Holevo-Curlander bounds and one-shot measurements for an ensemble.
    Discriminate {
        /// Ensemble JSON file or spec (orthogonal, zero-plus, identical:m=,d=, random:m=,d=).
        ensemble: String,
    },
    /// Monotone directional iteration for a measurement or overlap problem.
    Iterate {
        /// Ensemble or overlap JSON file, an ensemble spec, overlap:dk=,dh=,dl= or perfect-overlap:d=,dh=.
        instance: String,
        /// identity|qw|pgm|helstrom|random for ensembles; guess|identity|random for overlap.
        #[arg(long, default_value = "auto")]
        start: String,
    },
    /// Recovery bounds and fidelities of the quadratic, Barnum-Knill and transpose recoveries.
    Reverse {
        /// Kraus JSON file or spec (depolarizing:p=,d=; amplitude-damping:gamma=; unitary:H; identity:d=; random:din=,dout=,kraus=).
        channel: String,
        /// Input state: matrix JSON file, maximally-mixed or random.
        #[arg(long, default_value = "maximally-mixed")]
        rho: String,
    },
    /// Conditional min-entropy bounds over a grid of s.
    Minentropy {
        /// Bipartite state JSON file or spec (max-entangled:d=, product:d=,db=, random-pure:da=,db=, random:da=,db=).
        state: String,
    },
    /// Run the reduced invariant suites.
    Selftest {
        #[arg(long = "inject-fault", hide = true)]
        inject_fault: bool,
    },
}

fn emit(rendered: &Rendered, cli: &Cli) -> Result<(), CliError> {
    let text = rendered.text(cli.format);
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(CliError::Usage(format!(
            "--tol must be positive, got {}",
            cli.tol
        )));
    }
    if cli.max_iters == 0 {
        return Err(CliError::Usage("--max-iters must be at least 1".into()));
    }
    let cfg = RunConfig {
        seed: cli.seed,
        tol: cli.tol,
        max_iters: cli.max_iters,
        s: cli.s.clone(),
        dump_choi: cli.dump_choi,
    };
    let (rendered, ok) = match &cli.command {
        Command::Discriminate { ensemble } => (commands::discriminate(ensemble, &cfg)?, true),
        Command::Iterate { instance, start } => (commands::iterate(instance, start, &cfg)?, true),
        Command::Reverse { channel, rho } => (commands::reverse(channel, rho, &cfg)?, true),
        Command::Minentropy { state } => (commands::minentropy(state, &cfg)?, true),
        Command::Selftest { inject_fault } => selftest::run(cli.seed, *inject_fault)?,
    };
    emit(&rendered, cli)?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("qbounds: self-test failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("qbounds: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
