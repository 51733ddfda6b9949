use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robustwf::cli::{self, Overrides};

/// Robust MIMO radar waveform-filter design and evaluation.
#[derive(Parser)]
#[command(name = "robustwf", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Override the RNG seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the interior-point KKT tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Override randomization trials (designs) or sample count (eval).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a worst-case design from a JSON config.
    Design {
        /// Uncertainty geometry: "spherical" or "annular".
        algorithm: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a saved design result.
    Eval {
        /// "pattern" or "sinr-samples".
        what: String,
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a canned reference experiment (fig3|fig4|fig6|fig7|fig8).
    Experiment {
        name: String,
        #[arg(long, default_value = "experiments")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    cli::init_threads();
    let args = Args::parse();
    let ov = Overrides { seed: args.seed, tol: args.tol, trials: args.trials, quiet: args.quiet };
    let outcome = match &args.command {
        Command::Design { algorithm, config, out } => cli::cmd_design(algorithm, config, out, &ov),
        Command::Eval { what, result, config, out } => {
            cli::cmd_eval(what, result, config, out, &ov)
        }
        Command::Experiment { name, out_dir } => cli::cmd_experiment(name, out_dir, &ov),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
