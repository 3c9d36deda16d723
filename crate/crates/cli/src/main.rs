//! Command-line driver for the fractional ground-state toolkit.

mod cmd_multistart;
mod cmd_rescale;
mod cmd_solve;
mod cmd_spectrum;
mod cmd_sweep;
mod cmd_verify;
mod config;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "fracground",
    about = "Ground states and spectra of the fractional semilinear Dirichlet problem"
)]
struct Cli {
    /// Run configuration file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One least-energy solve; writes the solution and a JSON sidecar.
    Solve,
    /// Low eigenpairs of the linearization at the computed solution.
    Spectrum,
    /// Growing-domain sweep with spectra, defects, and reference distances.
    Sweep,
    /// Uniqueness probe from independent random initializations.
    Multistart,
    /// Transfer the large-domain solution to the unit domain.
    Rescale,
    /// Run the pinned invariant suite.
    Verify {
        /// Deliberately corrupt the operator to exercise failure reporting.
        #[arg(long, hide = true)]
        corrupt: bool,
    },
}

fn thread_setup() {
    let threads = std::env::var("FRACGROUND_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1);
    fracground::linalg::set_blas_threads(threads);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .ok();
}

fn load_config(cli: &Cli) -> Result<config::RunConfig, i32> {
    let Some(path) = &cli.config else {
        eprintln!("error: this command requires --config <path>");
        return Err(1);
    };
    config::load(path).map_err(|e| {
        eprintln!("error: {e}");
        1
    })
}

fn main() -> ExitCode {
    thread_setup();
    let cli = Cli::parse();

    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create output directory {}: {e}", cli.out.display());
        return ExitCode::from(1);
    }

    let outcome = match &cli.command {
        Command::Verify { corrupt } => cmd_verify::run(&cli.out, *corrupt),
        command => {
            let cfg = match load_config(&cli) {
                Ok(cfg) => cfg,
                Err(code) => return ExitCode::from(code as u8),
            };
            match command {
                Command::Solve => cmd_solve::run(&cfg, &cli.out),
                Command::Spectrum => cmd_spectrum::run(&cfg, &cli.out),
                Command::Sweep => cmd_sweep::run(&cfg, &cli.out),
                Command::Multistart => cmd_multistart::run(&cfg, &cli.out),
                Command::Rescale => cmd_rescale::run(&cfg, &cli.out),
                Command::Verify { .. } => unreachable!(),
            }
        }
    };

    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
