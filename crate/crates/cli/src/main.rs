//! Command-line front end for the oslalm reconstruction library.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use error::CliResult;

#[derive(Parser)]
#[command(
    name = "oslalm",
    version,
    about = "Ordered-subsets linearized augmented Lagrangian CT reconstruction: \
             simulate data, run solvers, compare convergence, verify theory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a phantom scan: write phantom, sinogram, weights, geometry
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the noise seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the incident photon count
        #[arg(long)]
        i0: Option<f64>,
    },
    /// Run a named solver configuration on simulated data
    Reconstruct {
        #[arg(long)]
        config: PathBuf,
        /// Name of a [[run]] entry in the config
        #[arg(long)]
        run: String,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        subsets: Option<usize>,
        /// Use a fixed penalty parameter (switches mode to fixed)
        #[arg(long)]
        rho: Option<f64>,
        /// Use the deterministic downward continuation schedule
        #[arg(long)]
        continuation: bool,
        /// Inner denoising iterations per update
        #[arg(long)]
        n_inner: Option<usize>,
        /// Enable the secant (spectral) rescaling of the diagonal majorizer
        #[arg(long)]
        bb: bool,
    },
    /// Merge finished runs into an rmsd-vs-epoch table (optionally a plot)
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated run names
        #[arg(long, value_delimiter = ',')]
        runs: Vec<String>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Merged CSV path (default: <output_dir>/compare.csv)
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also render an SVG plot
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Theory checks producing CSV reports
    Analyze {
        #[command(subcommand)]
        what: AnalyzeCommand,
    },
    /// Export a stored image as 16-bit PGM with a display window
    ExportPgm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Display window LO:HI (default: full data range)
        #[arg(long)]
        window: Option<String>,
    },
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Classify one eigencomponent of the second-order recurrence
    Damping {
        #[arg(long)]
        lambda_ratio: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Primal-dual gap of exact averaged iterates against the C^2/k bound
    Gap {
        /// Quadratic problem dimension
        #[arg(long, default_value_t = 16)]
        size: usize,
        #[arg(long, default_value_t = 0.3)]
        rho: f64,
        #[arg(long, default_value_t = 200)]
        iterations: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Measure inter-restart intervals of a continuation log
    Restart {
        /// Convergence log CSV from a continuation run
        #[arg(long)]
        log: PathBuf,
        /// Smallest eigenvalue of the quadratic's Hessian
        #[arg(long)]
        mu: f64,
        /// Majorizer constant (largest eigenvalue bound)
        #[arg(long)]
        l_max: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sampled majorization dominance check on the simulated problem
    Majorization {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// diagonal | scalar
        #[arg(long, default_value = "diagonal")]
        majorizer: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate {
            config,
            output_dir,
            seed,
            i0,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            commands::simulate::run(&cfg, &output_dir, seed, i0)
        }
        Command::Reconstruct {
            config,
            run,
            output_dir,
            epochs,
            subsets,
            rho,
            continuation,
            n_inner,
            bb,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let overrides = commands::reconstruct::Overrides {
                epochs,
                subsets,
                rho,
                continuation,
                n_inner,
                bb,
            };
            commands::reconstruct::run(&cfg, &run, &output_dir, &overrides)
        }
        Command::Compare {
            config,
            runs,
            output_dir,
            output,
            plot,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            commands::compare::run(&cfg, &runs, &output_dir, &output, &plot)
        }
        Command::Analyze { what } => match what {
            AnalyzeCommand::Damping {
                lambda_ratio,
                rho,
                output,
            } => commands::analyze::damping(lambda_ratio, rho, &output),
            AnalyzeCommand::Gap {
                size,
                rho,
                iterations,
                seed,
                output,
            } => commands::analyze::gap(size, rho, iterations, seed, &output),
            AnalyzeCommand::Restart {
                log,
                mu,
                l_max,
                output,
            } => commands::analyze::restart(&log, mu, l_max, &output),
            AnalyzeCommand::Majorization {
                config,
                output_dir,
                majorizer,
                samples,
                seed,
                output,
            } => {
                let cfg = ExperimentConfig::load(&config)?;
                commands::analyze::majorization(
                    &cfg,
                    &output_dir,
                    &majorizer,
                    samples,
                    seed,
                    &output,
                )
            }
        },
        Command::ExportPgm {
            input,
            output,
            window,
        } => commands::export::run(&input, &output, &window),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
