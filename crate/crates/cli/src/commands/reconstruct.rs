//! `oslalm reconstruct`: run one named solver configuration and write the
//! image plus its convergence log.

use std::path::PathBuf;

use oslalm::io;
use oslalm::solvers::{run_reconstruction, RhoMode};

use super::{ensure_dir, load_or_compute_reference, load_problem, output_dir};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub epochs: Option<usize>,
    pub subsets: Option<usize>,
    pub rho: Option<f64>,
    pub continuation: bool,
    pub n_inner: Option<usize>,
    pub bb: bool,
}

pub fn run(
    config: &ExperimentConfig,
    run_name: &str,
    dir_override: &Option<PathBuf>,
    overrides: &Overrides,
) -> CliResult<()> {
    let dir = output_dir(config, dir_override);
    ensure_dir(&dir)?;
    let run_cfg = config.find_run(run_name)?;
    let mut opts = run_cfg.solver_options()?;
    if let Some(e) = overrides.epochs {
        opts.max_epochs = e;
    }
    if let Some(m) = overrides.subsets {
        opts.subsets = m;
    }
    if overrides.continuation && overrides.rho.is_some() {
        return Err(CliError::args(
            "--continuation and --rho are mutually exclusive",
        ));
    }
    if let Some(r) = overrides.rho {
        opts.mode = RhoMode::Fixed(r);
    } else if overrides.continuation {
        opts.mode = RhoMode::Continuation {
            rho_min: oslalm::solvers::RHO_MIN_DEFAULT,
        };
    }
    if let Some(n) = overrides.n_inner {
        opts.n_inner = n;
    }
    if overrides.bb {
        opts.bb = true;
    }

    let problem = load_problem(config, &dir)?;
    let reference = load_or_compute_reference(config, &dir, &problem)?;

    let (image, log) = run_reconstruction(&problem, &opts, Some(&reference))?;

    let img_path = dir.join(format!("{run_name}.f32"));
    io::save_image(&img_path, &problem.grid, &image)?;
    let csv_path = dir.join(format!("{run_name}.csv"));
    io::save_convergence_csv(&csv_path, &log)?;

    let last = log.rows().last().expect("log has at least the initial row");
    println!(
        "{run_name}: {} epochs, final rmsd {:.6}, objective {:.6e}",
        opts.max_epochs, last.rmsd, last.objective
    );
    println!("wrote {} and {}", img_path.display(), csv_path.display());
    Ok(())
}
