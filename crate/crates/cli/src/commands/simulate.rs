//! `oslalm simulate`: phantom, system matrix, noisy sinogram, and weights.

use std::path::PathBuf;

use oslalm::ct::{build_system_matrix, make_phantom, synthesize_weights};
use oslalm::io;

use super::{
    ensure_dir, output_dir, write_geometry_file, SimGeometry, GEOMETRY_FILE, PHANTOM_FILE,
    SINOGRAM_FILE, WEIGHTS_FILE,
};
use crate::config::ExperimentConfig;
use crate::error::CliResult;

pub fn run(
    config: &ExperimentConfig,
    dir_override: &Option<PathBuf>,
    seed_override: Option<u64>,
    i0_override: Option<f64>,
) -> CliResult<()> {
    let dir = output_dir(config, dir_override);
    ensure_dir(&dir)?;

    let grid = config.image_grid()?;
    let geometry = config.scan_geometry()?;
    let i0 = i0_override.unwrap_or(config.noise.i0);
    let seed = seed_override.unwrap_or(config.noise.seed);

    let phantom = make_phantom(&grid, &config.ellipses())?;
    let a = build_system_matrix(&grid, &geometry);
    let (sino, weights) = synthesize_weights(&a, &geometry, &phantom, i0, seed)?;

    io::save_raw(&dir.join(PHANTOM_FILE), &phantom)?;
    io::save_raw(&dir.join(SINOGRAM_FILE), sino.data())?;
    io::save_raw(&dir.join(WEIGHTS_FILE), weights.diag())?;
    write_geometry_file(
        &dir.join(GEOMETRY_FILE),
        &SimGeometry {
            grid,
            geometry,
            i0,
            seed,
        },
    )?;

    let wmin = weights.min_entry();
    let wmax = weights.max_entry();
    println!(
        "simulated {} rays over {} pixels; weight range {wmin:.1}..{wmax:.1} (ratio {:.1})",
        sino.data().len(),
        phantom.len(),
        wmax / wmin
    );
    println!(
        "wrote {PHANTOM_FILE}, {SINOGRAM_FILE}, {WEIGHTS_FILE}, {GEOMETRY_FILE} in {}",
        dir.display()
    );
    Ok(())
}
