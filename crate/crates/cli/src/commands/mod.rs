//! Command implementations.

pub mod analyze;
pub mod compare;
pub mod export;
pub mod reconstruct;
pub mod simulate;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use oslalm::ct::{Geometry, ImageGrid};
use oslalm::io;
use oslalm::linalg::{DenseVector, DiagonalOperator};
use oslalm::solvers::PwlsProblem;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub const PHANTOM_FILE: &str = "phantom.f32";
pub const SINOGRAM_FILE: &str = "sinogram.f32";
pub const WEIGHTS_FILE: &str = "weights.f32";
pub const GEOMETRY_FILE: &str = "geometry.txt";
pub const REFERENCE_FILE: &str = "reference.f32";

/// The shared sidecar for the three simulate outputs.
pub struct SimGeometry {
    pub grid: ImageGrid,
    pub geometry: Geometry,
    pub i0: f64,
    pub seed: u64,
}

pub fn write_geometry_file(path: &Path, sim: &SimGeometry) -> CliResult<()> {
    let g = &sim.grid;
    let s = &sim.geometry;
    let text = format!(
        "nx {}\nny {}\npixel_size {}\nroi_radius {}\nn_views {}\nn_bins {}\nbin_spacing {}\ni0 {}\nseed {}\n",
        g.nx, g.ny, g.pixel_size, g.roi_radius, s.n_views, s.n_bins, s.bin_spacing, sim.i0, sim.seed
    );
    std::fs::write(path, text)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

pub fn read_geometry_file(path: &Path) -> CliResult<SimGeometry> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for line in text.lines() {
        if let Some((k, v)) = line.trim().split_once(' ') {
            map.insert(k.to_string(), v.trim().to_string());
        }
    }
    let get = |key: &str| -> CliResult<&String> {
        map.get(key).ok_or_else(|| {
            CliError::data(format!("{}: missing key '{key}'", path.display()))
        })
    };
    let parse = |key: &str| -> CliResult<f64> {
        get(key)?
            .parse()
            .map_err(|_| CliError::data(format!("{}: bad value for '{key}'", path.display())))
    };
    let grid = ImageGrid::new(
        parse("nx")? as usize,
        parse("ny")? as usize,
        parse("pixel_size")?,
        parse("roi_radius")?,
    )?;
    let geometry = Geometry::parallel(
        parse("n_views")? as usize,
        parse("n_bins")? as usize,
        parse("bin_spacing")?,
    )?;
    Ok(SimGeometry {
        grid,
        geometry,
        i0: parse("i0")?,
        seed: parse("seed")? as u64,
    })
}

/// Load the simulated data set from an output directory and assemble the
/// reconstruction problem with the config's regularizer and bounds.
pub fn load_problem(config: &ExperimentConfig, dir: &Path) -> CliResult<PwlsProblem> {
    let geom_path = dir.join(GEOMETRY_FILE);
    if !geom_path.exists() {
        return Err(CliError::io(format!(
            "no simulated data found: {} is missing (run `oslalm simulate` first)",
            geom_path.display()
        )));
    }
    let sim = read_geometry_file(&geom_path)?;
    let y = io::load_raw(&dir.join(SINOGRAM_FILE), sim.geometry.n_rays())?;
    let w = io::load_raw(&dir.join(WEIGHTS_FILE), sim.geometry.n_rays())?;
    let a = oslalm::ct::build_system_matrix(&sim.grid, &sim.geometry);
    Ok(PwlsProblem::new(
        a,
        DiagonalOperator::new(w)?,
        y,
        config.regularizer()?,
        sim.grid,
        sim.geometry,
        config.bounds(),
    )?)
}

pub fn output_dir(config: &ExperimentConfig, override_dir: &Option<PathBuf>) -> PathBuf {
    override_dir.clone().unwrap_or_else(|| config.output_dir.clone())
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))
}

/// Load the cached reference image, or compute and cache it.
pub fn load_or_compute_reference(
    config: &ExperimentConfig,
    dir: &Path,
    problem: &PwlsProblem,
) -> CliResult<DenseVector> {
    let path = dir.join(REFERENCE_FILE);
    if path.exists() {
        let (_, x) = io::load_image(&path)?;
        if x.len() != problem.n_pixels() {
            return Err(CliError::data(format!(
                "{}: reference has wrong size",
                path.display()
            )));
        }
        return Ok(x);
    }
    eprintln!(
        "computing reference reconstruction ({} restarted FISTA iterations)...",
        config.reference.iterations
    );
    let x = oslalm::solvers::fista_reference(problem, config.reference.iterations, config.reference.restart)?;
    io::save_image(&path, &problem.grid, &x)?;
    // reload so every run sees the identical f32-quantized reference
    let (_, x) = io::load_image(&path)?;
    Ok(x)
}
