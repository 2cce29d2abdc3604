//! Experiment configuration: a single TOML file describing the grid,
//! geometry, phantom, noise, regularizer, reference solver, and a list of
//! named solver runs. Command-line flags override individual keys.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use oslalm::ct::{Ellipse, Geometry, ImageGrid};
use oslalm::regularizer::{BoxConstraint, Potential, RegularizerConfig};
use oslalm::solvers::{Algorithm, MajorizerKind, RhoMode, SolverOptions, RHO_MIN_DEFAULT};

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub grid: GridConfig,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub phantom: Vec<EllipseConfig>,
    pub noise: NoiseConfig,
    pub regularizer: RegularizerSection,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default, rename = "run")]
    pub runs: Vec<RunConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub pixel_size: f64,
    pub roi_radius: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub n_views: usize,
    pub n_bins: usize,
    pub bin_spacing: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipseConfig {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
    #[serde(default)]
    pub angle: f64,
    pub density: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub i0: f64,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerSection {
    pub beta: f64,
    /// "quadratic" or "fair"
    pub potential: String,
    #[serde(default)]
    pub delta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub iterations: usize,
    #[serde(default = "default_true")]
    pub restart: bool,
}

fn default_true() -> bool {
    true
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            iterations: 2000,
            restart: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    /// os-lalm | os-sqs | os-nes05 | os-rnes05 | ista
    pub algorithm: String,
    #[serde(default = "one")]
    pub subsets: usize,
    /// fixed | continuation (os-lalm only)
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub rho_min: Option<f64>,
    #[serde(default = "one")]
    pub n_inner: usize,
    pub epochs: usize,
    /// diagonal | scalar
    #[serde(default)]
    pub majorizer: Option<String>,
    #[serde(default)]
    pub bb: bool,
    #[serde(default)]
    pub gamma: Option<f64>,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn image_grid(&self) -> CliResult<ImageGrid> {
        Ok(ImageGrid::new(
            self.grid.nx,
            self.grid.ny,
            self.grid.pixel_size,
            self.grid.roi_radius,
        )?)
    }

    pub fn scan_geometry(&self) -> CliResult<Geometry> {
        Ok(Geometry::parallel(
            self.geometry.n_views,
            self.geometry.n_bins,
            self.geometry.bin_spacing,
        )?)
    }

    pub fn ellipses(&self) -> Vec<Ellipse> {
        self.phantom
            .iter()
            .map(|e| Ellipse {
                cx: e.cx,
                cy: e.cy,
                rx: e.rx,
                ry: e.ry,
                angle: e.angle,
                density: e.density,
            })
            .collect()
    }

    pub fn regularizer(&self) -> CliResult<RegularizerConfig> {
        let potential = match self.regularizer.potential.as_str() {
            "quadratic" => Potential::Quadratic,
            "fair" => {
                let delta = self.regularizer.delta.ok_or_else(|| {
                    CliError::config("fair potential requires regularizer.delta")
                })?;
                Potential::fair(delta)?
            }
            other => {
                return Err(CliError::config(format!(
                    "unknown potential '{other}' (expected quadratic or fair)"
                )))
            }
        };
        Ok(RegularizerConfig::new(self.regularizer.beta, potential)?)
    }

    pub fn bounds(&self) -> BoxConstraint {
        BoxConstraint::nonnegative()
    }

    pub fn find_run(&self, name: &str) -> CliResult<&RunConfig> {
        self.runs.iter().find(|r| r.name == name).ok_or_else(|| {
            CliError::config(format!(
                "no [[run]] named '{name}' in the config (available: {})",
                self.runs
                    .iter()
                    .map(|r| r.name.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })
    }
}

impl RunConfig {
    pub fn solver_options(&self) -> CliResult<SolverOptions> {
        let algorithm = match self.algorithm.as_str() {
            "os-lalm" => Algorithm::OsLalm,
            "os-sqs" => Algorithm::OsSqs,
            "os-nes05" => Algorithm::OsNes05,
            "os-rnes05" => Algorithm::OsRNes05 {
                gamma: self.gamma.unwrap_or(0.0),
            },
            "ista" => Algorithm::Ista,
            other => {
                return Err(CliError::config(format!(
                    "unknown algorithm '{other}' in run '{}'",
                    self.name
                )))
            }
        };
        let mode = match self.mode.as_deref() {
            None | Some("continuation") => RhoMode::Continuation {
                rho_min: self.rho_min.unwrap_or(RHO_MIN_DEFAULT),
            },
            Some("fixed") => {
                let rho = self.rho.ok_or_else(|| {
                    CliError::config(format!("run '{}': fixed mode requires rho", self.name))
                })?;
                RhoMode::Fixed(rho)
            }
            Some(other) => {
                return Err(CliError::config(format!(
                    "unknown mode '{other}' (expected fixed or continuation)"
                )))
            }
        };
        let majorizer = match self.majorizer.as_deref() {
            None | Some("diagonal") => MajorizerKind::Diagonal,
            Some("scalar") => MajorizerKind::Scalar,
            Some(other) => {
                return Err(CliError::config(format!(
                    "unknown majorizer '{other}' (expected diagonal or scalar)"
                )))
            }
        };
        Ok(SolverOptions {
            algorithm,
            mode,
            subsets: self.subsets,
            n_inner: self.n_inner,
            max_epochs: self.epochs,
            majorizer,
            bb: self.bb,
        })
    }
}
