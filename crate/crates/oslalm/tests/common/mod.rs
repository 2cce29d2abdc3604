//! Shared fixtures for the integration suites: the standard 64x64 test
//! problem, its almost-converged reference, and cached solver curves.

use std::sync::OnceLock;

use oslalm::ct::{
    build_system_matrix, make_phantom, synthesize_weights, Ellipse, Geometry, ImageGrid,
};
use oslalm::linalg::DenseVector;
use oslalm::regularizer::{BoxConstraint, Potential, RegularizerConfig};
use oslalm::solvers::{
    fista_reference, run_reconstruction, Algorithm, MajorizerKind, PwlsProblem, RhoMode,
    SolverOptions,
};

pub struct Fixture {
    pub problem: PwlsProblem,
    #[allow(dead_code)] // used by some, not all, test binaries
    pub x_true: DenseVector,
    pub reference: DenseVector,
    pub dynamic_range: f64,
}

/// The six-ellipse phantom used throughout: a large disk with a few
/// soft-tissue-like inserts.
pub fn standard_ellipses() -> Vec<Ellipse> {
    let e = |cx, cy, rx, ry, angle, density| Ellipse {
        cx,
        cy,
        rx,
        ry,
        angle,
        density,
    };
    vec![
        e(0.0, 0.0, 28.0, 28.0, 0.0, 1.0),
        e(-9.0, 0.0, 7.0, 11.0, 0.3, -0.4),
        e(9.0, -2.0, 6.0, 9.0, -0.3, -0.35),
        e(0.0, 14.0, 5.0, 3.0, 0.0, 0.45),
        e(2.0, -12.0, 2.5, 2.5, 0.0, 0.5),
        e(-4.0, -11.0, 1.6, 1.6, 0.0, 0.6),
    ]
}

/// Build a PWLS problem of the standard family at a given grid size.
pub fn build_problem(
    nx: usize,
    n_views: usize,
    n_bins: usize,
    i0: f64,
    seed: u64,
    beta: f64,
) -> (PwlsProblem, DenseVector) {
    let grid = ImageGrid::new(nx, nx, 1.0, 0.47 * nx as f64).unwrap();
    let geo = Geometry::parallel(n_views, n_bins, 1.0).unwrap();
    let a = build_system_matrix(&grid, &geo);
    let scale = nx as f64 / 64.0;
    let ellipses: Vec<Ellipse> = standard_ellipses()
        .into_iter()
        .map(|e| Ellipse {
            cx: e.cx * scale,
            cy: e.cy * scale,
            rx: e.rx * scale,
            ry: e.ry * scale,
            ..e
        })
        .collect();
    let x_true = make_phantom(&grid, &ellipses).unwrap();
    let (y, w) = synthesize_weights(&a, &geo, &x_true, i0, seed).unwrap();
    let reg = if beta > 0.0 {
        RegularizerConfig::new(beta, Potential::fair(0.02).unwrap()).unwrap()
    } else {
        RegularizerConfig::off()
    };
    let problem = PwlsProblem::new(
        a,
        w,
        y.into_data(),
        reg,
        grid,
        geo,
        BoxConstraint::nonnegative(),
    )
    .unwrap();
    (problem, x_true)
}

/// The 64x64 test problem: 96 views x 96 bins, I0 = 1e5, seed 42,
/// Fair-potential regularizer with beta = 2.
pub fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let (problem, x_true) = build_problem(64, 96, 96, 1e5, 42, 2.0);
        let reference = fista_reference(&problem, 8000, true).unwrap();
        let dynamic_range = x_true.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - x_true.iter().copied().fold(f64::INFINITY, f64::min);
        Fixture {
            problem,
            x_true,
            reference,
            dynamic_range,
        }
    })
}

pub const FIXED_RHOS: [f64; 4] = [1.0, 0.2, 0.1, 0.05];

/// End-of-epoch RMS curves of the fixed-rho OS-LALM runs (M = 8, n = 1,
/// 80 epochs), cached across criteria.
pub fn fixed_rho_curves() -> &'static Vec<(f64, Vec<f64>)> {
    static CURVES: OnceLock<Vec<(f64, Vec<f64>)>> = OnceLock::new();
    CURVES.get_or_init(|| {
        let fx = fixture();
        FIXED_RHOS
            .iter()
            .map(|&rho| {
                let opts = SolverOptions {
                    algorithm: Algorithm::OsLalm,
                    mode: RhoMode::Fixed(rho),
                    subsets: 8,
                    n_inner: 1,
                    max_epochs: 80,
                    majorizer: MajorizerKind::Diagonal,
                    bb: false,
                };
                let (_, log) =
                    run_reconstruction(&fx.problem, &opts, Some(&fx.reference)).unwrap();
                (rho, log.end_of_epoch_rmsd())
            })
            .collect()
    })
}

/// First epoch index at which the curve is at or below the threshold.
pub fn epochs_to_threshold(curve: &[f64], threshold: f64) -> Option<usize> {
    curve.iter().position(|&v| v <= threshold)
}
