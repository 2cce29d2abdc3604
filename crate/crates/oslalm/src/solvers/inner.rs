//! FISTA machinery: the inner constrained denoising solver used by the
//! proximal x-updates, and the one-subset reference solver with adaptive
//! restart that produces the almost-converged images the RMS curves are
//! measured against.

use crate::ct::ImageGrid;
use crate::error::{Error, Result};
use crate::linalg::{DenseVector, DiagonalOperator};
use crate::majorizer::compute_ldiag;
use crate::regularizer::{
    project_box, reg_curvature_diag, reg_gradient, BoxConstraint, RegularizerConfig,
};

use super::PwlsProblem;

/// `n` FISTA iterations on
/// `min_x beta R(x) + 0.5 ||x - target||^2_metric  s.t.  x in box`,
/// warm-started at `x_warm`.
///
/// The gradient step uses the diagonal `metric + curvature(R)`, which
/// majorizes the smooth part, so every iterate is monotone in the surrogate
/// sense. With `beta = 0` the minimizer is the box projection of `target`
/// itself, which is returned exactly.
pub fn inner_denoise(
    x_warm: &DenseVector,
    metric: &DiagonalOperator,
    target: &DenseVector,
    cfg: &RegularizerConfig,
    grid: &ImageGrid,
    bounds: &BoxConstraint,
    n: usize,
) -> Result<DenseVector> {
    if n < 1 {
        return Err(Error::InvalidParameter(
            "inner_denoise needs n >= 1".into(),
        ));
    }
    if x_warm.len() != target.len() || metric.len() != target.len() {
        return Err(Error::dim("inner_denoise", target.len(), x_warm.len()));
    }
    if cfg.beta == 0.0 {
        return Ok(project_box(bounds, target));
    }

    let step_diag = metric.add(&reg_curvature_diag(cfg, grid));
    let mut x = x_warm.clone();
    let mut z = x_warm.clone();
    let mut t = 1.0_f64;
    for _ in 0..n {
        let grad = reg_gradient(cfg, grid, &z)?.add(&metric.apply(&z.sub(target))?);
        let x_new = project_box(bounds, &z.sub(&step_diag.solve(&grad)?));
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = x_new.add_scaled((t - 1.0) / t_new, &x_new.sub(&x));
        x = x_new;
        t = t_new;
    }
    Ok(x)
}

/// Convergent one-subset FISTA on the full objective
/// `0.5 ||y - Ax||^2_W + beta R(x)` over the box, with gradient-based
/// adaptive restart: momentum resets whenever
/// `<grad Psi(x_new), x_new - x> > 0`.
///
/// Starts from zero and uses the separable `diag(A'WA1) + curvature(R)`
/// majorizer as its step metric.
pub fn fista_reference(
    problem: &PwlsProblem,
    iters: usize,
    restart: bool,
) -> Result<DenseVector> {
    if iters < 1 {
        return Err(Error::InvalidParameter(
            "fista_reference needs iters >= 1".into(),
        ));
    }
    let step_diag = compute_ldiag(&problem.a, &problem.weights)?
        .add(&reg_curvature_diag(&problem.reg, &problem.grid));
    let grad_psi = |x: &DenseVector| -> Result<DenseVector> {
        Ok(problem
            .grad_data(x)?
            .add(&reg_gradient(&problem.reg, &problem.grid, x)?))
    };

    let mut x = DenseVector::zeros(problem.n_pixels());
    let mut z = x.clone();
    let mut t = 1.0_f64;
    for _ in 0..iters {
        let gz = grad_psi(&z)?;
        let x_new = project_box(&problem.bounds, &z.sub(&step_diag.solve(&gz)?));
        let mut t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mut z_new = x_new.add_scaled((t - 1.0) / t_new, &x_new.sub(&x));
        if restart {
            let gx = grad_psi(&x_new)?;
            if gx.dot(&x_new.sub(&x)) > 0.0 {
                t_new = 1.0;
                z_new = x_new.clone();
            }
        }
        x = x_new;
        z = z_new;
        t = t_new;
    }
    Ok(x)
}
