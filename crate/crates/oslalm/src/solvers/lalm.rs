//! Linearized augmented Lagrangian iterates.
//!
//! Three forms of the same method, used at different points:
//!
//! * [`FullLalmSolver`]: the unsimplified split iterates carrying the
//!   sinogram-domain pair `(u, d)`; mostly a test and analysis vehicle.
//! * [`lalm_step`]: the gradient-based form tracking only the split
//!   gradient `g`; one proximal update per call.
//! * [`oslalm_epoch`]: the ordered-subsets variant of the gradient-based
//!   form, with the downward continuation schedule and adaptive restart.
//!
//! For a quadratic data term the full iterates satisfy `u + rho d = y`
//! whenever `d` is initialized as `rho^{-1}(y - u0)`; the gradient-based
//! form is the substitution of that identity into the split iterates.

use crate::ct::SubsetPartition;
use crate::error::{Error, Result};
use crate::linalg::{DenseVector, DiagonalOperator, SparseMatrix};
use crate::majorizer::bb_scale;

use super::{ProxOperator, PwlsProblem, RhoMode};

/// Closed-form u-update for the quadratic data term:
/// `u = rho/(rho+1) (Ax - d) + 1/(rho+1) y`.
pub fn u_update_quadratic(
    ax: &DenseVector,
    d: &DenseVector,
    y: &DenseVector,
    rho: f64,
) -> Result<DenseVector> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter("u-update needs rho > 0".into()));
    }
    if d.len() != ax.len() {
        return Err(Error::dim("u_update_quadratic", ax.len(), d.len()));
    }
    if y.len() != ax.len() {
        return Err(Error::dim("u_update_quadratic", ax.len(), y.len()));
    }
    let cu = rho / (rho + 1.0);
    let cy = 1.0 / (rho + 1.0);
    Ok(DenseVector::lin_comb(cu, &ax.sub(d), cy, y))
}

/// State of the unsimplified linearized AL iterates: image plus the
/// sinogram-domain split variable and scaled multiplier.
#[derive(Clone, Debug)]
pub struct FullLalmState {
    pub x: DenseVector,
    pub u: DenseVector,
    pub d: DenseVector,
}

/// Runs the unsimplified iterates on `min g(Ax) + h(x)` with
/// `g(u) = 0.5 ||y - u||^2`. Weighted problems enter through the
/// `(W^{1/2} A, W^{1/2} y)` substitution performed by [`FullLalmSolver::new`].
pub struct FullLalmSolver {
    aw: SparseMatrix,
    yw: DenseVector,
}

impl FullLalmSolver {
    pub fn new(a: &SparseMatrix, w: &DiagonalOperator, y: &DenseVector) -> Result<Self> {
        if w.len() != a.rows() {
            return Err(Error::dim("FullLalmSolver", a.rows(), w.len()));
        }
        if y.len() != a.rows() {
            return Err(Error::dim("FullLalmSolver", a.rows(), y.len()));
        }
        let sqrt_w = w.sqrt();
        Ok(FullLalmSolver {
            aw: a.scale_rows(sqrt_w.diag())?,
            yw: sqrt_w.apply(y)?,
        })
    }

    /// The (substituted) system matrix the iterates run on.
    pub fn matrix(&self) -> &SparseMatrix {
        &self.aw
    }

    /// The (substituted) data vector; the identity `u + rho d = y` holds
    /// against this vector.
    pub fn data(&self) -> &DenseVector {
        &self.yw
    }

    /// Initialize with `u0 = A x0` and `d0 = rho^{-1}(y - u0)`, the choice
    /// that makes the split identity hold from the first iterate on.
    pub fn init_state(&self, x0: DenseVector, rho: f64) -> Result<FullLalmState> {
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter("init needs rho > 0".into()));
        }
        let u = self.aw.spmv(&x0)?;
        let d = self.yw.sub(&u).scale(1.0 / rho);
        Ok(FullLalmState { x: x0, u, d })
    }

    /// One iterate: proximal x-update with search direction
    /// `s = rho A'(Ax - u - d)`, closed-form u-update, multiplier ascent.
    /// `metric` is the (unscaled) majorizer diagonal `D`; the prox metric is
    /// `rho D` and the gradient step is `x - rho^{-1} D^{-1} s`.
    pub fn step(
        &self,
        state: &mut FullLalmState,
        metric: &DiagonalOperator,
        rho: f64,
        prox: &dyn ProxOperator,
    ) -> Result<()> {
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter("step needs rho > 0".into()));
        }
        let ax = self.aw.spmv(&state.x)?;
        let s = self
            .aw
            .spmv_t(&ax.sub(&state.u).sub(&state.d))?
            .scale(rho);
        let z = state.x.add_scaled(-1.0 / rho, &metric.solve(&s)?);
        let x_new = prox.apply(&z, &metric.scale(rho)?, &state.x)?;
        let ax_new = self.aw.spmv(&x_new)?;
        let u_new = u_update_quadratic(&ax_new, &state.d, &self.yw, rho)?;
        let d_new = state.d.sub(&ax_new).add(&u_new);
        state.x = x_new;
        state.u = u_new;
        state.d = d_new;
        Ok(())
    }
}

/// `||u + rho d - y||_inf`, the residual of the quadratic-data split
/// identity.
pub fn full_lalm_u_d_residual(state: &FullLalmState, y: &DenseVector, rho: f64) -> f64 {
    state.u.add_scaled(rho, &state.d).sub(y).norm_inf()
}

/// State of the gradient-based form: image, split gradient, and the
/// (subset-scaled) gradient evaluated at the current image.
#[derive(Clone, Debug)]
pub struct LalmState {
    pub x: DenseVector,
    pub g_split: DenseVector,
    pub grad_curr: DenseVector,
}

impl LalmState {
    /// `g0` is the gradient at `x0`; the split gradient starts there, which
    /// corresponds to `u0 = A x0` in the unsimplified iterates.
    pub fn init(x0: DenseVector, grad0: DenseVector) -> Self {
        LalmState {
            g_split: grad0.clone(),
            grad_curr: grad0,
            x: x0,
        }
    }
}

/// Restart indicator `xi = (g - grad_new)'(grad_new - grad_prev)`.
///
/// Under-damped trajectories make this oscillate; a positive value flags the
/// overshoot and triggers the continuation restart (strictly positive only:
/// zero does not restart).
pub fn restart_indicator(
    g_prev_split: &DenseVector,
    grad_new: &DenseVector,
    grad_prev: &DenseVector,
) -> f64 {
    g_prev_split.sub(grad_new).dot(&grad_new.sub(grad_prev))
}

/// Downward continuation schedule:
/// `rho_0 = 1`, then `rho_l = max(pi/(l+1) sqrt(1 - (pi/(2l+2))^2), rho_min)`.
pub fn continuation_rho(l: usize, rho_min: f64) -> f64 {
    if l == 0 {
        return 1.0;
    }
    let lp = (l + 1) as f64;
    let half = std::f64::consts::PI / (2.0 * lp);
    let v = (std::f64::consts::PI / lp) * (1.0 - half * half).max(0.0).sqrt();
    v.max(rho_min)
}

/// One gradient-based linearized AL update:
///
/// ```text
/// s      = rho * grad_curr + (1 - rho) * g
/// x_new  = argmin_x h(x) + (rho/2) ||x - (x - rho^{-1} D^{-1} s)||^2_D
/// g_new  = rho/(rho+1) * grad(x_new) + 1/(rho+1) * g
/// ```
///
/// `grad_next` evaluates the (subset-scaled) gradient at the new image;
/// returns the restart indicator computed from the step.
pub fn lalm_step(
    state: &mut LalmState,
    metric: &DiagonalOperator,
    rho: f64,
    prox: &dyn ProxOperator,
    grad_next: &mut dyn FnMut(&DenseVector) -> Result<DenseVector>,
) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter("lalm_step needs rho > 0".into()));
    }
    let s = DenseVector::lin_comb(rho, &state.grad_curr, 1.0 - rho, &state.g_split);
    let z = state.x.add_scaled(-1.0 / rho, &metric.solve(&s)?);
    let x_new = prox.apply(&z, &metric.scale(rho)?, &state.x)?;
    let grad_new = grad_next(&x_new)?;
    let xi = restart_indicator(&state.g_split, &grad_new, &state.grad_curr);
    let g_new = DenseVector::lin_comb(
        rho / (rho + 1.0),
        &grad_new,
        1.0 / (rho + 1.0),
        &state.g_split,
    );
    state.x = x_new;
    state.g_split = g_new;
    state.grad_curr = grad_new;
    Ok(xi)
}

/// Full state of an ordered-subsets LALM run.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub core: LalmState,
    /// Penalty parameter used by the most recent inner update.
    pub rho: f64,
    /// Continuation counter; resets to zero on restart.
    pub l_counter: usize,
    pub epoch: usize,
    /// Global inner-update count (advances by the subset count per epoch).
    pub inner_index: usize,
    /// Current secant rescaling of the diagonal majorizer (1 when off).
    pub bb_alpha: f64,
}

impl SolverState {
    /// Initialize at `x0` with the first visited subset's scaled gradient.
    pub fn init(
        problem: &PwlsProblem,
        partition: &SubsetPartition,
        x0: DenseVector,
    ) -> Result<Self> {
        let first = partition.subset_at(0);
        let grad0 = problem.subset_grad(partition, first, &x0)?;
        Ok(SolverState {
            core: LalmState::init(x0, grad0),
            rho: 1.0,
            l_counter: 0,
            epoch: 0,
            inner_index: 0,
            bb_alpha: 1.0,
        })
    }
}

/// One epoch (`M` inner updates) of OS-LALM.
///
/// Each inner update applies [`lalm_step`] with the scaled gradient of the
/// current subset, evaluates the next subset's gradient at the new image
/// (so one subset gradient is computed per update), and, in continuation
/// mode, checks the restart condition: `xi > 0` resets the counter, any
/// other outcome advances it. The secant rescaling, when enabled, refits
/// `alpha` from the step just taken and applies it to the next update's
/// metric.
///
/// `on_update(state, restarted)` runs after every inner update.
#[allow(clippy::too_many_arguments)]
pub fn oslalm_epoch(
    state: &mut SolverState,
    problem: &PwlsProblem,
    partition: &SubsetPartition,
    prox: &dyn ProxOperator,
    base_metric: &DiagonalOperator,
    mode: &RhoMode,
    bb: bool,
    mut on_update: impl FnMut(&SolverState, bool),
) -> Result<()> {
    let m = partition.m();
    for _ in 0..m {
        let rho = match *mode {
            RhoMode::Fixed(r) => r,
            RhoMode::Continuation { rho_min } => continuation_rho(state.l_counter, rho_min),
        };
        state.rho = rho;
        let metric = if state.bb_alpha == 1.0 {
            base_metric.clone()
        } else {
            base_metric.scale(state.bb_alpha)?
        };

        let next_subset = partition.subset_at(state.inner_index + 1);
        let (x_prev, grad_prev) = if bb {
            (Some(state.core.x.clone()), Some(state.core.grad_curr.clone()))
        } else {
            (None, None)
        };

        let xi = lalm_step(&mut state.core, &metric, rho, prox, &mut |x_new| {
            problem.subset_grad(partition, next_subset, x_new)
        })?;

        if let (Some(xp), Some(gp)) = (x_prev, grad_prev) {
            let s_k = state.core.x.sub(&xp);
            let y_k = state.core.grad_curr.sub(&gp);
            // a degenerate secant (no movement) keeps the previous alpha
            if let Ok(alpha) = bb_scale(base_metric, &s_k, &y_k) {
                state.bb_alpha = alpha;
            }
        }

        let restarted = match *mode {
            RhoMode::Continuation { .. } => {
                if xi > 0.0 {
                    state.l_counter = 0;
                    true
                } else {
                    state.l_counter += 1;
                    false
                }
            }
            RhoMode::Fixed(_) => false,
        };
        state.inner_index += 1;
        on_update(state, restarted);
    }
    state.epoch += 1;
    Ok(())
}
