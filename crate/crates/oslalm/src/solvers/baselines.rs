//! Comparison baselines: plain proximal gradient (ISTA), the standard
//! ordered-subsets separable-surrogate descent, and ordered subsets with
//! Nesterov-style momentum in its plain and relaxed forms.
//!
//! The momentum recursion used here is the two-sequence form
//!
//! ```text
//! x_{j+1} = proj( z_j - D_j^{-1} (M grad_m(z_j) + grad R(z_j)) )
//! t_{j+1} = (1 + sqrt(1 + 4 t_j^2)) / 2
//! z_{j+1} = x_{j+1} + ((t_j - 1)/t_{j+1}) (x_{j+1} - x_j)
//! ```
//!
//! starting from `z_0 = x_0`, `t_0 = 1` (so the first update is a plain
//! gradient step). The relaxed variant grows the diagonal as
//! `D_j = D + (j+2) gamma I` at global inner step `j`, trading speed for
//! gradient-error tolerance; `gamma = 0` reduces to the plain variant
//! exactly.

use crate::ct::SubsetPartition;
use crate::error::Result;
use crate::linalg::{DenseVector, DiagonalOperator};
use crate::regularizer::{project_box, reg_gradient};

use super::{ProxOperator, PwlsProblem};

/// One proximal-gradient step on the full objective with diagonal metric
/// `D`: `x_new = prox_h(x - D^{-1} grad l(x))` in the `D`-metric. Identical
/// to the one-subset LALM update at `rho = 1`.
pub fn ista_step(
    x: &DenseVector,
    problem: &PwlsProblem,
    metric: &DiagonalOperator,
    prox: &dyn ProxOperator,
) -> Result<DenseVector> {
    let grad = problem.grad_data(x)?;
    let z = x.sub(&metric.solve(&grad)?);
    prox.apply(&z, metric, x)
}

/// One epoch of OS-SQS: cycle the subsets in visiting order, stepping
/// `x <- proj( x - L_diag^{-1} (M grad_m(x) + grad R(x)) )`.
pub fn os_sqs_epoch(
    x: &mut DenseVector,
    problem: &PwlsProblem,
    partition: &SubsetPartition,
    l_diag: &DiagonalOperator,
    mut on_update: impl FnMut(&DenseVector),
) -> Result<()> {
    for slot in 0..partition.m() {
        let m = partition.subset_at(slot);
        let grad = problem
            .subset_grad(partition, m, x)?
            .add(&reg_gradient(&problem.reg, &problem.grid, x)?);
        *x = project_box(&problem.bounds, &x.sub(&l_diag.solve(&grad)?));
        on_update(x);
    }
    Ok(())
}

/// Two-sequence momentum state shared by the plain and relaxed variants.
#[derive(Clone, Debug)]
pub struct MomentumState {
    pub x: DenseVector,
    pub z: DenseVector,
    pub t: f64,
    /// Global inner-update counter driving subset cycling and the growing
    /// diagonal of the relaxed variant.
    pub j: usize,
}

impl MomentumState {
    pub fn init(x0: DenseVector) -> Self {
        MomentumState {
            z: x0.clone(),
            x: x0,
            t: 1.0,
            j: 0,
        }
    }
}

/// One epoch of the OS+momentum baseline.
pub fn os_nes05_epoch(
    state: &mut MomentumState,
    problem: &PwlsProblem,
    partition: &SubsetPartition,
    l_diag: &DiagonalOperator,
    on_update: impl FnMut(&DenseVector),
) -> Result<()> {
    os_rnes05_epoch(state, 0.0, problem, partition, l_diag, on_update)
}

/// One epoch of the relaxed OS+momentum baseline with growing diagonal
/// `D + (j+2) gamma I`.
pub fn os_rnes05_epoch(
    state: &mut MomentumState,
    gamma: f64,
    problem: &PwlsProblem,
    partition: &SubsetPartition,
    l_diag: &DiagonalOperator,
    mut on_update: impl FnMut(&DenseVector),
) -> Result<()> {
    for _ in 0..partition.m() {
        let m = partition.subset_at(state.j);
        let step_diag = if gamma == 0.0 {
            l_diag.clone()
        } else {
            let shift = (state.j + 2) as f64 * gamma;
            let shift_op = DiagonalOperator::uniform(l_diag.len(), shift)?;
            l_diag.add(&shift_op)
        };
        let grad = problem
            .subset_grad(partition, m, &state.z)?
            .add(&reg_gradient(&problem.reg, &problem.grid, &state.z)?);
        let x_new = project_box(&problem.bounds, &state.z.sub(&step_diag.solve(&grad)?));
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * state.t * state.t).sqrt());
        state.z = x_new.add_scaled((state.t - 1.0) / t_new, &x_new.sub(&state.x));
        state.x = x_new;
        state.t = t_new;
        state.j += 1;
        on_update(&state.x);
    }
    Ok(())
}
