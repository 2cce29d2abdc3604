//! Solvers for the regularized weighted least-squares problem
//! `min_x 0.5 ||y - Ax||^2_W + beta R(x) + indicator(box)`:
//! the linearized augmented Lagrangian family (full split iterates,
//! gradient-based form, ordered-subsets variant with deterministic downward
//! continuation and adaptive restart), the FISTA reference solver, and the
//! ordered-subsets baselines used for comparison curves.

mod baselines;
mod inner;
mod lalm;
mod log;

pub use baselines::{ista_step, os_nes05_epoch, os_rnes05_epoch, os_sqs_epoch, MomentumState};
pub use inner::{fista_reference, inner_denoise};
pub use lalm::{
    continuation_rho, full_lalm_u_d_residual, lalm_step, oslalm_epoch, restart_indicator,
    u_update_quadratic, FullLalmSolver, FullLalmState, LalmState, SolverState,
};
pub use log::{ConvergenceLog, LogRow};

use crate::ct::{partition_subsets, rms_diff, Geometry, ImageGrid, SubsetPartition};
use crate::error::{Error, Result};
use crate::linalg::{spectral_bound, DenseVector, DiagonalOperator, SparseMatrix};
use crate::majorizer::compute_ldiag;
use crate::regularizer::{
    project_box, reg_value, BoxConstraint, RegularizerConfig,
};

/// The penalized weighted least-squares reconstruction problem instance.
#[derive(Clone, Debug)]
pub struct PwlsProblem {
    pub a: SparseMatrix,
    pub weights: DiagonalOperator,
    pub y: DenseVector,
    pub reg: RegularizerConfig,
    pub grid: ImageGrid,
    pub geometry: Geometry,
    pub bounds: BoxConstraint,
}

impl PwlsProblem {
    pub fn new(
        a: SparseMatrix,
        weights: DiagonalOperator,
        y: DenseVector,
        reg: RegularizerConfig,
        grid: ImageGrid,
        geometry: Geometry,
        bounds: BoxConstraint,
    ) -> Result<Self> {
        if a.rows() != geometry.n_rays() {
            return Err(Error::dim("PwlsProblem rows", geometry.n_rays(), a.rows()));
        }
        if a.cols() != grid.n_pixels() {
            return Err(Error::dim("PwlsProblem cols", grid.n_pixels(), a.cols()));
        }
        if weights.len() != a.rows() {
            return Err(Error::dim("PwlsProblem weights", a.rows(), weights.len()));
        }
        if y.len() != a.rows() {
            return Err(Error::dim("PwlsProblem data", a.rows(), y.len()));
        }
        Ok(PwlsProblem {
            a,
            weights,
            y,
            reg,
            grid,
            geometry,
            bounds,
        })
    }

    pub fn n_pixels(&self) -> usize {
        self.a.cols()
    }

    /// Full data-term gradient `A'W(Ax - y)`.
    pub fn grad_data(&self, x: &DenseVector) -> Result<DenseVector> {
        let r = self.a.spmv(x)?.sub(&self.y);
        self.a.spmv_t(&self.weights.apply(&r)?)
    }

    /// Scaled subset gradient `M * A_m' W_m (A_m x - y_m)` over the rows of
    /// subset `m`.
    pub fn subset_grad(
        &self,
        partition: &SubsetPartition,
        m: usize,
        x: &DenseVector,
    ) -> Result<DenseVector> {
        if x.len() != self.n_pixels() {
            return Err(Error::dim("subset_grad", self.n_pixels(), x.len()));
        }
        let scale = partition.m() as f64;
        let xs = x.as_slice();
        let w = self.weights.diag().as_slice();
        let ys = self.y.as_slice();
        let mut out = vec![0.0; self.n_pixels()];
        for &r in partition.subset_rows(m) {
            let resid = self.a.row_dot(r, xs) - ys[r];
            let coef = scale * (w[r] * resid);
            if coef != 0.0 {
                self.a.row_axpy(r, coef, &mut out);
            }
        }
        Ok(DenseVector::from_raw(out))
    }

    /// `0.5 ||y - Ax||^2_W + beta R(x)`, with the box indicator reported
    /// separately as a feasibility flag.
    pub fn objective(&self, x: &DenseVector) -> Result<Objective> {
        let r = self.a.spmv(x)?.sub(&self.y);
        let data: f64 = r
            .iter()
            .zip(self.weights.diag().iter())
            .map(|(ri, wi)| wi * ri * ri)
            .sum::<f64>()
            * 0.5;
        let reg = reg_value(&self.reg, &self.grid, x)?;
        Ok(Objective {
            value: data + reg,
            feasible: self.bounds.contains(x),
        })
    }

    /// The `(W^{1/2} A, W^{1/2} y)` substitution that turns the weighted
    /// problem into the plain quadratic form used by the split iterates.
    pub fn weighted_system(&self) -> Result<(SparseMatrix, DenseVector)> {
        let sqrt_w = self.weights.sqrt();
        let aw = self.a.scale_rows(sqrt_w.diag())?;
        let yw = sqrt_w.apply(&self.y)?;
        Ok((aw, yw))
    }
}

/// Objective value plus whether the point satisfies the box constraint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Objective {
    pub value: f64,
    pub feasible: bool,
}

/// Solves the x-update subproblem `argmin_x h(x) + 0.5 ||x - z||^2_metric`.
pub trait ProxOperator {
    fn apply(
        &self,
        z: &DenseVector,
        metric: &DiagonalOperator,
        warm: &DenseVector,
    ) -> Result<DenseVector>;
}

/// `h = 0`: the subproblem solution is `z` itself.
pub struct IdentityProx;

impl ProxOperator for IdentityProx {
    fn apply(
        &self,
        z: &DenseVector,
        _metric: &DiagonalOperator,
        _warm: &DenseVector,
    ) -> Result<DenseVector> {
        Ok(z.clone())
    }
}

/// `h = indicator(box)`: elementwise clamp, exact for any diagonal metric.
pub struct BoxProx(pub BoxConstraint);

impl ProxOperator for BoxProx {
    fn apply(
        &self,
        z: &DenseVector,
        _metric: &DiagonalOperator,
        _warm: &DenseVector,
    ) -> Result<DenseVector> {
        Ok(project_box(&self.0, z))
    }
}

/// `h = beta R + indicator(box)`: the constrained denoising subproblem,
/// solved by a fixed number of FISTA iterations warm-started at the previous
/// image.
pub struct DenoiseProx<'a> {
    pub reg: &'a RegularizerConfig,
    pub grid: &'a ImageGrid,
    pub bounds: BoxConstraint,
    pub n_inner: usize,
}

impl ProxOperator for DenoiseProx<'_> {
    fn apply(
        &self,
        z: &DenseVector,
        metric: &DiagonalOperator,
        warm: &DenseVector,
    ) -> Result<DenseVector> {
        inner_denoise(
            warm,
            metric,
            z,
            self.reg,
            self.grid,
            &self.bounds,
            self.n_inner,
        )
    }
}

/// Which reconstruction algorithm a run uses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Algorithm {
    /// Ordered-subsets linearized augmented Lagrangian (the main solver).
    OsLalm,
    /// Standard ordered-subsets separable-surrogate descent.
    OsSqs,
    /// Ordered subsets with Nesterov-style momentum.
    OsNes05,
    /// Relaxed momentum with a growing diagonal majorizer.
    OsRNes05 { gamma: f64 },
    /// Plain proximal gradient (one subset).
    Ista,
}

/// Penalty-parameter policy for the AL solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RhoMode {
    Fixed(f64),
    /// Deterministic downward schedule with adaptive restart.
    Continuation { rho_min: f64 },
}

pub const RHO_MIN_DEFAULT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MajorizerKind {
    /// `L I` from the power-iteration spectral bound.
    Scalar,
    /// `diag(A'WA1)`.
    Diagonal,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub algorithm: Algorithm,
    pub mode: RhoMode,
    pub subsets: usize,
    /// FISTA iterations per inner denoising subproblem.
    pub n_inner: usize,
    pub max_epochs: usize,
    pub majorizer: MajorizerKind,
    /// Secant rescaling of the diagonal majorizer (requires `Diagonal`).
    pub bb: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            algorithm: Algorithm::OsLalm,
            mode: RhoMode::Continuation {
                rho_min: RHO_MIN_DEFAULT,
            },
            subsets: 1,
            n_inner: 1,
            max_epochs: 30,
            majorizer: MajorizerKind::Diagonal,
            bb: false,
        }
    }
}

fn validate_options(opts: &SolverOptions) -> Result<()> {
    if opts.subsets < 1 {
        return Err(Error::InvalidParameter("subsets must be >= 1".into()));
    }
    if opts.n_inner < 1 {
        return Err(Error::InvalidParameter("n_inner must be >= 1".into()));
    }
    if let RhoMode::Fixed(r) = opts.mode {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fixed rho must lie in (0, 1], got {r}"
            )));
        }
    }
    if opts.bb && opts.majorizer != MajorizerKind::Diagonal {
        return Err(Error::ConfigConflict(
            "secant rescaling requires the diagonal majorizer".into(),
        ));
    }
    if matches!(opts.algorithm, Algorithm::Ista) && opts.subsets != 1 {
        return Err(Error::ConfigConflict(
            "ista is a one-subset method; set subsets = 1".into(),
        ));
    }
    if let Algorithm::OsRNes05 { gamma } = opts.algorithm {
        if !(gamma >= 0.0) {
            return Err(Error::InvalidParameter("gamma must be >= 0".into()));
        }
    }
    Ok(())
}

/// Run one algorithm on a problem, logging one row per inner update (plus an
/// initial row). `reference` supplies the almost-converged image that the
/// RMS-difference column is measured against; without it the column is NaN.
pub fn run_reconstruction(
    problem: &PwlsProblem,
    opts: &SolverOptions,
    reference: Option<&DenseVector>,
) -> Result<(DenseVector, ConvergenceLog)> {
    validate_options(opts)?;
    let partition = partition_subsets(&problem.geometry, opts.subsets)?;
    let n = problem.n_pixels();

    let base_metric = match opts.majorizer {
        MajorizerKind::Diagonal => compute_ldiag(&problem.a, &problem.weights)?,
        MajorizerKind::Scalar => {
            let l = spectral_bound(&problem.a, &problem.weights, 20_000, 1e-10)?;
            DiagonalOperator::uniform(n, l)?
        }
    };
    let prox = DenoiseProx {
        reg: &problem.reg,
        grid: &problem.grid,
        bounds: problem.bounds,
        n_inner: opts.n_inner,
    };

    let mut log = ConvergenceLog::new();
    let clock = std::time::Instant::now();
    let x0 = DenseVector::zeros(n);
    let rho0 = match (opts.algorithm, opts.mode) {
        (Algorithm::OsLalm, RhoMode::Fixed(r)) => r,
        (Algorithm::OsLalm, RhoMode::Continuation { .. }) => continuation_rho(0, 0.0),
        (Algorithm::Ista, _) => 1.0,
        _ => f64::NAN,
    };
    let record = |x: &DenseVector,
                      epoch: usize,
                      inner: usize,
                      rho: f64,
                      restarted: bool,
                      log: &mut ConvergenceLog|
     -> Result<()> {
        let obj = problem.objective(x)?;
        let rmsd = match reference {
            Some(r) => rms_diff(x, r, &problem.grid)?,
            None => f64::NAN,
        };
        log.push(LogRow {
            epoch,
            inner,
            rho,
            restarted,
            objective: obj.value,
            rmsd,
            seconds: clock.elapsed().as_secs_f64(),
        });
        Ok(())
    };
    record(&x0, 0, 0, rho0, false, &mut log)?;

    let m = opts.subsets;
    match opts.algorithm {
        Algorithm::OsLalm => {
            let mut state = SolverState::init(problem, &partition, x0)?;
            for epoch in 0..opts.max_epochs {
                let mut pending: Vec<(DenseVector, usize, f64, bool)> = Vec::with_capacity(m);
                oslalm_epoch(
                    &mut state,
                    problem,
                    &partition,
                    &prox,
                    &base_metric,
                    &opts.mode,
                    opts.bb,
                    |st, restarted| {
                        pending.push((
                            st.core.x.clone(),
                            (st.inner_index - 1) % m,
                            st.rho,
                            restarted,
                        ));
                    },
                )?;
                for (x, inner, rho, restarted) in pending {
                    record(&x, epoch + 1, inner, rho, restarted, &mut log)?;
                }
            }
            Ok((state.core.x, log))
        }
        Algorithm::Ista => {
            let mut x = x0;
            for epoch in 0..opts.max_epochs {
                x = ista_step(&x, problem, &base_metric, &prox)?;
                record(&x, epoch + 1, 0, 1.0, false, &mut log)?;
            }
            Ok((x, log))
        }
        Algorithm::OsSqs => {
            let mut x = x0;
            for epoch in 0..opts.max_epochs {
                let mut pending: Vec<DenseVector> = Vec::with_capacity(m);
                os_sqs_epoch(&mut x, problem, &partition, &base_metric, |xi| {
                    pending.push(xi.clone());
                })?;
                for (inner, xi) in pending.into_iter().enumerate() {
                    record(&xi, epoch + 1, inner, f64::NAN, false, &mut log)?;
                }
            }
            Ok((x, log))
        }
        Algorithm::OsNes05 | Algorithm::OsRNes05 { .. } => {
            let gamma = match opts.algorithm {
                Algorithm::OsRNes05 { gamma } => gamma,
                _ => 0.0,
            };
            let mut state = MomentumState::init(x0);
            for epoch in 0..opts.max_epochs {
                let mut pending: Vec<DenseVector> = Vec::with_capacity(m);
                os_rnes05_epoch(&mut state, gamma, problem, &partition, &base_metric, |xi| {
                    pending.push(xi.clone());
                })?;
                for (inner, xi) in pending.into_iter().enumerate() {
                    record(&xi, epoch + 1, inner, f64::NAN, false, &mut log)?;
                }
            }
            Ok((state.x, log))
        }
    }
}
