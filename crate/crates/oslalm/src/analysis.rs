//! Convergence-theory verification tools: per-eigencomponent damping
//! classification of the second-order recurrence driving the one-subset
//! iterates, the optimal penalty parameters, a primal-dual saddle-point
//! formulation with its gap and error-aware gap bound, and the measured
//! restart period of the continuation schedule.

use crate::error::{Error, Result};
use crate::linalg::{DenseVector, DiagonalOperator, SparseMatrix};
use crate::solvers::{ConvergenceLog, ProxOperator};

/// Damping regime of one eigencomponent of the quadratic-problem recurrence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DampingRegime {
    Under,
    Critical,
    Over,
}

/// Classification of one eigencomponent at a given `(lambda/L, rho)`.
#[derive(Clone, Copy, Debug)]
pub struct DampingReport {
    pub lambda_ratio: f64,
    pub rho: f64,
    pub regime: DampingRegime,
    /// The closed-form per-regime rate: the (repeated or dominant) real root
    /// in the critical/over-damped cases, and the real part
    /// `(1 - lambda/L + rho/2)/(1 + rho)` of the complex pair when
    /// under-damped.
    pub rate: f64,
    /// Modulus of the dominant root: what the trajectory envelope actually
    /// decays at. Coincides with `rate` except in the under-damped regime,
    /// where the modulus is `sqrt((1 - lambda/L)/(1 + rho))`.
    pub modulus: f64,
    /// Damped angular frequency `psi` (radians per update) when
    /// under-damped.
    pub damped_frequency: Option<f64>,
}

/// Critical penalty `rho_c = 2 sqrt(lambda/L (1 - lambda/L))`.
pub fn critical_rho(lambda_ratio: f64) -> f64 {
    2.0 * (lambda_ratio * (1.0 - lambda_ratio)).max(0.0).sqrt()
}

/// Repeated-root rate at the critical penalty.
pub fn rate_critical(lambda_ratio: f64) -> f64 {
    let q = 1.0 - lambda_ratio;
    (q / (1.0 + critical_rho(lambda_ratio))).sqrt()
}

/// Dominant real root in the over-damped regime (`rho >= rho_c`).
///
/// The discriminant `rho^2/4 - lambda/L (1 - lambda/L)` is evaluated in the
/// factored form `(rho/2 - rho_c/2)(rho/2 + rho_c/2)`, which is exact at the
/// critical boundary instead of amplifying rounding through the square root.
pub fn rate_over(lambda_ratio: f64, rho: f64) -> f64 {
    let q = 1.0 - lambda_ratio;
    let half_c = (lambda_ratio * q).max(0.0).sqrt();
    let disc = ((rho / 2.0 - half_c) * (rho / 2.0 + half_c)).max(0.0);
    (q + rho / 2.0 + disc.sqrt()) / (1.0 + rho)
}

/// Real part of the complex root pair in the under-damped regime
/// (`rho <= rho_c`).
pub fn rate_under(lambda_ratio: f64, rho: f64) -> f64 {
    (1.0 - lambda_ratio + rho / 2.0) / (1.0 + rho)
}

/// Root modulus in the under-damped regime.
pub fn modulus_under(lambda_ratio: f64, rho: f64) -> f64 {
    ((1.0 - lambda_ratio) / (1.0 + rho)).sqrt()
}

/// Classify the second-order recurrence
/// `(1+rho) r^2 - 2 (1 - lambda/L + rho/2) r + (1 - lambda/L) = 0`
/// at one `(lambda/L, rho)` pair.
///
/// At `lambda/L = 1` the polynomial loses its constant term; the roots are
/// `{0, rho/(1+rho)}` and the max-modulus root is reported with regime
/// `Over`.
pub fn classify_damping(lambda_ratio: f64, rho: f64) -> Result<DampingReport> {
    if !(lambda_ratio > 0.0 && lambda_ratio <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda_ratio must lie in (0, 1], got {lambda_ratio}"
        )));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter("rho must be positive".into()));
    }
    if lambda_ratio == 1.0 {
        let r = rho / (1.0 + rho);
        return Ok(DampingReport {
            lambda_ratio,
            rho,
            regime: DampingRegime::Over,
            rate: r,
            modulus: r,
            damped_frequency: None,
        });
    }
    let rho_c = critical_rho(lambda_ratio);
    let report = if rho > rho_c {
        let r = rate_over(lambda_ratio, rho);
        DampingReport {
            lambda_ratio,
            rho,
            regime: DampingRegime::Over,
            rate: r,
            modulus: r,
            damped_frequency: None,
        }
    } else if rho < rho_c {
        let q = 1.0 - lambda_ratio;
        let cos_psi = ((q + rho / 2.0) / ((1.0 + rho) * q).sqrt()).clamp(-1.0, 1.0);
        DampingReport {
            lambda_ratio,
            rho,
            regime: DampingRegime::Under,
            rate: rate_under(lambda_ratio, rho),
            modulus: modulus_under(lambda_ratio, rho),
            damped_frequency: Some(cos_psi.acos()),
        }
    } else {
        let r = rate_critical(lambda_ratio);
        DampingReport {
            lambda_ratio,
            rho,
            regime: DampingRegime::Critical,
            rate: r,
            modulus: r,
            damped_frequency: None,
        }
    };
    Ok(report)
}

/// Fastest-asymptotic-rate penalty `rho* = 2 sqrt(mu/L (1 - mu/L))`, the
/// critical penalty of the smallest eigencomponent.
pub fn rho_star(mu: f64, l: f64) -> Result<f64> {
    if !(mu > 0.0 && mu <= l) {
        return Err(Error::InvalidParameter(format!(
            "rho_star needs 0 < mu <= L, got mu = {mu}, L = {l}"
        )));
    }
    let ratio = mu / l;
    Ok(2.0 * (ratio * (1.0 - ratio)).max(0.0).sqrt())
}

/// Initialization-dependent optimum `rho_opt = ||A(x0 - x_hat)|| /
/// (sqrt(L) ||x0 - x_hat||)`; at most 1 when `L` majorizes `||A||^2`.
pub fn rho_opt(x0: &DenseVector, x_hat: &DenseVector, a: &SparseMatrix, l: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::InvalidParameter("rho_opt needs L > 0".into()));
    }
    let diff = x0.sub(x_hat);
    let dn = diff.norm();
    if dn == 0.0 {
        return Err(Error::InvalidParameter(
            "rho_opt is undefined at x0 = x_hat".into(),
        ));
    }
    Ok(a.spmv(&diff)?.norm() / (l.sqrt() * dn))
}

/// Simulate the diagonalized one-subset recurrence for one eigencomponent
/// (with `L = 1`, `lambda = lambda_ratio`):
///
/// ```text
/// x_{k+1} = x_k - (lambda x_k + (1/rho - 1) g_k)
/// g_{k+1} = rho/(rho+1) lambda x_{k+1} + 1/(rho+1) g_k
/// ```
///
/// Returns the `x` trajectory including the initial value (`steps` entries).
pub fn scalar_recurrence_sim(
    lambda_ratio: f64,
    rho: f64,
    steps: usize,
    x0: f64,
    g0: f64,
) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::InvalidParameter("simulation needs steps >= 2".into()));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter("rho must be positive".into()));
    }
    let mut xs = Vec::with_capacity(steps);
    let (mut x, mut g) = (x0, g0);
    xs.push(x);
    for _ in 1..steps {
        let x_new = x - (lambda_ratio * x + (1.0 / rho - 1.0) * g);
        g = rho / (rho + 1.0) * lambda_ratio * x_new + g / (rho + 1.0);
        x = x_new;
        xs.push(x);
    }
    Ok(xs)
}

/// Least-squares slope of `log |x_k|` over the last 30% of the samples,
/// exponentiated: the measured asymptotic contraction factor. Exact zeros
/// are skipped (they carry no rate information).
pub fn measure_asymptotic_rate(xs: &[f64]) -> Result<f64> {
    let start = (xs.len() as f64 * 0.7) as usize;
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, &v)| v != 0.0 && v.abs().is_finite())
        .map(|(k, &v)| (k as f64, v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidParameter(
            "too few usable samples to measure a rate".into(),
        ));
    }
    let n = pts.len() as f64;
    let mean_k = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, y) in pts {
        num += (k - mean_k) * (y - mean_y);
        den += (k - mean_k) * (k - mean_k);
    }
    if den == 0.0 {
        return Err(Error::InvalidParameter("degenerate sample window".into()));
    }
    Ok((num / den).exp())
}

/// Primal-dual iterates for the saddle problem
/// `min_z max_x  <-A'z, x> + g*(z) - h(x)` with quadratic
/// `g(u) = 0.5 ||y - u||^2`, i.e. `g*(z) = 0.5 ||z||^2 + <z, y>`:
///
/// ```text
/// x_{k+1} = prox_{sigma h}(x_k - sigma A' zbar_k)
/// z_{k+1} = (z_k + tau (A x_{k+1} - y)) / (1 + tau)
/// zbar_{k+1} = 2 z_{k+1} - z_k
/// ```
#[derive(Clone, Debug)]
pub struct CppdaState {
    pub x: DenseVector,
    pub z: DenseVector,
    pub z_bar: DenseVector,
}

impl CppdaState {
    /// Start with `zbar_0 = z_0` (the usual `z_{-1} = z_0` convention).
    pub fn init(x0: DenseVector, z0: DenseVector) -> Self {
        CppdaState {
            x: x0,
            z_bar: z0.clone(),
            z: z0,
        }
    }
}

/// One primal-dual update. Requires `sigma tau ||A||^2 < 1` for convergence;
/// the caller is responsible for the step sizes (see [`GapContext::new`]).
pub fn cppda_step(
    state: &mut CppdaState,
    a: &SparseMatrix,
    y: &DenseVector,
    prox: &dyn ProxOperator,
    sigma: f64,
    tau: f64,
) -> Result<()> {
    if !(sigma > 0.0 && tau > 0.0) {
        return Err(Error::InvalidParameter(
            "cppda_step needs positive step sizes".into(),
        ));
    }
    let grad_term = a.spmv_t(&state.z_bar)?;
    let z_point = state.x.add_scaled(-sigma, &grad_term);
    let metric = DiagonalOperator::uniform(state.x.len(), 1.0 / sigma)?;
    let x_new = prox.apply(&z_point, &metric, &state.x)?;
    let ax = a.spmv(&x_new)?;
    let z_new = state
        .z
        .add_scaled(tau, &ax.sub(y))
        .scale(1.0 / (1.0 + tau));
    let z_bar_new = z_new.scale(2.0).sub(&state.z);
    state.x = x_new;
    state.z = z_new;
    state.z_bar = z_bar_new;
    Ok(())
}

/// Saddle-point data for gap evaluation: the optimal pair, the starting
/// pair, the step parameters, and the operator-norm bound they must satisfy.
#[derive(Clone, Debug)]
pub struct GapContext {
    pub x_hat: DenseVector,
    pub z_hat: DenseVector,
    pub x0: DenseVector,
    pub z0: DenseVector,
    pub sigma: f64,
    pub tau: f64,
    /// `||A||^2` (or a tight upper estimate of it).
    pub op_norm_sq: f64,
}

impl GapContext {
    pub fn new(
        x_hat: DenseVector,
        z_hat: DenseVector,
        x0: DenseVector,
        z0: DenseVector,
        sigma: f64,
        tau: f64,
        op_norm_sq: f64,
    ) -> Result<Self> {
        if !(sigma > 0.0 && tau > 0.0) {
            return Err(Error::InvalidParameter(
                "gap context needs positive step sizes".into(),
            ));
        }
        let prod = sigma * tau * op_norm_sq;
        if !(prod < 1.0) {
            return Err(Error::StepSizeCondition { value: prod });
        }
        Ok(GapContext {
            x_hat,
            z_hat,
            x0,
            z0,
            sigma,
            tau,
            op_norm_sq,
        })
    }
}

/// Saddle function `Omega(z, x) = <-A'z, x> + g*(z) - h(x)` with
/// `g*(z) = 0.5 ||z||^2 + <z, y>`.
fn omega(
    z: &DenseVector,
    x: &DenseVector,
    a: &SparseMatrix,
    y: &DenseVector,
    h: &dyn Fn(&DenseVector) -> f64,
) -> Result<f64> {
    let atz = a.spmv_t(z)?;
    Ok(-atz.dot(x) + 0.5 * z.dot(z) + z.dot(y) - h(x))
}

/// Primal-dual gap `Omega(z_k, x_hat) - Omega(z_hat, x_k)` of (typically
/// averaged) iterates. Non-negative up to numerical noise for any pair when
/// `(z_hat, x_hat)` is a saddle point. Errors if `h(x_hat)` is infinite.
pub fn primal_dual_gap(
    z_avg: &DenseVector,
    x_avg: &DenseVector,
    ctx: &GapContext,
    a: &SparseMatrix,
    y: &DenseVector,
    h: &dyn Fn(&DenseVector) -> f64,
) -> Result<f64> {
    if !h(&ctx.x_hat).is_finite() {
        return Err(Error::InfeasibleReference);
    }
    let lhs = omega(z_avg, &ctx.x_hat, a, y, h)?;
    let rhs = omega(&ctx.z_hat, x_avg, a, y, h)?;
    Ok(lhs - rhs)
}

/// Gap bound after `k` updates with inexact x-updates of energies
/// `eps_sequence`:
///
/// ```text
/// (C + 2 A_k + sqrt(B_k))^2 / k
/// C   = ||x0 - x_hat|| / sqrt(2 sigma) + ||z0 - z_hat|| / sqrt(2 tau)
/// A_k = sum_{j=1..k} sqrt(eps_{j-1} / ((1 - sigma tau ||A||^2) sigma))
/// B_k = sum_{j=1..k} eps_{j-1}
/// ```
///
/// With exact updates the bound collapses to `C^2 / k`.
pub fn theorem2_bound(k: usize, ctx: &GapContext, eps_sequence: &[f64]) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidParameter("bound needs k >= 1".into()));
    }
    if eps_sequence.len() < k {
        return Err(Error::InvalidParameter(format!(
            "need at least {k} error entries, got {}",
            eps_sequence.len()
        )));
    }
    if eps_sequence.iter().take(k).any(|&e| e < 0.0) {
        return Err(Error::InvalidParameter(
            "error sequence must be non-negative".into(),
        ));
    }
    let d = 1.0 - ctx.sigma * ctx.tau * ctx.op_norm_sq;
    if !(d > 0.0) {
        return Err(Error::StepSizeCondition {
            value: ctx.sigma * ctx.tau * ctx.op_norm_sq,
        });
    }
    let c = ctx.x0.sub(&ctx.x_hat).norm() / (2.0 * ctx.sigma).sqrt()
        + ctx.z0.sub(&ctx.z_hat).norm() / (2.0 * ctx.tau).sqrt();
    let mut a_k = 0.0;
    let mut b_k = 0.0;
    for &e in eps_sequence.iter().take(k) {
        a_k += (e / (d * ctx.sigma)).sqrt();
        b_k += e;
    }
    Ok((c + 2.0 * a_k + b_k.sqrt()).powi(2) / k as f64)
}

/// Measured inter-restart intervals of a continuation run against the
/// half-oscillation heuristic `(pi/2) sqrt(L/mu)`.
#[derive(Clone, Debug)]
pub struct RestartReport {
    pub intervals: Vec<usize>,
    pub mean_interval: f64,
    pub predicted: f64,
    /// `|mean - predicted| / predicted`
    pub relative_deviation: f64,
}

pub fn restart_period_check(log: &ConvergenceLog, mu: f64, l: f64) -> Result<RestartReport> {
    if !(mu > 0.0 && l >= mu) {
        return Err(Error::InvalidParameter(
            "restart_period_check needs 0 < mu <= L".into(),
        ));
    }
    let restarts = log.restart_updates();
    if restarts.len() < 2 {
        return Err(Error::TooFewRestarts);
    }
    let intervals: Vec<usize> = restarts.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = intervals.iter().sum::<usize>() as f64 / intervals.len() as f64;
    let predicted = std::f64::consts::FRAC_PI_2 * (l / mu).sqrt();
    Ok(RestartReport {
        mean_interval: mean,
        predicted,
        relative_deviation: (mean - predicted).abs() / predicted,
        intervals,
    })
}

/// Dense linear solve by Gaussian elimination with partial pivoting.
///
/// Small-problem utility for constructing exact quadratic optima that the
/// iterative paths are checked against; independent of every solver above.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<DenseVector> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::dim("solve_dense", n, a.len()));
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::InvalidParameter("singular dense system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    DenseVector::new(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;
    use crate::solvers::{FullLalmSolver, IdentityProx};

    #[test]
    fn damping_critical_example() {
        // lambda/L = 0.5: rho_c = 1; at rho = 1 critical with rate 0.5
        let r = classify_damping(0.5, 1.0).unwrap();
        assert_eq!(r.regime, DampingRegime::Critical);
        assert!((r.rate - 0.5).abs() < 1e-12);
        assert!((r.modulus - 0.5).abs() < 1e-12);
    }

    #[test]
    fn damping_over_example() {
        // lambda/L = 0.25, rho = 1 > rho_c ~ 0.866: dominant root 0.75
        let r = classify_damping(0.25, 1.0).unwrap();
        assert_eq!(r.regime, DampingRegime::Over);
        assert!((r.rate - 0.75).abs() < 1e-12);
        assert!(r.damped_frequency.is_none());
    }

    #[test]
    fn damping_under_example() {
        // lambda/L = 0.25, rho = 0.2 < rho_c: real part (0.75 + 0.1)/1.2
        let r = classify_damping(0.25, 0.2).unwrap();
        assert_eq!(r.regime, DampingRegime::Under);
        assert!((r.rate - 0.85 / 1.2).abs() < 1e-12);
        assert!((r.modulus - (0.75_f64 / 1.2).sqrt()).abs() < 1e-12);
        let psi = r.damped_frequency.unwrap();
        let expect = ((0.85) / (1.2_f64 * 0.75).sqrt()).acos();
        assert!((psi - expect).abs() < 1e-12);
    }

    #[test]
    fn damping_degenerate_unit_ratio() {
        let r = classify_damping(1.0, 0.5).unwrap();
        assert_eq!(r.regime, DampingRegime::Over);
        assert!((r.rate - 0.5 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn damping_boundary_identities() {
        for lr in [0.1, 0.2, 0.36, 0.5, 0.7, 0.9] {
            let rc = critical_rho(lr);
            let r_c = rate_critical(lr);
            assert!((rate_over(lr, rc) - r_c).abs() <= 1e-12, "over at rho_c, lr = {lr}");
            assert!((rate_under(lr, rc) - r_c).abs() <= 1e-12, "under at rho_c, lr = {lr}");
        }
    }

    #[test]
    fn damping_monotonicity() {
        // r_over non-decreasing in rho on [rho_c, 1]
        for lr in [0.1, 0.3, 0.5, 0.8] {
            let rc = critical_rho(lr);
            let mut prev = 0.0;
            for i in 0..=100 {
                let rho = rc + (1.0 - rc) * i as f64 / 100.0;
                let r = rate_over(lr, rho.min(1.0));
                assert!(r >= prev - 1e-13, "lr {lr} rho {rho}");
                prev = r;
            }
        }
        // r_under: non-increasing in rho when lambda/L < 1/2, non-decreasing
        // when lambda/L > 1/2
        for (lr, increasing) in [(0.25, false), (0.75, true)] {
            let rc = critical_rho(lr);
            let mut prev = rate_under(lr, rc * 1e-3);
            for i in 1..=100 {
                let rho = rc * i as f64 / 100.0;
                let r = rate_under(lr, rho);
                if increasing {
                    assert!(r >= prev - 1e-13);
                } else {
                    assert!(r <= prev + 1e-13);
                }
                prev = r;
            }
        }
    }

    #[test]
    fn rho_star_examples() {
        assert!((rho_star(0.5, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(rho_star(1e-9, 1.0).unwrap() < 1e-4);
        assert_eq!(rho_star(1.0, 1.0).unwrap(), 0.0);
        // always within (0, 1]
        for i in 1..=100 {
            let mu = i as f64 / 100.0;
            let v = rho_star(mu, 1.0).unwrap();
            assert!(v <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn rho_opt_examples() {
        // A orthonormal (identity), L = 1: ratio 1 for any direction
        let a = SparseMatrix::identity(3);
        let x0 = DenseVector::new(vec![1.0, -2.0, 0.5]).unwrap();
        let x_hat = DenseVector::zeros(3);
        let v = rho_opt(&x0, &x_hat, &a, 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);

        // direction in the null space of A
        let a0 = SparseMatrix::from_rows(2, vec![vec![(0, 1.0)]]).unwrap();
        let d = DenseVector::new(vec![0.0, 3.0]).unwrap();
        assert_eq!(rho_opt(&d, &DenseVector::zeros(2), &a0, 2.0).unwrap(), 0.0);

        // top eigenvector of A'A with eigenvalue exactly L gives 1
        let a2 = SparseMatrix::from_rows(2, vec![vec![(0, 3.0)], vec![(1, 1.0)]]).unwrap();
        let top = DenseVector::new(vec![2.0, 0.0]).unwrap();
        let v2 = rho_opt(&top, &DenseVector::zeros(2), &a2, 9.0).unwrap();
        assert!((v2 - 1.0).abs() < 1e-15);

        assert!(rho_opt(&x_hat, &x_hat, &a, 1.0).is_err());
    }

    #[test]
    fn penalty_parameters_stay_within_unit_interval_on_random_instances() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for trial in 0..25 {
            let (rows, cols) = (rng.random_range(2..12), rng.random_range(2..10));
            let mut data = Vec::new();
            for _ in 0..rows {
                let mut row = Vec::new();
                for c in 0..cols {
                    if rng.random::<f64>() < 0.5 {
                        row.push((c, rng.random::<f64>() * 2.0 - 1.0));
                    }
                }
                data.push(row);
            }
            let a = SparseMatrix::from_rows(cols, data).unwrap();
            let w = DiagonalOperator::identity(rows);
            let l = match crate::linalg::spectral_bound(&a, &w, 5000, 1e-12) {
                Ok(l) if l > 0.0 => l,
                _ => continue,
            };
            let x0 =
                DenseVector::from_raw((0..cols).map(|_| rng.random::<f64>() - 0.5).collect());
            let x_hat = DenseVector::zeros(cols);
            if x0.sub(&x_hat).norm() == 0.0 {
                continue;
            }
            let v = rho_opt(&x0, &x_hat, &a, l).unwrap();
            assert!(v <= 1.0 + 1e-12, "trial {trial}: rho_opt {v} > 1");
            let mu = rng.random::<f64>() * l;
            if mu > 0.0 {
                let s = rho_star(mu, l).unwrap();
                assert!(s <= 1.0 + 1e-15, "trial {trial}: rho_star {s} > 1");
            }
        }
    }

    #[test]
    fn recurrence_sim_examples() {
        // zero start stays zero
        let xs = scalar_recurrence_sim(0.3, 0.4, 50, 0.0, 0.0).unwrap();
        assert!(xs.iter().all(|&v| v == 0.0));

        // lambda/L = 1, rho = 1: geometric decay to zero
        let xs = scalar_recurrence_sim(1.0, 1.0, 60, 1.0, 1.0).unwrap();
        assert!(xs.last().unwrap().abs() < 1e-12);

        // measured rate matches the analytic modulus in all three regimes
        for (lr, rho) in [(0.25, 1.0), (0.5, 1.0), (0.25, 0.2), (0.8, 0.3)] {
            let rep = classify_damping(lr, rho).unwrap();
            let steps = (120.0 / (-rep.modulus.log10()).max(1e-9))
                .clamp(200.0, 4000.0) as usize;
            // generic start excites both modes
            let xs = scalar_recurrence_sim(lr, rho, steps, 1.0, 0.3 * lr + 0.1).unwrap();
            let measured = measure_asymptotic_rate(&xs).unwrap();
            assert!(
                (measured - rep.modulus).abs() <= 1e-3,
                "({lr}, {rho}): measured {measured} vs modulus {}",
                rep.modulus
            );
        }
    }

    #[test]
    fn cppda_overrelaxation_line() {
        let a = SparseMatrix::identity(2);
        let y = DenseVector::new(vec![0.5, -0.5]).unwrap();
        let mut st = CppdaState::init(
            DenseVector::new(vec![1.0, 2.0]).unwrap(),
            DenseVector::new(vec![0.3, -0.1]).unwrap(),
        );
        let z_prev = st.z.clone();
        cppda_step(&mut st, &a, &y, &IdentityProx, 0.4, 0.5).unwrap();
        let expect = st.z.scale(2.0).sub(&z_prev);
        assert_eq!(st.z_bar, expect);
    }

    #[test]
    fn cppda_zero_operator_decouples() {
        // A = 0: x-update is the prox at x (unchanged for h = 0), z-update a
        // plain average toward -y
        let a = SparseMatrix::from_rows(2, vec![vec![], vec![]]).unwrap();
        let y = DenseVector::new(vec![1.0, 1.0]).unwrap();
        let mut st = CppdaState::init(
            DenseVector::new(vec![0.7, -0.7]).unwrap(),
            DenseVector::zeros(2),
        );
        let x_before = st.x.clone();
        cppda_step(&mut st, &a, &y, &IdentityProx, 0.3, 0.6).unwrap();
        assert_eq!(st.x, x_before);
        // z = (0 + 0.6 (0 - y)) / 1.6
        assert!((st.z[0] - (-0.6 / 1.6)).abs() < 1e-15);
    }

    #[test]
    fn cppda_matches_full_lalm_on_toy_problem() {
        // 2D quadratic, h = 0, scalar majorizer
        let a = SparseMatrix::from_rows(2, vec![vec![(0, 1.0), (1, 0.5)], vec![(1, 1.5)]])
            .unwrap();
        let w = DiagonalOperator::identity(2);
        let y = DenseVector::new(vec![1.0, -2.0]).unwrap();
        let l = crate::linalg::spectral_bound(&a, &w, 5000, 1e-13).unwrap();
        let t = 1.0 / l;
        let rho = 0.3;
        let x0 = DenseVector::new(vec![0.2, -0.1]).unwrap();

        let solver = FullLalmSolver::new(&a, &w, &y).unwrap();
        let mut full = solver.init_state(x0.clone(), rho).unwrap();
        let metric = DiagonalOperator::uniform(2, l).unwrap();

        // mapped initialization: z0 = -rho d0
        let mut pd = CppdaState::init(x0, full.d.scale(-rho));
        for k in 0..100 {
            solver.step(&mut full, &metric, rho, &IdentityProx).unwrap();
            cppda_step(&mut pd, &a, &y, &IdentityProx, t / rho, rho).unwrap();
            let dx = full.x.sub(&pd.x).norm_inf();
            assert!(dx <= 1e-10, "step {k}: |dx| = {dx}");
            let dz = pd.z.sub(&full.d.scale(-rho)).norm_inf();
            assert!(dz <= 1e-10, "step {k}: |dz| = {dz}");
        }
    }

    #[test]
    fn gap_zero_at_saddle_point_and_nonnegative() {
        let a = SparseMatrix::from_rows(2, vec![vec![(0, 2.0)], vec![(0, 1.0), (1, 1.0)]])
            .unwrap();
        let y = DenseVector::new(vec![1.0, 0.5]).unwrap();
        // x_hat from dense normal equations, z_hat = A x_hat - y
        let ata = vec![vec![5.0, 1.0], vec![1.0, 1.0]];
        let aty = vec![2.0 * 1.0 + 1.0 * 0.5, 0.5];
        let x_hat = solve_dense(ata, aty).unwrap();
        let z_hat = a.spmv(&x_hat).unwrap().sub(&y);
        let h = |_: &DenseVector| 0.0;
        let ctx = GapContext::new(
            x_hat.clone(),
            z_hat.clone(),
            DenseVector::zeros(2),
            DenseVector::zeros(2),
            0.1,
            0.5,
            6.0,
        )
        .unwrap();
        let at_saddle = primal_dual_gap(&z_hat, &x_hat, &ctx, &a, &y, &h).unwrap();
        assert!(at_saddle.abs() <= 1e-12);
        let off = primal_dual_gap(
            &DenseVector::new(vec![0.3, -0.2]).unwrap(),
            &DenseVector::new(vec![1.0, 1.0]).unwrap(),
            &ctx,
            &a,
            &y,
            &h,
        )
        .unwrap();
        assert!(off >= -1e-9);
    }

    #[test]
    fn gap_infeasible_reference_errors() {
        let a = SparseMatrix::identity(1);
        let y = DenseVector::zeros(1);
        let ctx = GapContext::new(
            DenseVector::new(vec![-1.0]).unwrap(),
            DenseVector::zeros(1),
            DenseVector::zeros(1),
            DenseVector::zeros(1),
            0.2,
            0.2,
            1.0,
        )
        .unwrap();
        let h = |x: &DenseVector| if x[0] < 0.0 { f64::INFINITY } else { 0.0 };
        assert!(matches!(
            primal_dual_gap(&y, &y, &ctx, &a, &y, &h),
            Err(Error::InfeasibleReference)
        ));
    }

    #[test]
    fn theorem2_bound_specializations() {
        let ctx = GapContext::new(
            DenseVector::new(vec![1.0, 0.0]).unwrap(),
            DenseVector::new(vec![0.0, 1.0]).unwrap(),
            DenseVector::zeros(2),
            DenseVector::zeros(2),
            0.25,
            0.5,
            2.0,
        )
        .unwrap();
        // eps = 0: bound is exactly C^2 / k
        let c = 1.0 / (2.0_f64 * 0.25).sqrt() + 1.0 / (2.0_f64 * 0.5).sqrt();
        let eps = vec![0.0; 10];
        for k in 1..=10 {
            let b = theorem2_bound(k, &ctx, &eps).unwrap();
            assert!((b - c * c / k as f64).abs() <= 1e-12);
        }
        // doubling eps scales A_k by sqrt(2) and B_k by 2
        let e1 = vec![0.01; 5];
        let e2 = vec![0.02; 5];
        let d: f64 = 1.0 - 0.25 * 0.5 * 2.0;
        let a1: f64 = (0..5).map(|_| (0.01_f64 / (d * 0.25)).sqrt()).sum();
        let b1: f64 = 0.05;
        let expect1 = (c + 2.0 * a1 + b1.sqrt()).powi(2) / 5.0;
        let got1 = theorem2_bound(5, &ctx, &e1).unwrap();
        assert!((got1 - expect1).abs() <= 1e-12);
        let a2 = a1 * 2.0_f64.sqrt();
        let b2 = 2.0 * b1;
        let expect2 = (c + 2.0 * a2 + b2.sqrt()).powi(2) / 5.0;
        let got2 = theorem2_bound(5, &ctx, &e2).unwrap();
        assert!((got2 - expect2).abs() <= 1e-12);
    }

    #[test]
    fn step_size_condition_enforced() {
        assert!(matches!(
            GapContext::new(
                DenseVector::zeros(1),
                DenseVector::zeros(1),
                DenseVector::zeros(1),
                DenseVector::zeros(1),
                1.0,
                1.0,
                2.0,
            ),
            Err(Error::StepSizeCondition { .. })
        ));
    }

    #[test]
    fn restart_check_requires_two_restarts() {
        use crate::solvers::LogRow;
        let mut log = ConvergenceLog::new();
        for i in 0..5 {
            log.push(LogRow {
                epoch: i,
                inner: 0,
                rho: 1.0,
                restarted: i == 2,
                objective: 0.0,
                rmsd: 0.0,
                seconds: i as f64,
            });
        }
        assert!(matches!(
            restart_period_check(&log, 0.01, 1.0),
            Err(Error::TooFewRestarts)
        ));
    }

    #[test]
    fn restart_check_reports_intervals() {
        use crate::solvers::LogRow;
        let mut log = ConvergenceLog::new();
        // initial row + 40 updates with restarts at update indices 4, 19, 35
        log.push(LogRow {
            epoch: 0,
            inner: 0,
            rho: 1.0,
            restarted: false,
            objective: 0.0,
            rmsd: 0.0,
            seconds: 0.0,
        });
        for i in 0..40 {
            log.push(LogRow {
                epoch: 1,
                inner: i,
                rho: 1.0,
                restarted: matches!(i, 4 | 19 | 35),
                objective: 0.0,
                rmsd: 0.0,
                seconds: (i + 1) as f64,
            });
        }
        let rep = restart_period_check(&log, 0.01, 1.0).unwrap();
        assert_eq!(rep.intervals, vec![15, 16]);
        assert!((rep.mean_interval - 15.5).abs() < 1e-12);
        assert!((rep.predicted - 15.707963).abs() < 1e-5);
    }

    #[test]
    fn dense_solver_inverts_small_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let b = vec![5.0, 10.0];
        let x = solve_dense(a, b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }
}
