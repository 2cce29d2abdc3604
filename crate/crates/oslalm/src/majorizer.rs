//! Majorizers of the quadratic penalty `x -> ||Ax||^2_W`: a scalar spectral
//! bound, the separable diagonal `diag(A'WA1)`, the secant-fit rescaling of
//! that diagonal, and a sampled dominance checker.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    top_eigenvector, weighted_norm_sq, DenseVector, DiagonalOperator, SparseMatrix,
};

/// Lower clip for the secant scaling factor, guarding against step blow-ups
/// when the secant pair is nearly orthogonal.
pub const BB_ALPHA_MIN: f64 = 1e-6;

/// A majorizer of `A'WA` used as the metric of the proximal x-update.
#[derive(Clone, Debug)]
pub enum Majorizer {
    /// `L I` with `L > lambda_max(A'WA)`.
    Scalar(f64),
    /// Separable quadratic surrogate diagonal `diag(A'WA1)`.
    Diagonal(DiagonalOperator),
    /// `alpha * L_diag` with the secant-fit `alpha` in `(0, 1]`; tightens the
    /// diagonal toward the true Hessian but voids the majorization
    /// guarantee, so it is opt-in.
    BbScaledDiagonal {
        l_diag: DiagonalOperator,
        alpha: f64,
    },
}

impl Majorizer {
    /// Materialize as a diagonal metric of dimension `n` (alpha applied).
    pub fn metric(&self, n: usize) -> Result<DiagonalOperator> {
        match self {
            Majorizer::Scalar(l) => {
                if !(*l > 0.0) {
                    return Err(Error::InvalidParameter(
                        "scalar majorizer must be positive".into(),
                    ));
                }
                DiagonalOperator::uniform(n, *l)
            }
            Majorizer::Diagonal(d) => {
                if d.len() != n {
                    return Err(Error::dim("Majorizer::metric", n, d.len()));
                }
                Ok(d.clone())
            }
            Majorizer::BbScaledDiagonal { l_diag, alpha } => {
                if l_diag.len() != n {
                    return Err(Error::dim("Majorizer::metric", n, l_diag.len()));
                }
                l_diag.scale(*alpha)
            }
        }
    }

    pub fn diagonal_part(&self) -> Option<&DiagonalOperator> {
        match self {
            Majorizer::Scalar(_) => None,
            Majorizer::Diagonal(d) => Some(d),
            Majorizer::BbScaledDiagonal { l_diag, .. } => Some(l_diag),
        }
    }
}

/// `diag(A'W(A 1))` with zero entries floored to the smallest positive entry.
///
/// The flooring keeps induced per-pixel step sizes finite for pixels outside
/// every ray.
pub fn compute_ldiag(a: &SparseMatrix, w: &DiagonalOperator) -> Result<DiagonalOperator> {
    if w.len() != a.rows() {
        return Err(Error::dim("compute_ldiag", a.rows(), w.len()));
    }
    let ones = DenseVector::ones(a.cols());
    let d = a.spmv_t(&w.apply(&a.spmv(&ones)?)?)?;
    let min_positive = d
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !min_positive.is_finite() {
        return Err(Error::InvalidParameter(
            "A'WA1 has no positive entries; majorizer undefined".into(),
        ));
    }
    let floored =
        DenseVector::from_fn(d.len(), |i| if d[i] > 0.0 { d[i] } else { min_positive })?;
    DiagonalOperator::new(floored)
}

/// Secant scaling factor `alpha* = (s'y) / (s' L_diag s)`, the closed form of
/// the least-squares fit of `y ~ alpha L_diag s` weighted by `L_diag^{-1}`,
/// clipped to `(BB_ALPHA_MIN, 1]`.
pub fn bb_scale(l_diag: &DiagonalOperator, s_k: &DenseVector, y_k: &DenseVector) -> Result<f64> {
    if s_k.len() != l_diag.len() {
        return Err(Error::dim("bb_scale", l_diag.len(), s_k.len()));
    }
    if y_k.len() != s_k.len() {
        return Err(Error::dim("bb_scale", s_k.len(), y_k.len()));
    }
    let denom = s_k.dot(&l_diag.apply(s_k)?);
    if denom == 0.0 {
        return Err(Error::DegenerateSecant);
    }
    let alpha = s_k.dot(y_k) / denom;
    Ok(alpha.clamp(BB_ALPHA_MIN, 1.0))
}

/// Result of a sampled majorization check.
#[derive(Clone, Debug)]
pub struct MajorizationReport {
    pub samples: usize,
    /// Smallest observed `||v||^2_M - ||Av||^2_W` over unit-norm probes.
    pub worst_margin: f64,
    pub passed: bool,
}

/// Margin below which the check is considered violated.
pub const MAJORIZATION_TOLERANCE: f64 = -1e-10;

/// Probe `||A v||^2_W <= ||v||^2_M` on `samples` random unit directions plus
/// one deterministic witness (the estimated top eigenvector of `A'WA`, which
/// makes undersized scalar majorizers fail reliably).
pub fn majorization_check(
    a: &SparseMatrix,
    w: &DiagonalOperator,
    majorizer: &Majorizer,
    samples: usize,
    seed: u64,
) -> Result<MajorizationReport> {
    if samples < 1 {
        return Err(Error::InvalidParameter(
            "majorization_check needs samples >= 1".into(),
        ));
    }
    let n = a.cols();
    let metric = majorizer.metric(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;

    let mut probe = |v: &DenseVector| -> Result<()> {
        let nv = v.norm();
        if nv == 0.0 {
            return Ok(());
        }
        let u = v.scale(1.0 / nv);
        let lhs = weighted_norm_sq(&a.spmv(&u)?, w)?;
        let rhs = weighted_norm_sq(&u, &metric)?;
        let margin = rhs - lhs;
        if margin < worst {
            worst = margin;
        }
        Ok(())
    };

    probe(&top_eigenvector(a, w, 200)?)?;
    for _ in 0..samples {
        let v = DenseVector::from_fn(n, |_| rng.random::<f64>() * 2.0 - 1.0)?;
        probe(&v)?;
    }
    Ok(MajorizationReport {
        samples,
        worst_margin: worst,
        passed: worst >= MAJORIZATION_TOLERANCE,
    })
}
