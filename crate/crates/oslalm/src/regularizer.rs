//! Edge-preserving finite-difference regularizer over horizontal and
//! vertical neighbor pairs, its exact gradient, a diagonal curvature
//! majorizer, and the box projection.

use crate::ct::ImageGrid;
use crate::error::{Error, Result};
use crate::linalg::{DenseVector, DiagonalOperator};

/// Pairwise potential applied to neighbor differences.
///
/// Both choices have `psi''(t) <= 1`, which the curvature majorizer relies on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Potential {
    /// `psi(t) = t^2 / 2`
    Quadratic,
    /// Fair potential `psi(t) = delta^2 (|t|/delta - ln(1 + |t|/delta))`:
    /// quadratic near zero, linear in the tails, smooth everywhere.
    Fair { delta: f64 },
}

impl Potential {
    pub fn fair(delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(
                "Fair potential needs delta > 0".into(),
            ));
        }
        Ok(Potential::Fair { delta })
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Potential::Quadratic => 0.5 * t * t,
            Potential::Fair { delta } => {
                let a = t.abs() / delta;
                delta * delta * (a - a.ln_1p())
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Potential::Quadratic => t,
            Potential::Fair { delta } => t / (1.0 + t.abs() / delta),
        }
    }

    /// Upper bound on `psi''` over the whole line.
    pub fn max_curvature(&self) -> f64 {
        1.0
    }
}

/// Regularizer parameters: strength `beta`, 4-neighbor 2D differences, and
/// the pairwise potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizerConfig {
    pub beta: f64,
    pub potential: Potential,
}

impl RegularizerConfig {
    pub fn new(beta: f64, potential: Potential) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidParameter(
                "beta must be finite and >= 0".into(),
            ));
        }
        Ok(RegularizerConfig { beta, potential })
    }

    pub fn off() -> Self {
        RegularizerConfig {
            beta: 0.0,
            potential: Potential::Quadratic,
        }
    }
}

/// Elementwise box `[lo, hi]`; either bound may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxConstraint {
    lo: f64,
    hi: f64,
}

impl BoxConstraint {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidParameter(format!(
                "box bounds require lo <= hi, got [{lo}, {hi}]"
            )));
        }
        Ok(BoxConstraint { lo, hi })
    }

    /// The usual non-negativity constraint `[0, +inf)`.
    pub fn nonnegative() -> Self {
        BoxConstraint {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn unbounded() -> Self {
        BoxConstraint {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: &DenseVector) -> bool {
        x.iter().all(|&v| v >= self.lo && v <= self.hi)
    }

    pub fn clamp_scalar(&self, v: f64) -> f64 {
        v.max(self.lo).min(self.hi)
    }
}

/// Elementwise clamp of `x` to the box. Idempotent.
pub fn project_box(b: &BoxConstraint, x: &DenseVector) -> DenseVector {
    DenseVector::from_fn(x.len(), |i| b.clamp_scalar(x[i]))
        .expect("clamp of finite values is finite")
}

fn check_image(grid: &ImageGrid, x: &DenseVector) -> Result<()> {
    if x.len() != grid.n_pixels() {
        return Err(Error::dim("regularizer image", grid.n_pixels(), x.len()));
    }
    Ok(())
}

/// `beta * sum over horizontal+vertical neighbor pairs of psi(x_j - x_k)`.
pub fn reg_value(cfg: &RegularizerConfig, grid: &ImageGrid, x: &DenseVector) -> Result<f64> {
    check_image(grid, x)?;
    if cfg.beta == 0.0 {
        return Ok(0.0);
    }
    let (nx, ny) = (grid.nx, grid.ny);
    let xs = x.as_slice();
    let mut acc = 0.0;
    for iy in 0..ny {
        for ix in 0..nx {
            let j = iy * nx + ix;
            if ix + 1 < nx {
                acc += cfg.potential.value(xs[j + 1] - xs[j]);
            }
            if iy + 1 < ny {
                acc += cfg.potential.value(xs[j + nx] - xs[j]);
            }
        }
    }
    Ok(cfg.beta * acc)
}

/// Exact analytic gradient of [`reg_value`].
pub fn reg_gradient(
    cfg: &RegularizerConfig,
    grid: &ImageGrid,
    x: &DenseVector,
) -> Result<DenseVector> {
    check_image(grid, x)?;
    let (nx, ny) = (grid.nx, grid.ny);
    let mut g = vec![0.0; x.len()];
    if cfg.beta == 0.0 {
        return Ok(DenseVector::new(g)?);
    }
    let xs = x.as_slice();
    for iy in 0..ny {
        for ix in 0..nx {
            let j = iy * nx + ix;
            if ix + 1 < nx {
                let d = cfg.potential.derivative(xs[j + 1] - xs[j]);
                g[j + 1] += d;
                g[j] -= d;
            }
            if iy + 1 < ny {
                let d = cfg.potential.derivative(xs[j + nx] - xs[j]);
                g[j + nx] += d;
                g[j] -= d;
            }
        }
    }
    for v in &mut g {
        *v *= cfg.beta;
    }
    Ok(DenseVector::new(g)?)
}

/// Diagonal curvature majorizer `2 * beta * (#neighbors of pixel) * max psi''`.
///
/// Gershgorin row-sum bound on the regularizer Hessian: each pair `(j,k)`
/// contributes at most `psi''` to the diagonal and `psi''` in magnitude off
/// the diagonal of both touched rows, so the row sum is bounded by
/// `2 * beta * #neighbors`.
pub fn reg_curvature_diag(cfg: &RegularizerConfig, grid: &ImageGrid) -> DiagonalOperator {
    let (nx, ny) = (grid.nx, grid.ny);
    let cap = cfg.potential.max_curvature();
    let mut d = vec![0.0; grid.n_pixels()];
    for iy in 0..ny {
        for ix in 0..nx {
            let mut neighbors = 0.0;
            if ix > 0 {
                neighbors += 1.0;
            }
            if ix + 1 < nx {
                neighbors += 1.0;
            }
            if iy > 0 {
                neighbors += 1.0;
            }
            if iy + 1 < ny {
                neighbors += 1.0;
            }
            d[iy * nx + ix] = 2.0 * cfg.beta * neighbors * cap;
        }
    }
    DiagonalOperator::new(DenseVector::from_raw(d)).expect("curvature is non-negative")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quad(beta: f64) -> RegularizerConfig {
        RegularizerConfig::new(beta, Potential::Quadratic).unwrap()
    }

    fn fair(beta: f64, delta: f64) -> RegularizerConfig {
        RegularizerConfig::new(beta, Potential::fair(delta).unwrap()).unwrap()
    }

    #[test]
    fn value_constant_image_is_zero() {
        let grid = ImageGrid::new(5, 4, 1.0, 2.0).unwrap();
        let x = DenseVector::constant(20, 3.7).unwrap();
        assert_eq!(reg_value(&quad(2.0), &grid, &x).unwrap(), 0.0);
        assert_eq!(reg_value(&fair(2.0, 0.1), &grid, &x).unwrap(), 0.0);
    }

    #[test]
    fn value_single_pair_quadratic() {
        let grid = ImageGrid::new(2, 1, 1.0, 0.5).unwrap();
        let (a, b, beta) = (1.5, -0.5, 3.0);
        let x = DenseVector::new(vec![a, b]).unwrap();
        let v = reg_value(&quad(beta), &grid, &x).unwrap();
        assert!((v - beta * (a - b) * (a - b) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn fair_approaches_quadratic_for_large_delta() {
        let grid = ImageGrid::new(6, 6, 1.0, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = DenseVector::from_fn(36, |_| rng.random::<f64>()).unwrap();
        let max_diff = 1.0; // random values in [0,1)
        let vq = reg_value(&quad(1.0), &grid, &x).unwrap();
        let vf = reg_value(&fair(1.0, 100.0 * max_diff), &grid, &x).unwrap();
        assert!((vf - vq).abs() <= 0.01 * vq, "fair {vf} vs quad {vq}");
    }

    #[test]
    fn gradient_constant_image_is_zero() {
        let grid = ImageGrid::new(4, 4, 1.0, 2.0).unwrap();
        let x = DenseVector::constant(16, -1.2).unwrap();
        let g = reg_gradient(&fair(2.5, 0.3), &grid, &x).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_single_pair_quadratic() {
        let grid = ImageGrid::new(2, 1, 1.0, 0.5).unwrap();
        let (a, b, beta) = (2.0, 0.5, 1.7);
        let x = DenseVector::new(vec![a, b]).unwrap();
        let g = reg_gradient(&quad(beta), &grid, &x).unwrap();
        assert!((g[0] - beta * (a - b)).abs() < 1e-15);
        assert!((g[1] - beta * (b - a)).abs() < 1e-15);
    }

    fn finite_difference_gradient(
        cfg: &RegularizerConfig,
        grid: &ImageGrid,
        x: &DenseVector,
    ) -> DenseVector {
        let h = 1e-6;
        DenseVector::from_fn(x.len(), |i| {
            let mut xp = x.as_slice().to_vec();
            let mut xm = xp.clone();
            xp[i] += h;
            xm[i] -= h;
            let vp = reg_value(cfg, grid, &DenseVector::new(xp).unwrap()).unwrap();
            let vm = reg_value(cfg, grid, &DenseVector::new(xm).unwrap()).unwrap();
            (vp - vm) / (2.0 * h)
        })
        .unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let grid = ImageGrid::new(8, 8, 1.0, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for cfg in [quad(1.3), fair(0.8, 0.05)] {
            let x = DenseVector::from_fn(64, |_| rng.random::<f64>() * 2.0 - 1.0).unwrap();
            let g = reg_gradient(&cfg, &grid, &x).unwrap();
            let fd = finite_difference_gradient(&cfg, &grid, &x);
            let scale = g.norm().max(1e-12);
            let err = g.sub(&fd).norm() / scale;
            assert!(err <= 1e-6, "relative FD error {err}");
        }
    }

    #[test]
    fn curvature_examples() {
        let grid = ImageGrid::new(4, 4, 1.0, 2.0).unwrap();
        let beta = 1.25;
        let d = reg_curvature_diag(&quad(beta), &grid);
        // interior pixel (1,1): 4 neighbors
        assert_eq!(d.diag()[1 * 4 + 1], 8.0 * beta);
        // corner (0,0): 2 neighbors, smaller than interior
        assert_eq!(d.diag()[0], 4.0 * beta);
        assert!(d.diag()[0] < d.diag()[5]);
        // beta = 0 gives zeros
        let z = reg_curvature_diag(&quad(0.0), &grid);
        assert!(z.diag().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn curvature_dominates_explicit_hessian() {
        // quadratic potential: Hessian is constant; form it explicitly on 4x4
        let grid = ImageGrid::new(4, 4, 1.0, 2.0).unwrap();
        let beta = 0.9;
        let cfg = quad(beta);
        let n = 16;
        let mut hess = vec![vec![0.0; n]; n];
        for iy in 0..4usize {
            for ix in 0..4usize {
                let j = iy * 4 + ix;
                let mut pairs = Vec::new();
                if ix + 1 < 4 {
                    pairs.push(j + 1);
                }
                if iy + 1 < 4 {
                    pairs.push(j + 4);
                }
                for k in pairs {
                    hess[j][j] += beta;
                    hess[k][k] += beta;
                    hess[j][k] -= beta;
                    hess[k][j] -= beta;
                }
            }
        }
        let d = reg_curvature_diag(&cfg, &grid);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let v = DenseVector::from_fn(n, |_| rng.random::<f64>() * 2.0 - 1.0).unwrap();
            let mut vhv = 0.0;
            for i in 0..n {
                for j in 0..n {
                    vhv += v[i] * hess[i][j] * v[j];
                }
            }
            let vdv: f64 = (0..n).map(|i| d.diag()[i] * v[i] * v[i]).sum();
            assert!(vhv <= vdv + 1e-12, "vHv {vhv} > vDv {vdv}");
        }
    }

    #[test]
    fn project_box_examples() {
        let b = BoxConstraint::new(0.0, f64::INFINITY).unwrap();
        let x = DenseVector::new(vec![-1.0, 2.0]).unwrap();
        let p = project_box(&b, &x);
        assert_eq!(p.as_slice(), &[0.0, 2.0]);
        // inside the box: unchanged
        let inside = DenseVector::new(vec![0.5, 1.0]).unwrap();
        assert_eq!(project_box(&b, &inside), inside);
        // idempotent
        assert_eq!(project_box(&b, &p), p);
    }

    #[test]
    fn box_rejects_inverted_bounds() {
        assert!(BoxConstraint::new(1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn convexity_probe(seed in 0u64..200, t in 0.0f64..1.0) {
            let grid = ImageGrid::new(5, 5, 1.0, 2.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = fair(1.1, 0.2);
            let x1 = DenseVector::from_fn(25, |_| rng.random::<f64>() * 4.0 - 2.0).unwrap();
            let x2 = DenseVector::from_fn(25, |_| rng.random::<f64>() * 4.0 - 2.0).unwrap();
            let mix = DenseVector::lin_comb(t, &x1, 1.0 - t, &x2);
            let lhs = reg_value(&cfg, &grid, &mix).unwrap();
            let rhs = t * reg_value(&cfg, &grid, &x1).unwrap()
                + (1.0 - t) * reg_value(&cfg, &grid, &x2).unwrap();
            prop_assert!(lhs <= rhs + 1e-9);
        }
    }
}
