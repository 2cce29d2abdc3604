//! Dense vectors, row-compressed sparse matrices, diagonal operators, and the
//! spectral tooling the solver stack builds on.
//!
//! Everything is `f64`; the convergence diagnostics downstream need more
//! headroom than `f32` offers. Types are immutable after construction and
//! safe to share across threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Multiplicative safety factor applied to the power-iteration estimate so
/// the returned bound strictly majorizes even with estimation error.
pub const SPECTRAL_SAFETY_FACTOR: f64 = 1.01;

/// A dense vector of finite 64-bit floats.
///
/// Constructors reject NaN/Inf; arithmetic on already-validated vectors is
/// unchecked.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseVector {
    values: Vec<f64>,
}

impl DenseVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("DenseVector::new"));
        }
        Ok(DenseVector { values })
    }

    pub fn zeros(n: usize) -> Self {
        DenseVector {
            values: vec![0.0; n],
        }
    }

    pub fn ones(n: usize) -> Self {
        DenseVector {
            values: vec![1.0; n],
        }
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        DenseVector::new(vec![c; n])
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> f64) -> Result<Self> {
        DenseVector::new((0..n).map(|i| f(i)).collect())
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        DenseVector { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.values.iter()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "dot: length mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, c: f64) -> Self {
        DenseVector::from_raw(self.values.iter().map(|v| c * v).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "add: length mismatch");
        DenseVector::from_raw(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "sub: length mismatch");
        DenseVector::from_raw(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// `self + c * other`
    pub fn add_scaled(&self, c: f64, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "add_scaled: length mismatch");
        DenseVector::from_raw(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        )
    }

    /// `a * x + b * y`
    pub fn lin_comb(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        assert_eq!(x.len(), y.len(), "lin_comb: length mismatch");
        DenseVector::from_raw(
            x.values
                .iter()
                .zip(&y.values)
                .map(|(xi, yi)| a * xi + b * yi)
                .collect(),
        )
    }
}

impl std::ops::Index<usize> for DenseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Row-compressed (CSR) sparse matrix.
///
/// Per-row column indices are strictly ascending and within `[0, cols)`.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != rows + 1 {
            return Err(Error::InvalidSparseStructure(format!(
                "row_ptr length {} != rows + 1 = {}",
                row_ptr.len(),
                rows + 1
            )));
        }
        if col_idx.len() != values.len() {
            return Err(Error::InvalidSparseStructure(format!(
                "col_idx length {} != values length {}",
                col_idx.len(),
                values.len()
            )));
        }
        if row_ptr[0] != 0 || row_ptr[rows] != col_idx.len() {
            return Err(Error::InvalidSparseStructure(
                "row_ptr endpoints inconsistent with index array".into(),
            ));
        }
        for r in 0..rows {
            let (lo, hi) = (row_ptr[r], row_ptr[r + 1]);
            if lo > hi {
                return Err(Error::InvalidSparseStructure(format!(
                    "row_ptr not monotone at row {r}"
                )));
            }
            for k in lo..hi {
                if col_idx[k] >= cols {
                    return Err(Error::InvalidSparseStructure(format!(
                        "column index {} out of range at row {r}",
                        col_idx[k]
                    )));
                }
                if k > lo && col_idx[k] <= col_idx[k - 1] {
                    return Err(Error::InvalidSparseStructure(format!(
                        "column indices not strictly ascending in row {r}"
                    )));
                }
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("SparseMatrix::new"));
        }
        Ok(SparseMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Build from per-row `(column, value)` lists; each row is sorted and
    /// duplicate columns within a row are summed.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n_rows = rows.len();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix::new(n_rows, cols, row_ptr, col_idx, values)
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// `A x`
    pub fn spmv(&self, x: &DenseVector) -> Result<DenseVector> {
        if x.len() != self.cols {
            return Err(Error::dim("spmv", self.cols, x.len()));
        }
        let xs = x.as_slice();
        let mut out = vec![0.0; self.rows];
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * xs[*c];
            }
            out[r] = acc;
        }
        Ok(DenseVector::from_raw(out))
    }

    /// `A' r` (back-projection)
    pub fn spmv_t(&self, r: &DenseVector) -> Result<DenseVector> {
        if r.len() != self.rows {
            return Err(Error::dim("spmv_t", self.rows, r.len()));
        }
        let rs = r.as_slice();
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let ri = rs[i];
            if ri == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                out[*c] += v * ri;
            }
        }
        Ok(DenseVector::from_raw(out))
    }

    /// Dot product of row `r` with `x`.
    pub fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(r);
        cols.iter().zip(vals).map(|(c, v)| v * x[*c]).sum()
    }

    /// Scatter `coef * row(r)` into `out`.
    pub fn row_axpy(&self, r: usize, coef: f64, out: &mut [f64]) {
        let (cols, vals) = self.row(r);
        for (c, v) in cols.iter().zip(vals) {
            out[*c] += coef * v;
        }
    }

    /// New matrix with row `i` multiplied by `scales[i]`.
    pub fn scale_rows(&self, scales: &DenseVector) -> Result<SparseMatrix> {
        if scales.len() != self.rows {
            return Err(Error::dim("scale_rows", self.rows, scales.len()));
        }
        let mut values = self.values.clone();
        for r in 0..self.rows {
            let s = scales[r];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                values[k] *= s;
            }
        }
        Ok(SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values,
        })
    }
}

/// Non-negative diagonal operator (statistical weights, SQS majorizers).
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalOperator {
    diag: DenseVector,
}

impl DiagonalOperator {
    pub fn new(diag: DenseVector) -> Result<Self> {
        if diag.iter().any(|&v| v < 0.0) {
            return Err(Error::NegativeDiagonal);
        }
        Ok(DiagonalOperator { diag })
    }

    pub fn identity(n: usize) -> Self {
        DiagonalOperator {
            diag: DenseVector::ones(n),
        }
    }

    pub fn uniform(n: usize, c: f64) -> Result<Self> {
        DiagonalOperator::new(DenseVector::constant(n, c)?)
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &DenseVector {
        &self.diag
    }

    /// `D v`
    pub fn apply(&self, v: &DenseVector) -> Result<DenseVector> {
        if v.len() != self.len() {
            return Err(Error::dim("DiagonalOperator::apply", self.len(), v.len()));
        }
        Ok(DenseVector::from_raw(
            self.diag.iter().zip(v.iter()).map(|(d, x)| d * x).collect(),
        ))
    }

    /// `D^{-1} v`; errors on a zero diagonal entry.
    pub fn solve(&self, v: &DenseVector) -> Result<DenseVector> {
        if v.len() != self.len() {
            return Err(Error::dim("DiagonalOperator::solve", self.len(), v.len()));
        }
        let mut out = Vec::with_capacity(v.len());
        for (i, (d, x)) in self.diag.iter().zip(v.iter()).enumerate() {
            if *d == 0.0 {
                return Err(Error::SingularDiagonal { index: i });
            }
            out.push(x / d);
        }
        Ok(DenseVector::from_raw(out))
    }

    pub fn scale(&self, c: f64) -> Result<DiagonalOperator> {
        if !(c >= 0.0) {
            return Err(Error::InvalidParameter(
                "diagonal scale factor must be non-negative".into(),
            ));
        }
        Ok(DiagonalOperator {
            diag: self.diag.scale(c),
        })
    }

    pub fn add(&self, other: &DiagonalOperator) -> DiagonalOperator {
        DiagonalOperator {
            diag: self.diag.add(&other.diag),
        }
    }

    /// Elementwise square root (used for the `W^{1/2}` substitution).
    pub fn sqrt(&self) -> DiagonalOperator {
        DiagonalOperator {
            diag: DenseVector::from_raw(self.diag.iter().map(|d| d.sqrt()).collect()),
        }
    }

    pub fn min_entry(&self) -> f64 {
        self.diag.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `sum_i D_i v_i^2`
pub fn weighted_norm_sq(v: &DenseVector, d: &DiagonalOperator) -> Result<f64> {
    if v.len() != d.len() {
        return Err(Error::dim("weighted_norm_sq", d.len(), v.len()));
    }
    Ok(v.iter()
        .zip(d.diag().iter())
        .map(|(x, w)| w * x * x)
        .sum())
}

/// Upper bound on `lambda_max(A'WA)` by power iteration, inflated by
/// [`SPECTRAL_SAFETY_FACTOR`] so the result strictly majorizes.
///
/// The iteration starts from an all-ones vector with one deterministic
/// pseudo-random perturbation pass, so repeated runs are reproducible.
/// Convergence means the Rayleigh quotient moved by less than `tol`
/// relative; otherwise the last estimate is reported in the error.
pub fn spectral_bound(
    a: &SparseMatrix,
    w: &DiagonalOperator,
    iters: usize,
    tol: f64,
) -> Result<f64> {
    if iters < 1 {
        return Err(Error::InvalidParameter(
            "spectral_bound requires iters >= 1".into(),
        ));
    }
    if w.len() != a.rows() {
        return Err(Error::dim("spectral_bound", a.rows(), w.len()));
    }
    let n = a.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(0x005e_ed00);
    let mut v = DenseVector::from_raw(
        (0..n)
            .map(|_| 1.0 + 0.01 * (rng.random::<f64>() - 0.5))
            .collect(),
    );
    let nv = v.norm();
    if nv == 0.0 {
        return Ok(0.0);
    }
    v = v.scale(1.0 / nv);

    let mut estimate = 0.0;
    for _ in 0..iters {
        let u = a.spmv_t(&w.apply(&a.spmv(&v)?)?)?;
        let rayleigh = v.dot(&u); // v has unit norm
        let un = u.norm();
        if un == 0.0 {
            // A'WA annihilates v: spectrum estimate is zero
            return Ok(0.0);
        }
        let prev = estimate;
        estimate = rayleigh;
        v = u.scale(1.0 / un);
        if (estimate - prev).abs() <= tol * estimate.abs().max(f64::MIN_POSITIVE) {
            return Ok(SPECTRAL_SAFETY_FACTOR * estimate);
        }
    }
    Err(Error::PowerIterationNoConvergence { estimate, iters })
}

/// Power-iteration estimate of the top eigenvector of `A'WA` (unit norm).
/// Used as a deterministic witness direction by the majorization checker.
pub(crate) fn top_eigenvector(
    a: &SparseMatrix,
    w: &DiagonalOperator,
    iters: usize,
) -> Result<DenseVector> {
    let n = a.cols();
    let mut v = DenseVector::ones(n).scale(1.0 / (n as f64).sqrt());
    for _ in 0..iters {
        let u = a.spmv_t(&w.apply(&a.spmv(&v)?)?)?;
        let un = u.norm();
        if un == 0.0 {
            return Ok(v);
        }
        v = u.scale(1.0 / un);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat_2x2_upper() -> SparseMatrix {
        // [[1, 1], [0, 1]]
        SparseMatrix::from_rows(2, vec![vec![(0, 1.0), (1, 1.0)], vec![(1, 1.0)]]).unwrap()
    }

    #[test]
    fn spmv_identity() {
        let a = SparseMatrix::identity(3);
        let x = DenseVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(a.spmv(&x).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn spmv_hand_computed() {
        let a = mat_2x2_upper();
        let x = DenseVector::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(a.spmv(&x).unwrap().as_slice(), &[2.0, 1.0]);
    }

    #[test]
    fn spmv_zero_matrix_annihilates() {
        let a = SparseMatrix::from_rows(4, vec![vec![], vec![], vec![]]).unwrap();
        let x = DenseVector::new(vec![1.0, -2.0, 3.0, 4.0]).unwrap();
        assert_eq!(a.spmv(&x).unwrap().as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn spmv_dimension_mismatch() {
        let a = SparseMatrix::identity(3);
        let x = DenseVector::zeros(2);
        assert!(matches!(
            a.spmv(&x),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn spmv_t_identity_and_zero() {
        let a = SparseMatrix::identity(3);
        let r = DenseVector::new(vec![4.0, 5.0, 6.0]).unwrap();
        assert_eq!(a.spmv_t(&r).unwrap().as_slice(), &[4.0, 5.0, 6.0]);
        let z = DenseVector::zeros(3);
        assert_eq!(a.spmv_t(&z).unwrap().as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn spmv_t_hand_computed() {
        let a = mat_2x2_upper();
        let r = DenseVector::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(a.spmv_t(&r).unwrap().as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn weighted_norm_examples() {
        let v = DenseVector::new(vec![1.0, 1.0]).unwrap();
        let i = DiagonalOperator::identity(2);
        assert_eq!(weighted_norm_sq(&v, &i).unwrap(), 2.0);

        let v = DenseVector::new(vec![1.0, 2.0]).unwrap();
        let d = DiagonalOperator::new(DenseVector::new(vec![2.0, 3.0]).unwrap()).unwrap();
        assert_eq!(weighted_norm_sq(&v, &d).unwrap(), 14.0);

        let z = DenseVector::zeros(2);
        assert_eq!(weighted_norm_sq(&z, &d).unwrap(), 0.0);
    }

    #[test]
    fn dense_vector_rejects_non_finite() {
        assert!(DenseVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(DenseVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn sparse_structure_validation() {
        // unsorted columns in a row
        assert!(SparseMatrix::new(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        // out-of-range column
        assert!(SparseMatrix::new(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err());
        // mismatched lengths
        assert!(SparseMatrix::new(1, 2, vec![0, 2], vec![0, 1], vec![1.0]).is_err());
    }

    #[test]
    fn spectral_bound_diagonal() {
        // A = diag(2, 1): lambda_max(A'A) = 4
        let a = SparseMatrix::from_rows(2, vec![vec![(0, 2.0)], vec![(1, 1.0)]]).unwrap();
        let w = DiagonalOperator::identity(2);
        let l = spectral_bound(&a, &w, 500, 1e-12).unwrap();
        assert!((l - 4.0 * SPECTRAL_SAFETY_FACTOR).abs() < 1e-6, "l = {l}");
    }

    #[test]
    fn spectral_bound_identity() {
        let a = SparseMatrix::identity(5);
        let w = DiagonalOperator::identity(5);
        let l = spectral_bound(&a, &w, 50, 1e-12).unwrap();
        assert!((l - SPECTRAL_SAFETY_FACTOR).abs() < 1e-9);
    }

    #[test]
    fn spectral_bound_upper_triangular() {
        // A'A = [[1,1],[1,2]], lambda_max = (3 + sqrt(5))/2
        let a = mat_2x2_upper();
        let w = DiagonalOperator::identity(2);
        let l = spectral_bound(&a, &w, 2000, 1e-13).unwrap();
        let exact = (3.0 + 5.0_f64.sqrt()) / 2.0;
        assert!((l - SPECTRAL_SAFETY_FACTOR * exact).abs() < 1e-8, "l = {l}");
    }

    #[test]
    fn spectral_bound_reports_last_estimate_on_no_convergence() {
        let a = mat_2x2_upper();
        let w = DiagonalOperator::identity(2);
        match spectral_bound(&a, &w, 1, 1e-16) {
            Err(Error::PowerIterationNoConvergence { estimate, iters }) => {
                assert_eq!(iters, 1);
                assert!(estimate > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn spectral_bound_majorizes_random_vectors() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let a = random_sparse(&mut rng, 40, 30);
        let wd =
            DenseVector::from_raw((0..40).map(|_| rng.random::<f64>() * 3.0).collect());
        let w = DiagonalOperator::new(wd).unwrap();
        let l = spectral_bound(&a, &w, 5000, 1e-12).unwrap();
        for _ in 0..1000 {
            let x = DenseVector::from_raw(
                (0..30).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
            );
            let n2 = x.dot(&x);
            if n2 == 0.0 {
                continue;
            }
            let ax = a.spmv(&x).unwrap();
            let lhs = weighted_norm_sq(&ax, &w).unwrap();
            assert!(lhs < l * n2, "majorization violated: {lhs} vs {}", l * n2);
        }
    }

    fn random_sparse(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> SparseMatrix {
        use rand::Rng;
        let mut data = Vec::with_capacity(rows);
        for _ in 0..rows {
            let mut row = Vec::new();
            for c in 0..cols {
                if rng.random::<f64>() < 0.2 {
                    row.push((c, rng.random::<f64>() * 2.0 - 1.0));
                }
            }
            data.push(row);
        }
        SparseMatrix::from_rows(cols, data).unwrap()
    }

    proptest! {
        #[test]
        fn adjointness(seed in 0u64..500, rows in 1usize..200, cols in 1usize..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_sparse(&mut rng, rows, cols);
            let x = DenseVector::from_raw((0..cols).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect());
            let r = DenseVector::from_raw((0..rows).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect());
            let lhs = a.spmv(&x).unwrap().dot(&r);
            let rhs = x.dot(&a.spmv_t(&r).unwrap());
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }

        #[test]
        fn weighted_norm_identity_is_euclidean(vals in proptest::collection::vec(-100.0f64..100.0, 1..50)) {
            let v = DenseVector::new(vals).unwrap();
            let i = DiagonalOperator::identity(v.len());
            let wn = weighted_norm_sq(&v, &i).unwrap();
            prop_assert!((wn - v.dot(&v)).abs() <= 1e-12 * wn.max(1.0));
        }
    }
}
