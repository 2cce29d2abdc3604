//! Ordered-subsets linearized augmented Lagrangian (OS-LALM) reconstruction
//! for regularized weighted least-squares problems, with a desk-scale 2D
//! parallel-beam CT simulator and a convergence-analysis toolkit.
//!
//! The problem solved throughout is
//!
//! ```text
//! min_x  0.5 ||y - Ax||^2_W + beta R(x)   subject to  x in [lo, hi]^n
//! ```
//!
//! where `A` is a sparse ray-tracing system matrix, `W` the statistical
//! weighting from transmission counts, and `R` an edge-preserving
//! finite-difference regularizer.
//!
//! Module map:
//!
//! * [`linalg`]: dense vectors, CSR matrices, diagonal operators, spectral
//!   bounds.
//! * [`ct`]: phantoms, the Siddon-style system matrix, noise/weights, subset
//!   partitioning and the subset-count rules.
//! * [`regularizer`]: potentials, gradient, curvature majorizer, box
//!   projection.
//! * [`majorizer`]: the separable quadratic surrogate diagonal, secant
//!   rescaling, and a sampled dominance checker.
//! * [`solvers`]: the LALM family (full split form, gradient-based form,
//!   OS variant with downward continuation and adaptive restart), FISTA,
//!   and OS baselines, plus per-update convergence logging.
//! * [`analysis`]: damping classification of the second-order recurrence,
//!   optimal penalty parameters, primal-dual gap and its bound, restart
//!   period measurement.
//! * [`io`]: raw-f32 image/sinogram files with text sidecars, CSV logs,
//!   PGM export.

pub mod analysis;
pub mod ct;
pub mod error;
pub mod io;
pub mod linalg;
pub mod majorizer;
pub mod regularizer;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::{DenseVector, DiagonalOperator, SparseMatrix};
