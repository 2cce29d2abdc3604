//! Desk-scale 2D parallel-beam CT model: phantom rasterization, Siddon-style
//! system matrix, transmission-noise statistical weights, subset partitioning
//! with bit-reversal ordering, and the subset-count rules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::linalg::{DenseVector, DiagonalOperator, SparseMatrix};

/// Square-pixel image grid centered on the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    pub nx: usize,
    pub ny: usize,
    pub pixel_size: f64,
    /// Radius of the circular region of interest used by [`rms_diff`].
    pub roi_radius: f64,
}

impl ImageGrid {
    pub fn new(nx: usize, ny: usize, pixel_size: f64, roi_radius: f64) -> Result<Self> {
        if nx < 1 || ny < 1 {
            return Err(Error::InvalidGeometry("grid needs nx, ny >= 1".into()));
        }
        if !(pixel_size > 0.0) {
            return Err(Error::InvalidGeometry("pixel_size must be positive".into()));
        }
        let half_min = 0.5 * (nx.min(ny) as f64) * pixel_size;
        if !(roi_radius >= 0.0) || roi_radius > half_min {
            return Err(Error::InvalidGeometry(format!(
                "roi_radius {roi_radius} must lie in [0, {half_min}]"
            )));
        }
        Ok(ImageGrid {
            nx,
            ny,
            pixel_size,
            roi_radius,
        })
    }

    pub fn n_pixels(&self) -> usize {
        self.nx * self.ny
    }

    /// Physical x-coordinate of the left grid edge.
    pub fn x_min(&self) -> f64 {
        -0.5 * self.nx as f64 * self.pixel_size
    }

    pub fn y_min(&self) -> f64 {
        -0.5 * self.ny as f64 * self.pixel_size
    }

    /// Center of pixel `(ix, iy)`; the image vector is row-major with
    /// index `iy * nx + ix`.
    pub fn pixel_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.x_min() + (ix as f64 + 0.5) * self.pixel_size,
            self.y_min() + (iy as f64 + 0.5) * self.pixel_size,
        )
    }
}

/// Parallel-beam acquisition geometry with view angles uniform over `[0, pi)`.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub n_views: usize,
    pub n_bins: usize,
    pub bin_spacing: f64,
    angles: Vec<f64>,
}

impl Geometry {
    pub fn parallel(n_views: usize, n_bins: usize, bin_spacing: f64) -> Result<Self> {
        if n_views < 1 || n_bins < 1 {
            return Err(Error::InvalidGeometry(
                "geometry needs n_views, n_bins >= 1".into(),
            ));
        }
        if !(bin_spacing > 0.0) {
            return Err(Error::InvalidGeometry("bin_spacing must be positive".into()));
        }
        let angles = (0..n_views)
            .map(|v| std::f64::consts::PI * v as f64 / n_views as f64)
            .collect();
        Ok(Geometry {
            n_views,
            n_bins,
            bin_spacing,
            angles,
        })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn n_rays(&self) -> usize {
        self.n_views * self.n_bins
    }

    /// Row index of `(view, bin)` in the system matrix / sinogram.
    pub fn ray_index(&self, view: usize, bin: usize) -> usize {
        view * self.n_bins + bin
    }

    /// Signed detector offset of bin `b` from the rotation center.
    pub fn bin_offset(&self, b: usize) -> f64 {
        (b as f64 - (self.n_bins as f64 - 1.0) / 2.0) * self.bin_spacing
    }
}

/// Sinogram samples indexed by `(view, bin)`, flattened row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Sinogram {
    pub n_views: usize,
    pub n_bins: usize,
    data: DenseVector,
}

impl Sinogram {
    pub fn new(n_views: usize, n_bins: usize, data: DenseVector) -> Result<Self> {
        if data.len() != n_views * n_bins {
            return Err(Error::dim("Sinogram::new", n_views * n_bins, data.len()));
        }
        Ok(Sinogram {
            n_views,
            n_bins,
            data,
        })
    }

    pub fn data(&self) -> &DenseVector {
        &self.data
    }

    pub fn into_data(self) -> DenseVector {
        self.data
    }
}

/// An ellipse with an additive density, making up synthetic phantoms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
    /// Rotation in radians, counter-clockwise.
    pub angle: f64,
    pub density: f64,
}

/// Rasterize a list of ellipses onto the grid: pixelwise sum of densities of
/// the ellipses covering each pixel center, clamped at zero. An empty list
/// yields the zero image; grid area outside an ellipse (or ellipse area
/// outside the grid) simply contributes nothing.
pub fn make_phantom(grid: &ImageGrid, ellipses: &[Ellipse]) -> Result<DenseVector> {
    for e in ellipses {
        if !(e.rx > 0.0 && e.ry > 0.0) {
            return Err(Error::InvalidGeometry("ellipse radii must be positive".into()));
        }
    }
    let mut img = vec![0.0; grid.n_pixels()];
    for e in ellipses {
        let (ca, sa) = (e.angle.cos(), e.angle.sin());
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let (px, py) = grid.pixel_center(ix, iy);
                let dx = px - e.cx;
                let dy = py - e.cy;
                let u = (dx * ca + dy * sa) / e.rx;
                let v = (-dx * sa + dy * ca) / e.ry;
                if u * u + v * v <= 1.0 {
                    img[iy * grid.nx + ix] += e.density;
                }
            }
        }
    }
    for p in &mut img {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    Ok(DenseVector::new(img)?)
}

/// Exact ray-pixel intersection lengths for every `(view, bin)` ray.
///
/// The ray for view angle `theta` and detector offset `s` is the line
/// `{ s*n + t*d }` with normal `n = (cos theta, sin theta)` and direction
/// `d = (-sin theta, cos theta)`. Each matrix row holds the chord lengths of
/// that line through the pixels it crosses, so row sums equal the chord
/// length through the grid and the adjoint pair `A`/`A'` is exact.
pub fn build_system_matrix(grid: &ImageGrid, geo: &Geometry) -> SparseMatrix {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(geo.n_rays());
    for &theta in geo.angles() {
        let (sin_t, cos_t) = theta.sin_cos();
        let dir = (-sin_t, cos_t);
        for b in 0..geo.n_bins {
            let s = geo.bin_offset(b);
            let origin = (s * cos_t, s * sin_t);
            rows.push(trace_ray(grid, origin, dir));
        }
    }
    SparseMatrix::from_rows(grid.n_pixels(), rows).expect("ray tracer emits valid rows")
}

/// March one ray through the grid, returning `(pixel index, length)` pairs.
fn trace_ray(grid: &ImageGrid, origin: (f64, f64), dir: (f64, f64)) -> Vec<(usize, f64)> {
    let h = grid.pixel_size;
    let (x0, y0) = (grid.x_min(), grid.y_min());
    let (x1, y1) = (-x0, -y0);

    // Clip the ray parameter to the grid bounding box.
    let mut t_min = f64::NEG_INFINITY;
    let mut t_max = f64::INFINITY;
    for &(o, d, lo, hi) in &[(origin.0, dir.0, x0, x1), (origin.1, dir.1, y0, y1)] {
        if d == 0.0 {
            if o < lo || o > hi {
                return Vec::new();
            }
        } else {
            let (ta, tb) = ((lo - o) / d, (hi - o) / d);
            let (ta, tb) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            t_min = t_min.max(ta);
            t_max = t_max.min(tb);
        }
    }
    if !(t_max > t_min) {
        return Vec::new();
    }

    // Start pixel from the entry point, nudged inside.
    let px = origin.0 + t_min * dir.0;
    let py = origin.1 + t_min * dir.1;
    let mut ix = (((px - x0) / h).floor() as isize).clamp(0, grid.nx as isize - 1);
    let mut iy = (((py - y0) / h).floor() as isize).clamp(0, grid.ny as isize - 1);

    // Parameter values of the next x / y gridline crossings.
    let mut tx = if dir.0 > 0.0 {
        (x0 + (ix + 1) as f64 * h - origin.0) / dir.0
    } else if dir.0 < 0.0 {
        (x0 + ix as f64 * h - origin.0) / dir.0
    } else {
        f64::INFINITY
    };
    let mut ty = if dir.1 > 0.0 {
        (y0 + (iy + 1) as f64 * h - origin.1) / dir.1
    } else if dir.1 < 0.0 {
        (y0 + iy as f64 * h - origin.1) / dir.1
    } else {
        f64::INFINITY
    };
    let step_tx = h / dir.0.abs();
    let step_ty = h / dir.1.abs();

    let mut out = Vec::new();
    let mut t = t_min;
    loop {
        let t_next = tx.min(ty).min(t_max);
        let seg = t_next - t;
        if seg > 0.0 {
            out.push(((iy as usize) * grid.nx + ix as usize, seg));
        }
        if t_next >= t_max {
            break;
        }
        if tx <= ty {
            ix += if dir.0 > 0.0 { 1 } else { -1 };
            tx += step_tx;
        } else {
            iy += if dir.1 > 0.0 { 1 } else { -1 };
            ty += step_ty;
        }
        if ix < 0 || iy < 0 || ix >= grid.nx as isize || iy >= grid.ny as isize {
            break;
        }
        t = t_next;
    }
    out
}

/// Simulate a transmission scan: line integrals `t = A x_true`, Poisson
/// counts with mean `I0 * exp(-t)` (floored at one count so weights stay
/// positive), log-converted sinogram `y_i = ln(I0 / counts_i)`, and the
/// standard PWLS weighting `W_i = counts_i`.
///
/// Sampling is driven by a counter-based generator seeded from `seed`, so a
/// fixed seed reproduces `(y, W)` exactly.
pub fn synthesize_weights(
    a: &SparseMatrix,
    geo: &Geometry,
    x_true: &DenseVector,
    i0: f64,
    seed: u64,
) -> Result<(Sinogram, DiagonalOperator)> {
    if !(i0 > 0.0) {
        return Err(Error::InvalidParameter("I0 must be positive".into()));
    }
    if a.rows() != geo.n_rays() {
        return Err(Error::dim("synthesize_weights", geo.n_rays(), a.rows()));
    }
    let t = a.spmv(x_true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = Vec::with_capacity(t.len());
    let mut w = Vec::with_capacity(t.len());
    for &ti in t.iter() {
        let mean = i0 * (-ti).exp();
        let poisson = Poisson::new(mean).map_err(|e| {
            Error::InvalidParameter(format!("Poisson mean {mean} invalid: {e}"))
        })?;
        let counts: f64 = poisson.sample(&mut rng);
        let counts = counts.round().max(1.0);
        y.push((i0 / counts).ln());
        w.push(counts);
    }
    let sino = Sinogram::new(geo.n_views, geo.n_bins, DenseVector::new(y)?)?;
    let weights = DiagonalOperator::new(DenseVector::new(w)?)?;
    Ok((sino, weights))
}

/// View-to-subset assignment plus the bit-reversal subset visiting order.
#[derive(Clone, Debug)]
pub struct SubsetPartition {
    m: usize,
    view_to_subset: Vec<usize>,
    visit_order: Vec<usize>,
    subset_rows: Vec<Vec<usize>>,
}

impl SubsetPartition {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn view_to_subset(&self) -> &[usize] {
        &self.view_to_subset
    }

    /// Subset indices in bit-reversal visiting order.
    pub fn visit_order(&self) -> &[usize] {
        &self.visit_order
    }

    /// System-matrix row indices belonging to subset `m`.
    pub fn subset_rows(&self, m: usize) -> &[usize] {
        &self.subset_rows[m]
    }

    /// Subset visited at inner-update slot `slot` (cycles every `m`).
    pub fn subset_at(&self, slot: usize) -> usize {
        self.visit_order[slot % self.m]
    }
}

/// Bit-reversal permutation of `0..m`. For non-power-of-two `m`, `m` is
/// padded to the next power of two and out-of-range entries are dropped.
pub fn bit_reversal_order(m: usize) -> Vec<usize> {
    if m <= 1 {
        return vec![0; m.min(1)];
    }
    let mut p = 1usize;
    let mut bits = 0u32;
    while p < m {
        p <<= 1;
        bits += 1;
    }
    (0..p)
        .map(|i| (i as u64).reverse_bits() >> (64 - bits) as u64)
        .map(|r| r as usize)
        .filter(|&r| r < m)
        .collect()
}

/// Assign views round-robin (`view mod M`) and fix the visiting order to the
/// bit-reversal permutation.
pub fn partition_subsets(geo: &Geometry, m: usize) -> Result<SubsetPartition> {
    if m < 1 {
        return Err(Error::InvalidParameter("subset count must be >= 1".into()));
    }
    if m > geo.n_views {
        return Err(Error::TooManySubsets {
            m,
            n_views: geo.n_views,
        });
    }
    let view_to_subset: Vec<usize> = (0..geo.n_views).map(|v| v % m).collect();
    let mut subset_rows = vec![Vec::new(); m];
    for v in 0..geo.n_views {
        let s = view_to_subset[v];
        for b in 0..geo.n_bins {
            subset_rows[s].push(geo.ray_index(v, b));
        }
    }
    Ok(SubsetPartition {
        m,
        view_to_subset,
        visit_order: bit_reversal_order(m),
        subset_rows,
    })
}

/// Most subsets an axial scan supports while each subset still sees at least
/// `s_axial` views: `floor(n_views / s_axial)`, at least 1.
pub fn max_subsets_axial(n_views: usize, s_axial: usize) -> usize {
    assert!(s_axial >= 1, "s_axial must be >= 1");
    (n_views / s_axial).max(1)
}

/// Helical analogue: the central region is covered by `d_so / (pitch * d_sd)`
/// turns, so the bound is `floor(views_per_turn * d_so / (pitch * s_helical *
/// d_sd))`, at least 1. Inversely proportional to the pitch.
pub fn max_subsets_helical(
    views_per_turn: usize,
    d_so: f64,
    d_sd: f64,
    pitch: f64,
    s_helical: usize,
) -> Result<usize> {
    if views_per_turn < 1 || s_helical < 1 || !(d_so > 0.0) || !(d_sd > 0.0) || !(pitch > 0.0) {
        return Err(Error::InvalidParameter(
            "max_subsets_helical requires positive inputs".into(),
        ));
    }
    let bound = (views_per_turn as f64) * d_so / (pitch * s_helical as f64 * d_sd);
    Ok((bound.floor() as usize).max(1))
}

/// Default minimum views per subset for axial scans.
pub const S_AXIAL_DEFAULT: usize = 40;
/// Default minimum views per subset for helical scans.
pub const S_HELICAL_DEFAULT: usize = 24;

/// Root-mean-square difference over pixels whose centers lie within
/// `roi_radius` of the grid center.
pub fn rms_diff(x: &DenseVector, x_ref: &DenseVector, grid: &ImageGrid) -> Result<f64> {
    if x.len() != grid.n_pixels() {
        return Err(Error::dim("rms_diff", grid.n_pixels(), x.len()));
    }
    if x_ref.len() != x.len() {
        return Err(Error::dim("rms_diff", x.len(), x_ref.len()));
    }
    let r2 = grid.roi_radius * grid.roi_radius;
    let mut sum = 0.0;
    let mut count = 0usize;
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let (px, py) = grid.pixel_center(ix, iy);
            if px * px + py * py <= r2 {
                let d = x[iy * grid.nx + ix] - x_ref[iy * grid.nx + ix];
                sum += d * d;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyRoi);
    }
    Ok((sum / count as f64).sqrt())
}
