//! Read access to the matrices being factorized.
//!
//! Factorization code only touches a matrix through [`MatrixSource`], so the
//! number of entries it reads can be audited with [`CountingSource`].

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::diagnostics::CoordinateModel;
use crate::linalg::{check_finite, dft_matrix_rows, select_rows, spectral_norm, PowerIteration};
use crate::{Error, Mat, MatRef, Result, C64};

/// Rows per block when a product is formed from entry reads.
const BLOCK: usize = 64;

/// Full bases are attached to synthetic models up to this size.
pub const FULL_BASIS_LIMIT: usize = 1024;

/// An `m x n` matrix available through entry evaluation.
///
/// Entries must be deterministic. Block accessors check indices and report
/// non-finite values as errors; `entry` itself does neither.
pub trait MatrixSource: Send + Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// Entry `(i, j)`. Callers keep `i < nrows`, `j < ncols`.
    fn entry(&self, i: usize, j: usize) -> C64;

    /// Whether [`mul_right`](Self::mul_right) and
    /// [`mul_left`](Self::mul_left) are cheaper than reading every entry.
    fn has_fast_matvec(&self) -> bool {
        false
    }

    /// `A[rows, cols]`, duplicates allowed.
    fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<Mat> {
        check_indices(rows, self.nrows())?;
        check_indices(cols, self.ncols())?;
        let m = Mat::from_fn(rows.len(), cols.len(), |a, b| self.entry(rows[a], cols[b]));
        check_finite(m.as_ref()).map_err(|e| match e {
            Error::NonFinite { row, col } => Error::NonFinite {
                row: rows[row],
                col: cols[col],
            },
            e => e,
        })?;
        Ok(m)
    }

    /// `A[rows, :]`.
    fn rows(&self, rows: &[usize]) -> Result<Mat> {
        let all: Vec<usize> = (0..self.ncols()).collect();
        self.submatrix(rows, &all)
    }

    /// `A[:, cols]`.
    fn cols(&self, cols: &[usize]) -> Result<Mat> {
        let all: Vec<usize> = (0..self.nrows()).collect();
        self.submatrix(&all, cols)
    }

    /// `A W`.
    fn mul_right(&self, w: MatRef<'_>) -> Result<Mat> {
        check_dim(self.ncols(), w.nrows())?;
        let (m, n) = (self.nrows(), self.ncols());
        let all: Vec<usize> = (0..n).collect();
        let mut out = Mat::zeros(m, w.ncols());
        for start in (0..m).step_by(BLOCK) {
            let rows: Vec<usize> = (start..(start + BLOCK).min(m)).collect();
            let blk = &self.submatrix(&rows, &all)? * w;
            out.as_mut()
                .submatrix_mut(start, 0, rows.len(), w.ncols())
                .copy_from(&blk);
        }
        Ok(out)
    }

    /// `W A`.
    fn mul_left(&self, w: MatRef<'_>) -> Result<Mat> {
        check_dim(self.nrows(), w.ncols())?;
        let (m, n) = (self.nrows(), self.ncols());
        let all: Vec<usize> = (0..m).collect();
        let mut out = Mat::zeros(w.nrows(), n);
        for start in (0..n).step_by(BLOCK) {
            let cols: Vec<usize> = (start..(start + BLOCK).min(n)).collect();
            let blk = w * &self.submatrix(&all, &cols)?;
            out.as_mut()
                .submatrix_mut(0, start, w.nrows(), cols.len())
                .copy_from(&blk);
        }
        Ok(out)
    }

    fn to_dense(&self) -> Result<Mat> {
        let rows: Vec<usize> = (0..self.nrows()).collect();
        let cols: Vec<usize> = (0..self.ncols()).collect();
        self.submatrix(&rows, &cols)
    }
}

pub(crate) fn check_indices(idx: &[usize], bound: usize) -> Result<()> {
    match idx.iter().find(|&&i| i >= bound) {
        Some(&index) => Err(Error::IndexOutOfRange { index, bound }),
        None => Ok(()),
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

impl<S: MatrixSource + ?Sized> MatrixSource for &S {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn entry(&self, i: usize, j: usize) -> C64 {
        (**self).entry(i, j)
    }
    fn has_fast_matvec(&self) -> bool {
        (**self).has_fast_matvec()
    }
    fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<Mat> {
        (**self).submatrix(rows, cols)
    }
    fn mul_right(&self, w: MatRef<'_>) -> Result<Mat> {
        (**self).mul_right(w)
    }
    fn mul_left(&self, w: MatRef<'_>) -> Result<Mat> {
        (**self).mul_left(w)
    }
    fn to_dense(&self) -> Result<Mat> {
        (**self).to_dense()
    }
}

// ---------------------------------------------------------------- dense

/// A matrix held in memory.
#[derive(Clone, Debug)]
pub struct DenseSource {
    data: Mat,
}

/// Builds a source from row-major nested values.
pub fn dense_source(values: Vec<Vec<C64>>) -> Result<DenseSource> {
    let m = values.len();
    let n = values.first().map_or(0, |r| r.len());
    if m == 0 || n == 0 {
        return Err(Error::EmptyInput);
    }
    if let Some((row, r)) = values.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::Ragged {
            row,
            expected: n,
            found: r.len(),
        });
    }
    Ok(DenseSource {
        data: Mat::from_fn(m, n, |i, j| values[i][j]),
    })
}

impl DenseSource {
    pub fn from_mat(data: Mat) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(Self { data })
    }

    pub fn as_mat(&self) -> MatRef<'_> {
        self.data.as_ref()
    }
}

impl MatrixSource for DenseSource {
    fn nrows(&self) -> usize {
        self.data.nrows()
    }
    fn ncols(&self) -> usize {
        self.data.ncols()
    }
    fn entry(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }
    fn has_fast_matvec(&self) -> bool {
        true
    }
    fn mul_right(&self, w: MatRef<'_>) -> Result<Mat> {
        check_dim(self.ncols(), w.nrows())?;
        check_finite(self.data.as_ref())?;
        Ok(&self.data * w)
    }
    fn mul_left(&self, w: MatRef<'_>) -> Result<Mat> {
        check_dim(self.nrows(), w.ncols())?;
        check_finite(self.data.as_ref())?;
        Ok(w * &self.data)
    }
    fn to_dense(&self) -> Result<Mat> {
        check_finite(self.data.as_ref())?;
        Ok(self.data.clone())
    }
}

// ---------------------------------------------------------------- counting

/// Wraps a source and counts every entry it hands out.
pub struct CountingSource<S> {
    inner: S,
    reads: AtomicU64,
}

impl<S: MatrixSource> CountingSource<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            reads: AtomicU64::new(0),
        }
    }

    pub fn reads(&self) -> u64 {
        self.reads.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.reads.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    fn add(&self, k: usize) {
        self.reads.fetch_add(k as u64, Ordering::Relaxed);
    }
}

impl<S: MatrixSource> MatrixSource for CountingSource<S> {
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }
    fn ncols(&self) -> usize {
        self.inner.ncols()
    }
    fn entry(&self, i: usize, j: usize) -> C64 {
        self.add(1);
        self.inner.entry(i, j)
    }
    fn has_fast_matvec(&self) -> bool {
        self.inner.has_fast_matvec()
    }
    fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<Mat> {
        self.add(rows.len() * cols.len());
        self.inner.submatrix(rows, cols)
    }
    fn mul_right(&self, w: MatRef<'_>) -> Result<Mat> {
        self.add(self.nrows() * self.ncols());
        self.inner.mul_right(w)
    }
    fn mul_left(&self, w: MatRef<'_>) -> Result<Mat> {
        self.add(self.nrows() * self.ncols());
        self.inner.mul_left(w)
    }
    fn to_dense(&self) -> Result<Mat> {
        self.add(self.nrows() * self.ncols());
        self.inner.to_dense()
    }
}

// ---------------------------------------------------------------- synthetic

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Basis {
    /// `X = Y = F`, the unitary DFT matrix.
    UnitaryDft,
    /// Independent Haar-distributed unitaries.
    HaarRandom { seed: u64 },
    /// `X = Y = I`.
    IdentitySpike,
}

/// `A = X diag(sigma) Y^*` with structured unitary factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModelSpec {
    pub n: usize,
    pub k: usize,
    pub singular_values: Vec<f64>,
    pub basis: Basis,
}

impl SyntheticModelSpec {
    /// Leading `k` values logarithmically spaced from 1 down to `eps`
    /// (both included), all others equal to `eps`.
    pub fn log_spaced(n: usize, k: usize, eps: f64, basis: Basis) -> Self {
        let mut s = vec![eps; n];
        for (p, v) in s.iter_mut().take(k).enumerate() {
            let t = if k > 1 { p as f64 / (k - 1) as f64 } else { 0.0 };
            *v = eps.powf(t);
        }
        Self {
            n,
            k,
            singular_values: s,
            basis,
        }
    }

    /// `k` unit singular values followed by a flat tail at `eps`.
    pub fn two_level(n: usize, k: usize, eps: f64, basis: Basis) -> Self {
        let s = (0..n).map(|p| if p < k { 1.0 } else { eps }).collect();
        Self {
            n,
            k,
            singular_values: s,
            basis,
        }
    }

    /// Exact rank `k`, values logarithmically spaced from 1 to `1e-3`.
    pub fn exact_rank(n: usize, k: usize, basis: Basis) -> Self {
        let mut s = Self::log_spaced(n, k, 1e-3, basis);
        s.singular_values[k.min(n)..].iter_mut().for_each(|v| *v = 0.0);
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyInput);
        }
        if self.k > self.n {
            return Err(Error::Rank {
                k: self.k,
                min: 0,
                max: self.n,
            });
        }
        check_dim(self.n, self.singular_values.len())?;
        let s = &self.singular_values;
        if s.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "singular values must be finite and nonnegative".into(),
            ));
        }
        if s.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("singular values must be nonincreasing".into()));
        }
        Ok(())
    }
}

/// Entries of `X diag(sigma) Y^*` evaluated on demand.
///
/// The spectrum is split as `sigma = tau + (sigma - tau)` with `tau` the
/// smallest value, so that only the `h` leading factor columns with
/// `sigma_p > tau` are stored and the flat tail contributes `tau X Y^*`.
#[derive(Clone, Debug)]
pub struct SyntheticSource {
    n: usize,
    /// `X[:, :h] diag(sigma - tau)`.
    head: Mat,
    /// `Y[:, :h]`.
    head_y: Mat,
    tau: f64,
    /// `X Y^*`, or `None` when it is the identity.
    tail: Option<Mat>,
}

impl MatrixSource for SyntheticSource {
    fn nrows(&self) -> usize {
        self.n
    }
    fn ncols(&self) -> usize {
        self.n
    }
    fn entry(&self, i: usize, j: usize) -> C64 {
        let mut z = C64::new(0.0, 0.0);
        for p in 0..self.head.ncols() {
            z += self.head[(i, p)] * self.head_y[(j, p)].conj();
        }
        if self.tau != 0.0 {
            z += match &self.tail {
                Some(t) => t[(i, j)] * self.tau,
                None if i == j => C64::new(self.tau, 0.0),
                None => C64::new(0.0, 0.0),
            };
        }
        z
    }
    fn has_fast_matvec(&self) -> bool {
        true
    }
    fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<Mat> {
        check_indices(rows, self.n)?;
        check_indices(cols, self.n)?;
        let hr = select_rows(self.head.as_ref(), rows);
        let hc = select_rows(self.head_y.as_ref(), cols);
        let mut out = &hr * hc.adjoint();
        if self.tau != 0.0 {
            for (b, &j) in cols.iter().enumerate() {
                for (a, &i) in rows.iter().enumerate() {
                    out[(a, b)] += match &self.tail {
                        Some(t) => t[(i, j)] * self.tau,
                        None if i == j => C64::new(self.tau, 0.0),
                        None => C64::new(0.0, 0.0),
                    };
                }
            }
        }
        Ok(out)
    }
    fn mul_right(&self, w: MatRef<'_>) -> Result<Mat> {
        check_dim(self.n, w.nrows())?;
        let mut out = &self.head * (self.head_y.adjoint() * w);
        if self.tau != 0.0 {
            let t = match &self.tail {
                Some(t) => t * w,
                None => w.to_owned(),
            };
            out += faer::Scale(C64::new(self.tau, 0.0)) * &t;
        }
        Ok(out)
    }
    fn mul_left(&self, w: MatRef<'_>) -> Result<Mat> {
        check_dim(self.n, w.ncols())?;
        let mut out = &(w * &self.head) * self.head_y.adjoint();
        if self.tau != 0.0 {
            let t = match &self.tail {
                Some(t) => w * t,
                None => w.to_owned(),
            };
            out += faer::Scale(C64::new(self.tau, 0.0)) * &t;
        }
        Ok(out)
    }
}

/// A Haar-distributed `n x n` unitary.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat {
    let g = Mat::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    let qr = g.qr();
    let mut q = qr.compute_Q();
    let r = qr.R();
    // Fixing the phases of diag(R) makes the distribution exactly Haar.
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for z in q.col_as_slice_mut(j) {
            *z *= ph;
        }
    }
    q
}

/// Builds `A = X diag(sigma) Y^*` and its exact coordinate model
/// (`X1 = X[:, :k]`, `Y1 = Y[:, :k]`, `A11 = diag(sigma[:k])`). The full
/// bases are attached when `n <= FULL_BASIS_LIMIT`.
pub fn synthetic_fourier_source(spec: &SyntheticModelSpec) -> Result<(SyntheticSource, CoordinateModel)> {
    spec.validate()?;
    let n = spec.n;
    let s = &spec.singular_values;
    let tau = s[n - 1];
    let h = s.iter().rposition(|&v| v != tau).map_or(0, |p| p + 1);
    let cols_needed = h.max(spec.k);
    let want_full = n <= FULL_BASIS_LIMIT;

    // Leading columns of X and Y, and the full bases when wanted.
    let (x_lead, y_lead, full, tail) = match spec.basis {
        Basis::UnitaryDft => {
            let take = if want_full { n } else { cols_needed };
            let idx: Vec<usize> = (0..take).collect();
            // F is symmetric, so its leading rows transpose to its leading columns.
            let f = dft_matrix_rows(n, &idx)?.transpose().to_owned();
            let lead = f.subcols(0, cols_needed).to_owned();
            let full = want_full.then(|| (f.clone(), f));
            (lead.clone(), lead, full, None)
        }
        Basis::IdentitySpike => {
            let lead = Mat::from_fn(n, cols_needed, |i, j| {
                C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
            });
            let full = want_full.then(|| (Mat::identity(n, n), Mat::identity(n, n)));
            (lead.clone(), lead, full, None)
        }
        Basis::HaarRandom { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = haar_unitary(n, &mut rng);
            let y = haar_unitary(n, &mut rng);
            let tail = (tau != 0.0).then(|| &x * y.adjoint());
            let xl = x.subcols(0, cols_needed).to_owned();
            let yl = y.subcols(0, cols_needed).to_owned();
            let full = want_full.then_some((x, y));
            (xl, yl, full, tail)
        }
    };

    let mut head = x_lead.subcols(0, h).to_owned();
    for p in 0..h {
        let w = s[p] - tau;
        for z in head.col_as_slice_mut(p) {
            *z *= w;
        }
    }
    let source = SyntheticSource {
        n,
        head,
        head_y: y_lead.subcols(0, h).to_owned(),
        tau,
        tail,
    };

    let k = spec.k;
    let a11 = Mat::from_fn(k, k, |i, j| C64::new(if i == j { s[i] } else { 0.0 }, 0.0));
    let x1 = x_lead.subcols(0, k).to_owned();
    let y1 = y_lead.subcols(0, k).to_owned();
    let model = match full {
        Some((x, y)) => CoordinateModel::with_bases(x, y, k, a11)?,
        None => CoordinateModel::new(x1, y1, a11)?,
    };
    Ok((source, model))
}

// ---------------------------------------------------------------- kernels

type Kernel = dyn Fn(f64, f64) -> C64 + Send + Sync;

/// `A[i, j] = scale * K(x_i, y_j) + E[i, j]`, with `E` an optional stored
/// additive term.
#[derive(Clone)]
pub struct KernelSource {
    kernel: Arc<Kernel>,
    grid_x: Vec<f64>,
    grid_y: Vec<f64>,
    scale: f64,
    additive: Option<Arc<Mat>>,
}

impl std::fmt::Debug for KernelSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelSource")
            .field("m", &self.grid_x.len())
            .field("n", &self.grid_y.len())
            .field("scale", &self.scale)
            .field("additive", &self.additive.is_some())
            .finish()
    }
}

pub fn kernel_source<K>(kernel: K, grid_x: Vec<f64>, grid_y: Vec<f64>, scale: f64) -> Result<KernelSource>
where
    K: Fn(f64, f64) -> C64 + Send + Sync + 'static,
{
    if grid_x.is_empty() || grid_y.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !scale.is_finite() {
        return Err(Error::InvalidParameter(format!("kernel scale must be finite, got {scale}")));
    }
    Ok(KernelSource {
        kernel: Arc::new(kernel),
        grid_x,
        grid_y,
        scale,
        additive: None,
    })
}

impl KernelSource {
    /// Adds a stored `m x n` term to every entry.
    pub fn with_additive(mut self, e: Mat) -> Result<Self> {
        check_dim(self.grid_x.len(), e.nrows())?;
        check_dim(self.grid_y.len(), e.ncols())?;
        self.additive = Some(Arc::new(e));
        Ok(self)
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn grid_x(&self) -> &[f64] {
        &self.grid_x
    }

    pub fn grid_y(&self) -> &[f64] {
        &self.grid_y
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl MatrixSource for KernelSource {
    fn nrows(&self) -> usize {
        self.grid_x.len()
    }
    fn ncols(&self) -> usize {
        self.grid_y.len()
    }
    fn entry(&self, i: usize, j: usize) -> C64 {
        let v = (self.kernel)(self.grid_x[i], self.grid_y[j]) * self.scale;
        match &self.additive {
            Some(e) => v + e[(i, j)],
            None => v,
        }
    }
}

/// `n` equispaced points on `[-1, 1]`, both endpoints included.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![-1.0],
        _ => (0..n)
            .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn unit_norm_scale(src: &KernelSource) -> Result<f64> {
    let dense = src.to_dense()?;
    let opts = PowerIteration {
        tol: 1e-14,
        max_iters: 2000,
    };
    let est = spectral_norm(&dense, opts, &mut ChaCha8Rng::seed_from_u64(0x5eed))?;
    if est.value == 0.0 {
        return Err(Error::InvalidParameter("kernel matrix is zero".into()));
    }
    Ok(1.0 / est.value)
}

/// `c exp(x y)` on the `n x n` uniform grid, `c` chosen so that `||A|| = 1`.
pub fn exp_xy_source(n: usize) -> Result<KernelSource> {
    let g = uniform_grid(n);
    let src = kernel_source(|x: f64, y: f64| C64::new((x * y).exp(), 0.0), g.clone(), g, 1.0)?;
    let c = unit_norm_scale(&src)?;
    Ok(src.with_scale(c))
}

/// `T_d(x)` for `|x| <= 1`.
pub fn chebyshev_t(d: usize, x: f64) -> f64 {
    let (mut t0, mut t1) = (1.0, x);
    if d == 0 {
        return t0;
    }
    for _ in 1..d {
        let t2 = 2.0 * x * t1 - t0;
        t0 = t1;
        t1 = t2;
    }
    t1
}

/// Parameters of the Chebyshev-sum test kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevSum {
    /// `c[i-1][j-1]` multiplies `T_i(x) T_j(y)`, `1 <= i, j <= 6`, already
    /// normalized so the smooth part has unit norm.
    pub coefficients: Vec<Vec<f64>>,
    pub seed: u64,
}

/// `sum_{1<=i,j<=6} c_ij T_i(x) T_j(y) + 1e-3 T_10(x) T_10(y) + 1e-9 N` on
/// the `n x n` uniform grid. The `c_ij` are seeded standard normals rescaled
/// so the first sum has unit norm; `N` is a seeded standard Gaussian matrix.
pub fn chebyshev_sum_source(n: usize, seed: u64) -> Result<(KernelSource, ChebyshevSum)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..6).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let g = uniform_grid(n);
    let smooth = |c: Vec<Vec<f64>>| {
        move |x: f64, y: f64| {
            let tx: Vec<f64> = (1..=6).map(|d| chebyshev_t(d, x)).collect();
            let ty: Vec<f64> = (1..=6).map(|d| chebyshev_t(d, y)).collect();
            let mut v = 0.0;
            for (ci, xi) in c.iter().zip(&tx) {
                for (cij, yj) in ci.iter().zip(&ty) {
                    v += cij * xi * yj;
                }
            }
            v
        }
    };
    let probe_fn = smooth(raw.clone());
    let probe = kernel_source(move |x, y| C64::new(probe_fn(x, y), 0.0), g.clone(), g.clone(), 1.0)?;
    let c = unit_norm_scale(&probe)?;
    let coefficients: Vec<Vec<f64>> = raw
        .iter()
        .map(|r| r.iter().map(|v| v * c).collect())
        .collect();

    let f = smooth(coefficients.clone());
    let kernel = move |x: f64, y: f64| {
        C64::new(f(x, y) + 1e-3 * chebyshev_t(10, x) * chebyshev_t(10, y), 0.0)
    };
    let noise = Mat::from_fn(n, n, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        C64::new(1e-9 * z, 0.0)
    });
    let src = kernel_source(kernel, g.clone(), g, 1.0)?.with_additive(noise)?;
    Ok((src, ChebyshevSum { coefficients, seed }))
}

/// Unitary DFT matrix entry, used by tests and oracles.
pub fn dft_entry(n: usize, j: usize, l: usize) -> C64 {
    let jl = ((j as u128 * l as u128) % n as u128) as f64;
    let t = -2.0 * PI * jl / n as f64;
    C64::from_polar(1.0 / (n as f64).sqrt(), t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::coherence;
    use crate::linalg::{max_abs, norm2};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn synthetic_blocks_match_entries() {
        for basis in [Basis::UnitaryDft, Basis::HaarRandom { seed: 4 }, Basis::IdentitySpike] {
            let spec = SyntheticModelSpec::log_spaced(24, 4, 1e-3, basis);
            let (a, _) = synthetic_fourier_source(&spec).unwrap();
            let rows = [3, 0, 3, 17, 23];
            let cols = [5, 5, 12, 3];
            let b = a.submatrix(&rows, &cols).unwrap();
            for (p, &i) in rows.iter().enumerate() {
                for (q, &j) in cols.iter().enumerate() {
                    assert!((b[(p, q)] - a.entry(i, j)).norm() < 1e-14);
                }
            }
            assert!(a.submatrix(&[24], &[0]).is_err());
        }
    }

    #[test]
    fn dense_one_by_one() {
        let s = dense_source(vec![vec![c(5.0)]]).unwrap();
        assert_eq!((s.nrows(), s.ncols()), (1, 1));
        assert_eq!(s.entry(0, 0), c(5.0));
        assert!(s.has_fast_matvec());
    }

    #[test]
    fn dense_identity() {
        let s = dense_source(vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]]).unwrap();
        assert_eq!(s.entry(0, 1), c(0.0));
        assert_eq!(s.entry(1, 1), c(1.0));
    }

    #[test]
    fn dense_errors() {
        assert!(matches!(dense_source(vec![]), Err(Error::EmptyInput)));
        let ragged = vec![vec![c(1.0), c(2.0)], vec![c(1.0)], vec![c(1.0), c(2.0)]];
        assert!(matches!(dense_source(ragged), Err(Error::Ragged { row: 1, .. })));
    }

    #[test]
    fn submatrix_checks() {
        let s = dense_source(vec![vec![c(1.0), c(f64::NAN)]]).unwrap();
        assert!(s.submatrix(&[0], &[0]).is_ok());
        assert!(matches!(s.submatrix(&[0], &[1]), Err(Error::NonFinite { row: 0, col: 1 })));
        assert!(matches!(s.submatrix(&[1], &[0]), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn default_products_match_dense() {
        let g = uniform_grid(70);
        let k = kernel_source(|x, y| C64::new(x - 2.0 * y, x * y), g.clone(), g[..65].to_vec(), 0.5).unwrap();
        let d = k.to_dense().unwrap();
        let w = Mat::from_fn(65, 3, |i, j| c((i * 3 + j) as f64 * 0.01));
        let v = Mat::from_fn(2, 70, |i, j| C64::new(i as f64, j as f64 * 0.1));
        assert!(max_abs((&k.mul_right(w.as_ref()).unwrap() - &d * &w).as_ref()) < 1e-12);
        assert!(max_abs((&k.mul_left(v.as_ref()).unwrap() - &v * &d).as_ref()) < 1e-12);
    }

    #[test]
    fn counting() {
        let s = CountingSource::new(dense_source(vec![vec![c(1.0); 4]; 3]).unwrap());
        s.submatrix(&[0, 1], &[0, 2, 3]).unwrap();
        assert_eq!(s.reads(), 6);
        s.entry(0, 0);
        assert_eq!(s.reads(), 7);
        s.reset();
        assert_eq!(s.reads(), 0);
    }

    #[test]
    fn rank_one_dft_magnitudes() {
        let spec = SyntheticModelSpec {
            n: 4,
            k: 1,
            singular_values: vec![1.0, 0.0, 0.0, 0.0],
            basis: Basis::UnitaryDft,
        };
        let (a, _) = synthetic_fourier_source(&spec).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((a.entry(i, j).norm() - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn toy_spectrum() {
        let spec = SyntheticModelSpec::log_spaced(301, 9, 1e-15, Basis::UnitaryDft);
        let s = &spec.singular_values;
        assert_eq!(s[0], 1.0);
        assert!((s[8] - 1e-15).abs() < 1e-28);
        assert!((s[1] - 10f64.powf(-15.0 / 8.0)).abs() < 1e-16);
        assert!(s[9..].iter().all(|&v| v == 1e-15));
        let (a, model) = synthetic_fourier_source(&spec).unwrap();
        let sv = a.to_dense().unwrap().singular_values().unwrap();
        for p in 0..20 {
            assert!((sv[p] - s[p]).abs() <= 1e-13, "sigma {p}");
        }
        assert_eq!(model.a11[(8, 8)], c(1e-15));
        assert!((coherence(model.x1.as_ref()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_spike_coherence() {
        let spec = SyntheticModelSpec::exact_rank(16, 1, Basis::IdentitySpike);
        let (_, model) = synthetic_fourier_source(&spec).unwrap();
        assert_eq!(model.x1[(0, 0)], c(1.0));
        assert!((coherence(model.x1.as_ref()).unwrap() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn k_above_n_rejected() {
        let mut spec = SyntheticModelSpec::two_level(4, 2, 0.1, Basis::UnitaryDft);
        spec.k = 5;
        assert!(synthetic_fourier_source(&spec).is_err());
        let mut bad = SyntheticModelSpec::two_level(4, 2, 0.1, Basis::UnitaryDft);
        bad.singular_values[3] = 0.5;
        assert!(synthetic_fourier_source(&bad).is_err());
    }

    /// Dense `X diag(s) Y^*` from the attached bases.
    fn dense_model(model: &CoordinateModel, s: &[f64]) -> Mat {
        let (x, y) = model.bases.as_ref().unwrap();
        let mut xs = x.clone();
        for (p, &v) in s.iter().enumerate() {
            for z in xs.col_as_slice_mut(p) {
                *z *= v;
            }
        }
        &xs * y.adjoint()
    }

    #[test]
    fn lazy_entries_match_dense_product() {
        for basis in [Basis::UnitaryDft, Basis::HaarRandom { seed: 3 }, Basis::IdentitySpike] {
            let spec = SyntheticModelSpec::log_spaced(64, 5, 1e-6, basis);
            let (a, model) = synthetic_fourier_source(&spec).unwrap();
            let oracle = dense_model(&model, &spec.singular_values);
            let d = a.to_dense().unwrap();
            assert!(max_abs((&d - &oracle).as_ref()) <= 1e-12, "{basis:?}");
            let w = Mat::from_fn(64, 2, |i, j| C64::new(i as f64, j as f64));
            let fast = a.mul_right(w.as_ref()).unwrap();
            assert!(max_abs((&fast - &d * &w).as_ref()) <= 1e-11);
            let fast = a.mul_left(w.transpose()).unwrap();
            assert!(max_abs((&fast - w.transpose() * &d).as_ref()) <= 1e-11);
        }
    }

    #[test]
    fn dft_factor_magnitudes_and_reconstruction_512() {
        let spec = SyntheticModelSpec::log_spaced(512, 9, 1e-8, Basis::UnitaryDft);
        let (a, model) = synthetic_fourier_source(&spec).unwrap();
        let (x, _) = model.bases.as_ref().unwrap();
        let target = 1.0 / 512f64.sqrt();
        for j in 0..512 {
            for z in x.col_as_slice(j) {
                assert!((z.norm() - target).abs() <= 1e-14 * target);
            }
        }
        let oracle = dense_model(&model, &spec.singular_values);
        assert!(max_abs((&a.to_dense().unwrap() - &oracle).as_ref()) <= 1e-12);
        assert!((dft_entry(512, 3, 7) - x[(3, 7)]).norm() < 1e-15);
    }

    #[test]
    fn large_model_skips_full_bases() {
        let spec = SyntheticModelSpec::two_level(1600, 9, 1e-8, Basis::UnitaryDft);
        let (_, model) = synthetic_fourier_source(&spec).unwrap();
        assert!(model.bases.is_none());
        assert_eq!(model.x1.ncols(), 9);
    }

    #[test]
    fn constant_kernel() {
        let k = kernel_source(|_, _| c(1.0), uniform_grid(3), uniform_grid(5), 1.0).unwrap();
        let d = k.to_dense().unwrap();
        assert!(max_abs((&d - Mat::from_fn(3, 5, |_, _| c(1.0))).as_ref()) == 0.0);
    }

    #[test]
    fn kernel_errors() {
        assert!(kernel_source(|_, _| c(1.0), vec![], vec![0.0], 1.0).is_err());
        let k = kernel_source(|x, _| c(1.0 / (x + 1.0)), uniform_grid(3), uniform_grid(3), 1.0).unwrap();
        assert!(matches!(k.rows(&[0]), Err(Error::NonFinite { row: 0, .. })));
    }

    #[test]
    fn kernel_is_pure() {
        let f = |x: f64, y: f64| C64::new((x * y).sin(), x);
        let a = kernel_source(f, uniform_grid(20), uniform_grid(20), 2.0).unwrap();
        let b = kernel_source(f, uniform_grid(20), uniform_grid(20), 2.0).unwrap();
        assert_eq!(a.to_dense().unwrap(), b.to_dense().unwrap());
    }

    #[test]
    fn grid_endpoints() {
        let g = uniform_grid(5);
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn exp_xy_unit_norm() {
        let a = exp_xy_source(300).unwrap();
        let n = norm2(a.to_dense().unwrap().as_ref()).unwrap();
        assert!((n - 1.0).abs() < 1e-10);
    }

    #[test]
    fn chebyshev_values() {
        for &x in &[-1.0, -0.3, 0.0, 0.7, 1.0] {
            let t = f64::acos(x);
            for d in 0..12 {
                assert!((chebyshev_t(d, x) - (d as f64 * t).cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chebyshev_sum_is_reproducible_and_normalized() {
        let (a, meta) = chebyshev_sum_source(200, 17).unwrap();
        let (b, _) = chebyshev_sum_source(200, 17).unwrap();
        let da = a.to_dense().unwrap();
        assert_eq!(da, b.to_dense().unwrap());
        assert_eq!(meta.coefficients.len(), 6);
        let n = norm2(da.as_ref()).unwrap();
        assert!((n - 1.0).abs() < 5e-3, "norm {n}");
    }
}
