//! Dense factorization kernels.

mod dft;
mod norm;
mod rrqr;
mod svd;

pub use dft::{apply_dft_columns, dft_matrix_rows, random_sign_diagonal};
pub use norm::{spectral_norm, LinearMap, NormEstimate, PowerIteration};
pub use rrqr::{bound_factor, rrqr_select, ColumnSelection};
pub use svd::{pinv, pinv_threshold, svd, TruncatedSvd};

use crate::{Error, Mat, MatRef, Result, C64};

/// Fails with the position of the first non-finite entry, if any.
pub fn check_finite(m: MatRef<'_>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Exact spectral norm from the singular values. Meant for small matrices.
pub fn norm2(m: MatRef<'_>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    check_finite(m)?;
    let s = m.singular_values().map_err(|_| Error::SvdFailed)?;
    Ok(s.first().copied().unwrap_or(0.0))
}

/// Largest entry modulus.
pub fn max_abs(m: MatRef<'_>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// Copies the listed rows of `m`, in order.
pub fn select_rows(m: MatRef<'_>, rows: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), m.ncols(), |a, j| m[(rows[a], j)])
}

/// Copies the listed columns of `m`, in order.
pub fn select_cols(m: MatRef<'_>, cols: &[usize]) -> Mat {
    Mat::from_fn(m.nrows(), cols.len(), |i, b| m[(i, cols[b])])
}

/// Column-orthonormality defect `max |X^* X - I|`.
pub fn orthonormality_defect(x: MatRef<'_>) -> f64 {
    let g = x.adjoint() * x;
    let mut worst = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}
