use crate::linalg::check_finite;
use crate::{Error, Mat, MatRef, Result};

/// Thin SVD restricted to the nonzero singular values, with a threshold
/// splitting the spectrum into kept (`sigma >= delta`) and dropped parts.
#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    /// m x r, orthonormal columns.
    pub u: Mat,
    /// r positive values, nonincreasing.
    pub sigma: Vec<f64>,
    /// n x r, orthonormal columns.
    pub v: Mat,
    pub delta: f64,
    pub kept: usize,
}

/// SVD of `m` keeping every nonzero singular value (`delta = 0`).
pub fn svd(m: MatRef<'_>) -> Result<TruncatedSvd> {
    check_finite(m)?;
    let (nr, nc) = (m.nrows(), m.ncols());
    if nr == 0 || nc == 0 {
        return Ok(TruncatedSvd {
            u: Mat::zeros(nr, 0),
            sigma: Vec::new(),
            v: Mat::zeros(nc, 0),
            delta: 0.0,
            kept: 0,
        });
    }
    let dec = m.thin_svd().map_err(|_| Error::SvdFailed)?;
    let s = dec.S().column_vector();
    let r = (0..s.nrows()).take_while(|&i| s[i].re > 0.0).count();
    let sigma: Vec<f64> = (0..r).map(|i| s[i].re).collect();
    let u = dec.U().subcols(0, r).to_owned();
    let v = dec.V().subcols(0, r).to_owned();
    Ok(TruncatedSvd {
        u,
        sigma,
        v,
        delta: 0.0,
        kept: r,
    })
}

impl TruncatedSvd {
    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    /// Re-splits the spectrum at `delta`. Values equal to `delta` are kept.
    pub fn with_threshold(mut self, delta: f64) -> Self {
        self.delta = delta;
        self.kept = self.sigma.iter().take_while(|&&s| s >= delta).count();
        self
    }

    /// `V_1 diag(1/sigma_1) U_1^*` over the kept components.
    pub fn pinv(&self) -> Mat {
        let k = self.kept;
        let mut vs = self.v.subcols(0, k).to_owned();
        for (j, &s) in self.sigma[..k].iter().enumerate() {
            let inv = 1.0 / s;
            for z in vs.col_as_slice_mut(j) {
                *z *= inv;
            }
        }
        &vs * self.u.subcols(0, k).adjoint()
    }

    /// `U diag(sigma) V^*` over all nonzero components.
    pub fn reconstruct(&self) -> Mat {
        let mut us = self.u.clone();
        for (j, &s) in self.sigma.iter().enumerate() {
            for z in us.col_as_slice_mut(j) {
                *z *= s;
            }
        }
        &us * self.v.adjoint()
    }
}

/// Regularized pseudoinverse: inverts the singular values `>= delta` and
/// zeroes the rest, so the result has norm at most `1/delta`.
pub fn pinv_threshold(m: MatRef<'_>, delta: f64) -> Result<Mat> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidDelta(delta));
    }
    Ok(svd(m)?.with_threshold(delta).pinv())
}

/// Moore-Penrose pseudoinverse with the usual machine-precision cutoff
/// `max(m, n) * eps * sigma_1`.
pub fn pinv(m: MatRef<'_>) -> Result<Mat> {
    let dec = svd(m)?;
    let Some(&s1) = dec.sigma.first() else {
        return Ok(Mat::zeros(m.ncols(), m.nrows()));
    };
    let cutoff = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * s1;
    Ok(dec.with_threshold(cutoff).pinv())
}
