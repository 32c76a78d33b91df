use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Mat, MatRef, Result, C64};

/// A linear map given only through its action and its adjoint action.
pub trait LinearMap {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`, `x.len() == ncols`.
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>>;
    /// `x = A^* y`, `y.len() == nrows`.
    fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>>;
}

impl LinearMap for MatRef<'_> {
    fn nrows(&self) -> usize {
        MatRef::nrows(self)
    }
    fn ncols(&self) -> usize {
        MatRef::ncols(self)
    }
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        dense_apply(*self, x, false)
    }
    fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        dense_apply(*self, y, true)
    }
}

impl LinearMap for Mat {
    fn nrows(&self) -> usize {
        Mat::nrows(self)
    }
    fn ncols(&self) -> usize {
        Mat::ncols(self)
    }
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        dense_apply(self.as_ref(), x, false)
    }
    fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        dense_apply(self.as_ref(), y, true)
    }
}

pub(crate) fn dense_apply(m: MatRef<'_>, x: &[C64], adjoint: bool) -> Result<Vec<C64>> {
    let (rows, cols) = if adjoint {
        (m.ncols(), m.nrows())
    } else {
        (m.nrows(), m.ncols())
    };
    if x.len() != cols {
        return Err(Error::DimensionMismatch {
            expected: cols,
            found: x.len(),
        });
    }
    let xv = faer::ColRef::from_slice(x);
    let y = if adjoint { m.adjoint() * xv } else { m * xv };
    debug_assert_eq!(y.nrows(), rows);
    Ok((0..rows).map(|i| y[i]).collect())
}

/// Power iteration settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerIteration {
    /// Stop once successive estimates agree to this relative tolerance.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 500,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Estimates `||A||_2` by power iteration on `A^* A` from a Gaussian start.
///
/// The estimate is `||A v||` for the current unit vector `v`, which never
/// exceeds the true norm. When `max_iters` runs out the best estimate so far
/// is returned with `converged == false`.
pub fn spectral_norm<L, R>(map: &L, opts: PowerIteration, rng: &mut R) -> Result<NormEstimate>
where
    L: LinearMap + ?Sized,
    R: Rng + ?Sized,
{
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "power iteration tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let n = map.ncols();
    if n == 0 || map.nrows() == 0 {
        return Ok(NormEstimate {
            value: 0.0,
            converged: true,
            iterations: 0,
        });
    }
    let mut v: Vec<C64> = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect();
    let nv = vec_norm(&v);
    v.iter_mut().for_each(|z| *z /= nv);

    let mut best = 0.0f64;
    let mut prev = f64::NAN;
    for it in 1..=opts.max_iters {
        let w = map.apply(&v)?;
        let est = vec_norm(&w);
        if !est.is_finite() {
            return Err(Error::InvalidParameter("non-finite value in power iteration".into()));
        }
        best = best.max(est);
        if est == 0.0 {
            return Ok(NormEstimate {
                value: best,
                converged: true,
                iterations: it,
            });
        }
        if (est - prev).abs() <= opts.tol * est {
            return Ok(NormEstimate {
                value: best,
                converged: true,
                iterations: it,
            });
        }
        prev = est;
        let u = map.apply_adjoint(&w)?;
        let nu = vec_norm(&u);
        if nu == 0.0 {
            return Ok(NormEstimate {
                value: best,
                converged: true,
                iterations: it,
            });
        }
        v = u.into_iter().map(|z| z / nu).collect();
    }
    Ok(NormEstimate {
        value: best,
        converged: false,
        iterations: opts.max_iters,
    })
}
