//! Coherence, model error measures, and numerical checks of the lift lemmas
//! and row-sampling bounds.

mod legendre;
mod lemmas;
mod montecarlo;

pub use legendre::{discrete_legendre_basis, legendre_p};
pub use lemmas::{
    check_lift_column, check_lift_projection, check_lift_row, check_lift_rowcol, InequalityReport,
    ProjectionReport, RowColReport,
};
pub use montecarlo::{montecarlo_sampling_bounds, SamplingBoundReport};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::{max_abs, orthonormality_defect, spectral_norm, LinearMap, PowerIteration};
use crate::matsource::MatrixSource;
use crate::{Error, Mat, MatRef, Result, C64};

/// Tolerance on `||X^* X - I||_max` accepted as orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// `A = X1 A11 Y1^* + (residual)`, with the full unitary bases when known.
#[derive(Clone, Debug)]
pub struct CoordinateModel {
    pub x1: Mat,
    pub y1: Mat,
    pub a11: Mat,
    pub bases: Option<(Mat, Mat)>,
}

fn require_orthonormal(x: MatRef<'_>) -> Result<()> {
    let deviation = orthonormality_defect(x);
    if deviation > ORTHONORMAL_TOL || !deviation.is_finite() {
        return Err(Error::NotOrthonormal { deviation });
    }
    Ok(())
}

impl CoordinateModel {
    pub fn new(x1: Mat, y1: Mat, a11: Mat) -> Result<Self> {
        let k = x1.ncols();
        if y1.ncols() != k || a11.nrows() != k || a11.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: y1.ncols(),
            });
        }
        require_orthonormal(x1.as_ref())?;
        require_orthonormal(y1.as_ref())?;
        Ok(Self {
            x1,
            y1,
            a11,
            bases: None,
        })
    }

    /// Takes `X1`, `Y1` as the first `k` columns of the square unitaries.
    pub fn with_bases(x: Mat, y: Mat, k: usize, a11: Mat) -> Result<Self> {
        if x.nrows() != x.ncols() {
            return Err(Error::NotSquare {
                rows: x.nrows(),
                cols: x.ncols(),
            });
        }
        if y.nrows() != y.ncols() {
            return Err(Error::NotSquare {
                rows: y.nrows(),
                cols: y.ncols(),
            });
        }
        if k > x.ncols().min(y.ncols()) {
            return Err(Error::Rank {
                k,
                min: 0,
                max: x.ncols().min(y.ncols()),
            });
        }
        let mut model = Self::new(
            x.subcols(0, k).to_owned(),
            y.subcols(0, k).to_owned(),
            a11,
        )?;
        require_orthonormal(x.as_ref())?;
        require_orthonormal(y.as_ref())?;
        model.bases = Some((x, y));
        Ok(model)
    }

    pub fn k(&self) -> usize {
        self.x1.ncols()
    }
}

/// `mu = n max |X_ij|^2` for column-orthonormal `X`.
pub fn coherence(x: MatRef<'_>) -> Result<f64> {
    require_orthonormal(x)?;
    let m = max_abs(x);
    Ok(x.nrows() as f64 * m * m)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorMeasures {
    /// `||A - X1 (X1^* A Y1) Y1^*||_2`.
    pub eps_k: f64,
    /// Sum of `|X^* A Y|` outside the leading `k x k` block. Needs full bases.
    pub eps1_k: Option<f64>,
    pub mu_x1: f64,
    pub mu_y1: f64,
    /// `sqrt(m n) / l`.
    pub lambda: f64,
    /// `sqrt(m / l)`.
    pub lambda_x: f64,
    /// `sqrt(n / l)`.
    pub lambda_y: f64,
    /// Whether the power iteration behind `eps_k` converged.
    pub converged: bool,
}

/// Applies a source through its block products.
pub(crate) struct SourceMap<'a, S: ?Sized>(pub &'a S);

impl<S: MatrixSource + ?Sized> LinearMap for SourceMap<'_, S> {
    fn nrows(&self) -> usize {
        self.0.nrows()
    }
    fn ncols(&self) -> usize {
        self.0.ncols()
    }
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        let w = faer::ColRef::from_slice(x).as_mat();
        let y = self.0.mul_right(w)?;
        Ok(y.col_as_slice(0).to_vec())
    }
    fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        let v: Vec<C64> = y.iter().map(|z| z.conj()).collect();
        let w = faer::ColRef::from_slice(&v).as_mat().transpose();
        let x = self.0.mul_left(w)?;
        Ok((0..x.ncols()).map(|j| x[(0, j)].conj()).collect())
    }
}

/// `A - X1 B Y1^*` as a linear map.
struct DeflatedMap<'a> {
    a: &'a dyn LinearMap,
    x1: MatRef<'a>,
    y1: MatRef<'a>,
    b: MatRef<'a>,
}

impl LinearMap for DeflatedMap<'_> {
    fn nrows(&self) -> usize {
        self.a.nrows()
    }
    fn ncols(&self) -> usize {
        self.a.ncols()
    }
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        let mut y = self.a.apply(x)?;
        let t = self.x1 * (self.b * (self.y1.adjoint() * faer::ColRef::from_slice(x)));
        y.iter_mut().enumerate().for_each(|(i, z)| *z -= t[i]);
        Ok(y)
    }
    fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        let mut x = self.a.apply_adjoint(y)?;
        let t = self.y1 * (self.b.adjoint() * (self.x1.adjoint() * faer::ColRef::from_slice(y)));
        x.iter_mut().enumerate().for_each(|(i, z)| *z -= t[i]);
        Ok(x)
    }
}

/// Sum of `|C_ij|` over entries outside the leading `k x k` block.
pub fn tail_coefficient_sum(coef: MatRef<'_>, k: usize) -> f64 {
    let mut total = 0.0;
    for j in 0..coef.ncols() {
        for i in 0..coef.nrows() {
            if i >= k || j >= k {
                total += coef[(i, j)].norm();
            }
        }
    }
    total
}

/// Model error measures for `A` against the coordinate model at sample
/// size `l`. Sources without fast products are materialized first.
pub fn error_measures<S: MatrixSource + ?Sized>(
    a: &S,
    model: &CoordinateModel,
    l: usize,
) -> Result<ErrorMeasures> {
    let (m, n) = (a.nrows(), a.ncols());
    if model.x1.nrows() != m || model.y1.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: model.x1.nrows(),
        });
    }
    if l == 0 {
        return Err(Error::SampleSize { l, min: 1, max: m.min(n) });
    }
    let dense = if a.has_fast_matvec() {
        None
    } else {
        Some(a.to_dense()?)
    };
    let amap: &dyn LinearMap = match &dense {
        Some(d) => d,
        None => &SourceMap(a),
    };
    let ay1 = match &dense {
        Some(d) => d * &model.y1,
        None => a.mul_right(model.y1.as_ref())?,
    };
    let b = model.x1.adjoint() * &ay1;
    let deflated = DeflatedMap {
        a: amap,
        x1: model.x1.as_ref(),
        y1: model.y1.as_ref(),
        b: b.as_ref(),
    };
    let est = spectral_norm(
        &deflated,
        PowerIteration::default(),
        &mut ChaCha8Rng::seed_from_u64(0xe95),
    )?;

    let eps1_k = match &model.bases {
        Some((x, y)) => {
            let ay = match &dense {
                Some(d) => d * y,
                None => a.mul_right(y.as_ref())?,
            };
            let coef = x.adjoint() * &ay;
            Some(tail_coefficient_sum(coef.as_ref(), model.k()))
        }
        None => None,
    };
    let lf = l as f64;
    Ok(ErrorMeasures {
        eps_k: est.value,
        eps1_k,
        mu_x1: coherence(model.x1.as_ref())?,
        mu_y1: coherence(model.y1.as_ref())?,
        lambda: ((m * n) as f64).sqrt() / lf,
        lambda_x: (m as f64 / lf).sqrt(),
        lambda_y: (n as f64 / lf).sqrt(),
        converged: est.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dft_matrix_rows;
    use crate::matsource::{synthetic_fourier_source, Basis, DenseSource, SyntheticModelSpec};
    use rand::Rng;

    fn unitary(n: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(n, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .qr()
            .compute_Q()
    }

    #[test]
    fn dft_coherence_is_one() {
        for (n, k) in [(8, 3), (64, 64), (301, 9)] {
            let idx: Vec<usize> = (0..k).collect();
            let f = dft_matrix_rows(n, &idx).unwrap().transpose().to_owned();
            assert!((coherence(f.as_ref()).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_coherence_is_n() {
        let e = Mat::identity(40, 3);
        assert!((coherence(e.as_ref()).unwrap() - 40.0).abs() < 1e-12);
    }

    #[test]
    fn coherence_rejects_non_orthonormal() {
        let x = Mat::from_fn(4, 1, |_, _| C64::new(1.0, 0.0));
        assert!(matches!(coherence(x.as_ref()), Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn haar_coherence_recorded() {
        let q = unitary(256, 5);
        let mu = coherence(q.subcols(0, 8)).unwrap();
        assert!(mu >= 1.0 && mu <= 256.0);
    }

    #[test]
    fn coherence_invariant_under_reorder_and_signs() {
        let q = unitary(30, 6).subcols(0, 5).to_owned();
        let mut p = Mat::from_fn(30, 5, |i, j| q[(i, 4 - j)]);
        for z in p.col_as_slice_mut(2) {
            *z = -*z;
        }
        let a = coherence(q.as_ref()).unwrap();
        let b = coherence(p.as_ref()).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn exact_model_has_zero_errors() {
        let x = unitary(12, 1);
        let y = unitary(12, 2);
        let k = 3;
        let a11 = Mat::from_fn(k, k, |i, j| C64::new((i + 2 * j) as f64, 1.0));
        let a = &(x.subcols(0, k) * &a11) * y.subcols(0, k).adjoint();
        let model = CoordinateModel::with_bases(x, y, k, a11).unwrap();
        let e = error_measures(&DenseSource::from_mat(a).unwrap(), &model, 6).unwrap();
        assert!(e.eps_k < 1e-12);
        assert!(e.eps1_k.unwrap() < 1e-11);
    }

    #[test]
    fn single_coefficient() {
        let x = unitary(10, 3);
        let y = unitary(10, 4);
        let k = 2;
        let mut coef = Mat::zeros(10, 10);
        coef[(0, 0)] = C64::new(1.0, 0.0);
        coef[(5, 1)] = C64::new(0.0, -0.25);
        let a = &(&x * &coef) * y.adjoint();
        let a11 = coef.submatrix(0, 0, k, k).to_owned();
        let model = CoordinateModel::with_bases(x, y, k, a11).unwrap();
        let e = error_measures(&DenseSource::from_mat(a).unwrap(), &model, 5).unwrap();
        assert!((e.eps_k - 0.25).abs() < 1e-10);
        assert!((e.eps1_k.unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn svd_model_errors_and_lambdas() {
        let spec = SyntheticModelSpec::log_spaced(64, 4, 1e-3, Basis::HaarRandom { seed: 9 });
        let (a, model) = synthetic_fourier_source(&spec).unwrap();
        let e = error_measures(&a, &model, 16).unwrap();
        assert!((e.eps_k - 1e-3).abs() < 1e-12);
        let tail: f64 = spec.singular_values[4..].iter().sum();
        assert!((e.eps1_k.unwrap() - tail).abs() < 1e-10);
        assert!((e.lambda - 4.0).abs() < 1e-15);
        assert!((e.lambda_x - 2.0).abs() < 1e-15 && (e.lambda_y - 2.0).abs() < 1e-15);
        assert!(e.mu_x1 >= 1.0 && e.mu_y1 >= 1.0);
        let eps1 = e.eps1_k.unwrap();
        assert!(e.eps_k <= eps1 * (1.0 + 1e-9) && eps1 <= 64.0 * 64.0 * e.eps_k * (1.0 + 1e-9));
    }

    #[test]
    fn without_bases_only_eps_k() {
        let spec = SyntheticModelSpec::two_level(1100, 3, 1e-6, Basis::UnitaryDft);
        let (a, model) = synthetic_fourier_source(&spec).unwrap();
        let e = error_measures(&a, &model, 40).unwrap();
        assert!(e.eps1_k.is_none());
        assert!((e.eps_k - 1e-6).abs() < 1e-14);
        assert!((e.mu_x1 - 1.0).abs() < 1e-10);
    }
}
