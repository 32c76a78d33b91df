use std::borrow::Cow;

use rand::Rng;

use super::{LowRankFactorization, SkeletonDecomposition};
use crate::diagnostics::SourceMap;
use crate::linalg::{spectral_norm, LinearMap, NormEstimate, PowerIteration};
use crate::matsource::MatrixSource;
use crate::{Error, Mat, Result, C64};

/// Largest matrix [`reconstruct_dense`] will materialize.
pub const DENSE_LIMIT: usize = 100_000_000;

/// Anything that approximates a source matrix as a product of two factors.
pub trait Approximant {
    fn dims(&self) -> (usize, usize);

    /// Factors whose product is the approximation.
    fn operator<'s, S: MatrixSource + ?Sized>(&'s self, a: &S) -> Result<ApproxOperator<'s>>;
}

/// `left * core * right` (or `left * right` without a core), applied
/// factor by factor.
#[derive(Clone, Debug)]
pub struct ApproxOperator<'a> {
    pub left: Cow<'a, Mat>,
    pub core: Option<Cow<'a, Mat>>,
    pub right: Cow<'a, Mat>,
}

fn check_source<S: MatrixSource + ?Sized>(dims: (usize, usize), a: &S) -> Result<()> {
    if a.nrows() != dims.0 {
        return Err(Error::DimensionMismatch {
            expected: dims.0,
            found: a.nrows(),
        });
    }
    if a.ncols() != dims.1 {
        return Err(Error::DimensionMismatch {
            expected: dims.1,
            found: a.ncols(),
        });
    }
    Ok(())
}

impl Approximant for SkeletonDecomposition {
    fn dims(&self) -> (usize, usize) {
        self.dims
    }

    /// `A[:, C'] Z' A[R', :]` over the distinct indices `C'`, `R'`, where
    /// `Z'` sums the entries of `Z` belonging to repeated draws.
    fn operator<'s, S: MatrixSource + ?Sized>(&'s self, a: &S) -> Result<ApproxOperator<'s>> {
        check_source(self.dims, a)?;
        let mc = self.cols.multiplicity();
        let mr = self.rows.multiplicity();
        let mut core = Mat::zeros(mc.unique.len(), mr.unique.len());
        for (q, &b) in mr.position.iter().enumerate() {
            for (p, &a) in mc.position.iter().enumerate() {
                core[(a, b)] += self.core[(p, q)];
            }
        }
        Ok(ApproxOperator {
            left: Cow::Owned(a.cols(&mc.unique)?),
            core: Some(Cow::Owned(core)),
            right: Cow::Owned(a.rows(&mr.unique)?),
        })
    }
}

impl Approximant for LowRankFactorization {
    fn dims(&self) -> (usize, usize) {
        (self.left.nrows(), self.right.ncols())
    }

    fn operator<'s, S: MatrixSource + ?Sized>(&'s self, a: &S) -> Result<ApproxOperator<'s>> {
        check_source(self.dims(), a)?;
        Ok(ApproxOperator {
            left: Cow::Borrowed(&self.left),
            core: None,
            right: Cow::Borrowed(&self.right),
        })
    }
}

impl LinearMap for ApproxOperator<'_> {
    fn nrows(&self) -> usize {
        self.left.nrows()
    }
    fn ncols(&self) -> usize {
        self.right.ncols()
    }
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        let mut t = self.right.apply(x)?;
        if let Some(core) = &self.core {
            t = core.apply(&t)?;
        }
        self.left.apply(&t)
    }
    fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        let mut t = self.left.apply_adjoint(y)?;
        if let Some(core) = &self.core {
            t = core.apply_adjoint(&t)?;
        }
        self.right.apply_adjoint(&t)
    }
}

impl ApproxOperator<'_> {
    pub fn to_dense(&self) -> Mat {
        match &self.core {
            Some(core) => self.left.as_ref() * (core.as_ref() * self.right.as_ref()),
            None => self.left.as_ref() * self.right.as_ref(),
        }
    }
}

/// Materializes the approximation, refusing beyond [`DENSE_LIMIT`] entries.
pub fn reconstruct_dense<P, S>(approx: &P, a: &S) -> Result<Mat>
where
    P: Approximant + ?Sized,
    S: MatrixSource + ?Sized,
{
    let (m, n) = approx.dims();
    let entries = m.saturating_mul(n);
    if entries > DENSE_LIMIT {
        return Err(Error::TooLarge {
            entries,
            limit: DENSE_LIMIT,
        });
    }
    Ok(approx.operator(a)?.to_dense())
}

/// Applies the approximation to `v` without forming it.
pub fn apply_to_vector<P, S>(approx: &P, a: &S, v: &[C64]) -> Result<Vec<C64>>
where
    P: Approximant + ?Sized,
    S: MatrixSource + ?Sized,
{
    let (_, n) = approx.dims();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    approx.operator(a)?.apply(v)
}

struct Difference<'a> {
    a: &'a dyn LinearMap,
    b: &'a dyn LinearMap,
}

impl LinearMap for Difference<'_> {
    fn nrows(&self) -> usize {
        self.a.nrows()
    }
    fn ncols(&self) -> usize {
        self.a.ncols()
    }
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        let mut y = self.a.apply(x)?;
        let z = self.b.apply(x)?;
        y.iter_mut().zip(z).for_each(|(p, q)| *p -= q);
        Ok(y)
    }
    fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        let mut x = self.a.apply_adjoint(y)?;
        let z = self.b.apply_adjoint(y)?;
        x.iter_mut().zip(z).for_each(|(p, q)| *p -= q);
        Ok(x)
    }
}

/// `||A - approx||_2` by power iteration. Sources without fast products
/// should be materialized by the caller; they are read through block
/// products otherwise.
pub fn approximation_error<P, S, R>(approx: &P, a: &S, opts: PowerIteration, rng: &mut R) -> Result<NormEstimate>
where
    P: Approximant + ?Sized,
    S: MatrixSource + ?Sized,
    R: Rng + ?Sized,
{
    let op = approx.operator(a)?;
    let amap = SourceMap(a);
    let diff = Difference { a: &amap, b: &op };
    spectral_norm(&diff, opts, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, norm2};
    use crate::matsource::{dense_source, DenseSource};
    use crate::sampling::trial_rng;
    use crate::skeleton::{skeleton_colsvd, skeleton_uniform_k3, AlgorithmTag};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(m, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn zero_factorization() {
        let a = DenseSource::from_mat(random(4, 6, 1)).unwrap();
        let f = LowRankFactorization::zero(4, 6, AlgorithmTag::Colsvd);
        let r = reconstruct_dense(&f, &a).unwrap();
        assert_eq!((r.nrows(), r.ncols()), (4, 6));
        assert_eq!(max_abs(r.as_ref()), 0.0);
        let y = apply_to_vector(&f, &a, &[C64::new(1.0, 0.0); 6]).unwrap();
        assert!(y.iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn ones_skeleton_applies_to_e1() {
        let a = dense_source(vec![vec![C64::new(1.0, 0.0); 5]; 7]).unwrap();
        let s = skeleton_uniform_k3(&a, 3, 0.5, &mut trial_rng(3, 0)).unwrap();
        let mut e1 = vec![C64::new(0.0, 0.0); 5];
        e1[0] = C64::new(1.0, 0.0);
        let y = apply_to_vector(&s, &a, &e1).unwrap();
        assert!(y.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-12));
        let zero = apply_to_vector(&s, &a, &[C64::new(0.0, 0.0); 5]).unwrap();
        assert!(zero.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn columns_match_coordinate_vectors() {
        let a = DenseSource::from_mat(&random(12, 3, 2) * &random(3, 9, 3)).unwrap();
        let s = skeleton_uniform_k3(&a, 6, 1e-6, &mut trial_rng(4, 0)).unwrap();
        let f = skeleton_colsvd(&a, 6, 1e-6, &mut trial_rng(4, 1)).unwrap();
        let rs = reconstruct_dense(&s, &a).unwrap();
        let rf = reconstruct_dense(&f, &a).unwrap();
        for j in 0..9 {
            let mut e = vec![C64::new(0.0, 0.0); 9];
            e[j] = C64::new(1.0, 0.0);
            let ys = apply_to_vector(&s, &a, &e).unwrap();
            let yf = apply_to_vector(&f, &a, &e).unwrap();
            for i in 0..12 {
                assert!((ys[i] - rs[(i, j)]).norm() < 1e-12);
                assert!((yf[i] - rf[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_errors() {
        let a = DenseSource::from_mat(random(4, 4, 4)).unwrap();
        let s = skeleton_uniform_k3(&a, 2, 0.1, &mut trial_rng(0, 0)).unwrap();
        assert!(apply_to_vector(&s, &a, &[C64::new(0.0, 0.0); 3]).is_err());
        let b = DenseSource::from_mat(random(5, 4, 4)).unwrap();
        assert!(reconstruct_dense(&s, &b).is_err());
    }

    #[test]
    fn size_guard() {
        let f = LowRankFactorization::zero(20_000, 20_000, AlgorithmTag::Colsvd);
        let a = DenseSource::from_mat(random(2, 2, 0)).unwrap();
        assert!(matches!(reconstruct_dense(&f, &a), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn power_error_matches_dense() {
        let a = DenseSource::from_mat(random(30, 25, 5)).unwrap();
        let s = skeleton_uniform_k3(&a, 10, 1e-3, &mut trial_rng(5, 0)).unwrap();
        let exact = norm2((&reconstruct_dense(&s, &a).unwrap() - a.as_mat()).as_ref()).unwrap();
        let est = approximation_error(&s, &a, PowerIteration::default(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(((est.value - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn merged_duplicates_match_plain_product() {
        let a = DenseSource::from_mat(random(16, 12, 6)).unwrap();
        let s = skeleton_uniform_k3(&a, 12, 1e-8, &mut trial_rng(6, 0)).unwrap();
        assert!(s.cols.multiplicity().unique.len() < 12);
        let plain = &(&a.cols(s.cols.indices()).unwrap() * &s.core) * &a.rows(s.rows.indices()).unwrap();
        let merged = reconstruct_dense(&s, &a).unwrap();
        let scale = max_abs(plain.as_ref());
        assert!(max_abs((&plain - &merged).as_ref()) <= 1e-12 * scale.max(1.0));
    }
}
