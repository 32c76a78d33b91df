use rand::Rng;

use super::{check_delta, check_l, AlgorithmTag, LowRankFactorization};
use crate::linalg::{pinv, select_rows, svd};
use crate::matsource::MatrixSource;
use crate::sampling::sample_uniform;
use crate::Result;

/// Samples `R`, `C`; splits the SVD of `A[:, C]` at `delta` into
/// `U1 L1 V1^*` (kept) and the rest; returns `left = U1 U1[R, :]^+`,
/// `right = A[R, :]`. With nothing kept the result is the zero
/// factorization.
pub fn skeleton_colsvd<S, R>(a: &S, l: usize, delta: f64, rng: &mut R) -> Result<LowRankFactorization>
where
    S: MatrixSource + ?Sized,
    R: Rng + ?Sized,
{
    let (m, n) = (a.nrows(), a.ncols());
    check_l(l, m.min(n))?;
    check_delta(delta)?;
    let rows = sample_uniform(m, l, rng)?;
    let cols = sample_uniform(n, l, rng)?;
    let dec = svd(a.cols(cols.indices())?.as_ref())?.with_threshold(delta);
    if dec.kept == 0 {
        return Ok(LowRankFactorization::zero(m, n, AlgorithmTag::Colsvd));
    }
    let u1 = dec.u.subcols(0, dec.kept);
    let u1r = select_rows(u1, rows.indices());
    let left = u1 * pinv(u1r.as_ref())?;
    let right = a.rows(rows.indices())?;
    LowRankFactorization::new(left, right, AlgorithmTag::Colsvd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, norm2};
    use crate::matsource::{dense_source, synthetic_fourier_source, Basis, SyntheticModelSpec};
    use crate::sampling::trial_rng;
    use crate::skeleton::reconstruct_dense;
    use crate::C64;

    #[test]
    fn large_delta_gives_zero() {
        let a = dense_source(vec![vec![C64::new(1.0, 0.0); 8]; 8]).unwrap();
        let f = skeleton_colsvd(&a, 4, 100.0, &mut trial_rng(0, 0)).unwrap();
        assert_eq!(f.rank(), 0);
        let r = reconstruct_dense(&f, &a).unwrap();
        assert_eq!(max_abs(r.as_ref()), 0.0);
        assert_eq!((r.nrows(), r.ncols()), (8, 8));
    }

    #[test]
    fn exact_rank_recovered() {
        let spec = SyntheticModelSpec::exact_rank(128, 5, Basis::UnitaryDft);
        let (a, _) = synthetic_fourier_source(&spec).unwrap();
        let dense = a.to_dense().unwrap();
        for seed in 0..5 {
            let f = skeleton_colsvd(&a, 50, 1e-12, &mut trial_rng(seed, 0)).unwrap();
            let e = norm2((&reconstruct_dense(&f, &a).unwrap() - &dense).as_ref()).unwrap();
            assert!(e <= 1e-8, "{seed}: {e}");
        }
    }
}
