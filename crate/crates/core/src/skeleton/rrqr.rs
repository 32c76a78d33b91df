use rand::Rng;

use super::{check_l, AlgorithmTag, SkeletonDecomposition};
use crate::linalg::{pinv, rrqr_select, select_cols, select_rows};
use crate::matsource::MatrixSource;
use crate::sampling::{sample_uniform, IndexSample};
use crate::{Error, Result};

fn check_k(k: usize, l: usize) -> Result<()> {
    if k < 1 || k > l {
        return Err(Error::Rank { k, min: 1, max: l });
    }
    Ok(())
}

/// Samples `l` rows and columns, narrows each side to `k` by pivoted QR
/// (`C'` from `A[:, C]`, `R'` from `A[R, :]^*`), and sets
/// `Z = A[:, C']^+ (A A[R', :]^+)`. Reads all of `A` once through a block
/// product.
pub fn skeleton_rrqr_mnk<S, R>(a: &S, l: usize, k: usize, rng: &mut R) -> Result<SkeletonDecomposition>
where
    S: MatrixSource + ?Sized,
    R: Rng + ?Sized,
{
    let (m, n) = (a.nrows(), a.ncols());
    check_l(l, m.min(n))?;
    check_k(k, l)?;
    let rows = sample_uniform(m, l, rng)?;
    let cols = sample_uniform(n, l, rng)?;

    let a_c = a.cols(cols.indices())?;
    let sel_c = rrqr_select(a_c.as_ref(), k)?;
    let a_r = a.rows(rows.indices())?;
    let sel_r = rrqr_select(a_r.adjoint().to_owned().as_ref(), k)?;

    let c2: Vec<usize> = sel_c.indices.iter().map(|&p| cols.indices()[p]).collect();
    let r2: Vec<usize> = sel_r.indices.iter().map(|&p| rows.indices()[p]).collect();
    let a_c2 = select_cols(a_c.as_ref(), &sel_c.indices);
    let a_r2 = select_rows(a_r.as_ref(), &sel_r.indices);

    let w = pinv(a_r2.as_ref())?;
    let aw = a.mul_right(w.as_ref())?;
    let core = &pinv(a_c2.as_ref())? * &aw;
    SkeletonDecomposition::new(
        IndexSample::new(r2, m, true)?,
        IndexSample::new(c2, n, true)?,
        core,
        (m, n),
        0.0,
        AlgorithmTag::RrqrMnk,
    )
}

/// Samples `l` rows, picks `k` columns of `A[R, :]` by pivoted QR, and sets
/// `Z = A[R, C']^+`. Reads exactly `l n` entries.
pub fn skeleton_rows_rrqr_nk2<S, R>(a: &S, l: usize, k: usize, rng: &mut R) -> Result<SkeletonDecomposition>
where
    S: MatrixSource + ?Sized,
    R: Rng + ?Sized,
{
    let (m, n) = (a.nrows(), a.ncols());
    check_l(l, m)?;
    check_k(k, l.min(n))?;
    let rows = sample_uniform(m, l, rng)?;
    let a_r = a.rows(rows.indices())?;
    let sel = rrqr_select(a_r.as_ref(), k)?;
    let a_rc = select_cols(a_r.as_ref(), &sel.indices);
    let core = pinv(a_rc.as_ref())?;
    SkeletonDecomposition::new(
        rows,
        IndexSample::new(sel.indices, n, false)?,
        core,
        (m, n),
        0.0,
        AlgorithmTag::RowsRrqrNk2,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, norm2};
    use crate::matsource::{dense_source, synthetic_fourier_source, Basis, CountingSource, SyntheticModelSpec};
    use crate::sampling::trial_rng;
    use crate::skeleton::reconstruct_dense;
    use crate::C64;

    #[test]
    fn all_ones() {
        let a = dense_source(vec![vec![C64::new(1.0, 0.0); 12]; 10]).unwrap();
        let s = skeleton_rrqr_mnk(&a, 5, 1, &mut trial_rng(1, 0)).unwrap();
        assert_eq!((s.core.nrows(), s.core.ncols()), (1, 1));
        let e = &reconstruct_dense(&s, &a).unwrap() - a.as_mat();
        assert!(max_abs(e.as_ref()) <= 1e-12);
        let s = skeleton_rows_rrqr_nk2(&a, 5, 1, &mut trial_rng(1, 1)).unwrap();
        assert_eq!((s.core.nrows(), s.core.ncols()), (1, 5));
        let e = &reconstruct_dense(&s, &a).unwrap() - a.as_mat();
        assert!(max_abs(e.as_ref()) <= 1e-12);
    }

    #[test]
    fn exact_rank_dft_model() {
        let spec = SyntheticModelSpec::exact_rank(128, 4, Basis::UnitaryDft);
        let (a, _) = synthetic_fourier_source(&spec).unwrap();
        let dense = a.to_dense().unwrap();
        for seed in 0..5 {
            let s = skeleton_rrqr_mnk(&a, 40, 4, &mut trial_rng(seed, 0)).unwrap();
            let e = norm2((&reconstruct_dense(&s, &a).unwrap() - &dense).as_ref()).unwrap();
            assert!(e <= 1e-9, "mnk {seed}: {e}");
            let s = skeleton_rows_rrqr_nk2(&a, 40, 4, &mut trial_rng(seed, 1)).unwrap();
            let e = norm2((&reconstruct_dense(&s, &a).unwrap() - &dense).as_ref()).unwrap();
            assert!(e <= 1e-9, "nk2 {seed}: {e}");
        }
    }

    #[test]
    fn rows_variant_reads_l_times_n() {
        let spec = SyntheticModelSpec::exact_rank(100, 3, Basis::UnitaryDft);
        let (a, _) = synthetic_fourier_source(&spec).unwrap();
        let a = CountingSource::new(a);
        skeleton_rows_rrqr_nk2(&a, 20, 3, &mut trial_rng(2, 0)).unwrap();
        assert_eq!(a.reads(), 20 * 100);
    }

    #[test]
    fn k_range() {
        let a = dense_source(vec![vec![C64::new(1.0, 0.0); 6]; 6]).unwrap();
        let mut rng = trial_rng(0, 0);
        assert!(skeleton_rrqr_mnk(&a, 3, 4, &mut rng).is_err());
        assert!(skeleton_rrqr_mnk(&a, 3, 0, &mut rng).is_err());
        assert!(skeleton_rows_rrqr_nk2(&a, 7, 1, &mut rng).is_err());
    }
}
