use crate::linalg::{check_finite, norm2};
use crate::{Error, MatRef, Result, C64};

/// Columns chosen by pivoted QR, with the measured projection residual.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnSelection {
    /// Selected column positions within the input, in pivot order.
    pub indices: Vec<usize>,
    /// `|| M - P M ||_2`, P the orthogonal projector onto the selected columns.
    pub residual_norm: f64,
    /// `sqrt(1 + 2k(l - k))` for `l` input columns.
    pub bound_factor: f64,
}

/// `f(k, l) = sqrt(1 + 2k(l - k))`.
pub fn bound_factor(k: usize, l: usize) -> f64 {
    let (k, l) = (k as f64, l as f64);
    (1.0 + 2.0 * k * (l - k)).sqrt()
}

/// Selects `k` columns of `m` by Householder QR with greedy column pivoting:
/// at each step the column with the largest residual norm is taken, ties
/// going to the lowest index. Residual column norms are recomputed at every
/// step rather than downdated.
pub fn rrqr_select(m: MatRef<'_>, k: usize) -> Result<ColumnSelection> {
    let (nr, nc) = (m.nrows(), m.ncols());
    if k < 1 || k > nc {
        return Err(Error::Rank { k, min: 1, max: nc });
    }
    check_finite(m)?;
    let mut a = m.to_owned();
    let mut perm: Vec<usize> = (0..nc).collect();

    for j in 0..k {
        let mut best = j;
        let mut best_norm = -1.0;
        for c in j..nc {
            let s: f64 = if j < nr {
                a.col_as_slice(c)[j..].iter().map(|z| z.norm_sqr()).sum()
            } else {
                0.0
            };
            if s > best_norm {
                best_norm = s;
                best = c;
            }
        }
        if best != j {
            perm.swap(j, best);
            for i in 0..nr {
                let t = a[(i, j)];
                a[(i, j)] = a[(i, best)];
                a[(i, best)] = t;
            }
        }
        if j >= nr || best_norm <= 0.0 {
            continue;
        }

        // Householder vector annihilating a[j+1.., j].
        let mut v: Vec<C64> = a.col_as_slice(j)[j..].to_vec();
        let xnorm = best_norm.sqrt();
        let phase = if v[0].norm() > 0.0 {
            v[0] / v[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        v[0] += phase * xnorm;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        for c in j..nc {
            let col = &mut a.col_as_slice_mut(c)[j..];
            let w: C64 = v.iter().zip(col.iter()).map(|(x, y)| x.conj() * y).sum();
            let w2 = w * 2.0;
            for (y, x) in col.iter_mut().zip(v.iter()) {
                *y -= x * w2;
            }
        }
    }

    let residual_norm = if k >= nr || k >= nc {
        0.0
    } else {
        norm2(a.as_ref().submatrix(k, k, nr - k, nc - k))?
    };
    perm.truncate(k);
    Ok(ColumnSelection {
        indices: perm,
        residual_norm,
        bound_factor: bound_factor(k, nc),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::select_cols;
    use crate::Mat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(m: usize, n: usize, rng: &mut ChaCha8Rng) -> Mat {
        Mat::from_fn(m, n, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
    }

    /// `|| M - Q Q^* M ||` with Q an orthonormal basis of the chosen columns.
    fn projection_residual(m: &Mat, cols: &[usize]) -> f64 {
        let q = select_cols(m.as_ref(), cols).qr().compute_thin_Q();
        let r = m - &q * (q.adjoint() * m);
        norm2(r.as_ref()).unwrap()
    }

    #[test]
    fn all_columns_zero_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = gaussian(6, 4, &mut rng);
        let sel = rrqr_select(m.as_ref(), 4).unwrap();
        let mut idx = sel.indices.clone();
        idx.sort();
        assert_eq!(idx, vec![0, 1, 2, 3]);
        assert_eq!(sel.residual_norm, 0.0);
    }

    #[test]
    fn greedy_pivot_on_norms() {
        let mut m = Mat::zeros(2, 2);
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(1, 1)] = C64::new(2.0, 0.0);
        let sel = rrqr_select(m.as_ref(), 1).unwrap();
        assert_eq!(sel.indices, vec![1]);
        assert!((sel.residual_norm - 1.0).abs() < 1e-15);
        assert!((sel.bound_factor - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let m = Mat::from_fn(3, 3, |_, _| C64::new(1.0, 0.0));
        assert_eq!(rrqr_select(m.as_ref(), 1).unwrap().indices, vec![0]);
    }

    #[test]
    fn exact_rank_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = &gaussian(30, 5, &mut rng) * &gaussian(5, 20, &mut rng);
        let sel = rrqr_select(m.as_ref(), 5).unwrap();
        let s1 = norm2(m.as_ref()).unwrap();
        assert!(sel.residual_norm <= 1e-10 * s1);
    }

    #[test]
    fn k_out_of_range() {
        let m = Mat::zeros(3, 3);
        assert!(rrqr_select(m.as_ref(), 0).is_err());
        assert!(rrqr_select(m.as_ref(), 4).is_err());
    }

    #[test]
    fn wide_input_with_k_above_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = gaussian(2, 6, &mut rng);
        let sel = rrqr_select(m.as_ref(), 4).unwrap();
        assert_eq!(sel.indices.len(), 4);
        assert_eq!(sel.residual_norm, 0.0);
    }

    mod prop {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn residual_matches_projection_and_bound(seed in any::<u64>(), m in 4usize..16, n in 2usize..12, kk in 1usize..12) {
                let k = kk.min(n);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = gaussian(m, n, &mut rng);
                let sel = rrqr_select(a.as_ref(), k).unwrap();
                let mut uniq = sel.indices.clone();
                uniq.sort();
                uniq.dedup();
                prop_assert_eq!(uniq.len(), k);
                prop_assert!(sel.indices.iter().all(|&i| i < n));
                let direct = projection_residual(&a, &sel.indices);
                prop_assert!((direct - sel.residual_norm).abs() <= 1e-10 * (1.0 + direct));
                // Gaussian inputs are far from adversarial for greedy pivoting.
                let sv = a.singular_values().unwrap();
                let next = sv.get(k).copied().unwrap_or(0.0);
                prop_assert!(sel.residual_norm <= sel.bound_factor * next + 1e-10);
            }
        }
    }
}
