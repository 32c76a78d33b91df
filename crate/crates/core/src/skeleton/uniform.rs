use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_delta, check_l, AlgorithmTag, SkeletonDecomposition};
use crate::linalg::svd;
use crate::matsource::MatrixSource;
use crate::sampling::{sample_indices, SamplingMode};
use crate::{Error, Mat, MatRef, Result};

/// How the pseudoinverse threshold is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaPolicy {
    Fixed(f64),
    /// `lambda * sigma_{k+1}(A[R, C])`, floored at `sqrt(eps) * sigma_1(A[R, C])`.
    Heuristic { k: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformOptions {
    pub delta: DeltaPolicy,
    pub sampling: SamplingMode,
}

impl UniformOptions {
    pub fn fixed(delta: f64) -> Self {
        Self {
            delta: DeltaPolicy::Fixed(delta),
            sampling: SamplingMode::WithReplacement,
        }
    }
}

/// `lambda * sigma_{k+1}(A_RC)` with `lambda = sqrt(m n) / l`. Zero when
/// `sigma_{k+1}` vanishes.
pub fn heuristic_delta(a_rc: MatRef<'_>, m: usize, n: usize, l: usize, k: usize) -> Result<f64> {
    let dim = a_rc.nrows().min(a_rc.ncols());
    if k >= dim {
        return Err(Error::Rank {
            k,
            min: 0,
            max: dim.saturating_sub(1),
        });
    }
    let s = a_rc.singular_values().map_err(|_| Error::SvdFailed)?;
    heuristic_delta_from_spectrum(&s, dim, m, n, l, k)
}

/// As [`heuristic_delta`], from the nonzero singular values of an
/// `A_RC` whose smaller dimension is `dim`.
pub fn heuristic_delta_from_spectrum(sigma: &[f64], dim: usize, m: usize, n: usize, l: usize, k: usize) -> Result<f64> {
    if k >= dim {
        return Err(Error::Rank {
            k,
            min: 0,
            max: dim.saturating_sub(1),
        });
    }
    let lambda = ((m as f64) * (n as f64)).sqrt() / l as f64;
    Ok(lambda * sigma.get(k).copied().unwrap_or(0.0))
}

/// Samples `l` rows and `l` columns uniformly with replacement and sets
/// `Z = pinv_threshold(A[R, C], delta)`.
pub fn skeleton_uniform_k3<S, R>(a: &S, l: usize, delta: f64, rng: &mut R) -> Result<SkeletonDecomposition>
where
    S: MatrixSource + ?Sized,
    R: Rng + ?Sized,
{
    skeleton_uniform(a, l, &UniformOptions::fixed(delta), rng)
}

/// Uniform skeleton with a chosen threshold policy and sampling mode.
///
/// Repeated draws give identical rows or columns of `A[R, C]`. Writing
/// `A[R, C] = Q_r M Q_c^T` with `Q_r`, `Q_c` column-orthonormal and `M` the
/// distinct-index block scaled by the square roots of the multiplicities,
/// `pinv_threshold(A[R, C]) = Q_c pinv_threshold(M) Q_r^T` exactly. Only the
/// distinct entries are read and the SVD is taken of `M`.
pub fn skeleton_uniform<S, R>(a: &S, l: usize, opts: &UniformOptions, rng: &mut R) -> Result<SkeletonDecomposition>
where
    S: MatrixSource + ?Sized,
    R: Rng + ?Sized,
{
    let (m, n) = (a.nrows(), a.ncols());
    check_l(l, m.min(n))?;
    match opts.delta {
        DeltaPolicy::Fixed(d) => check_delta(d)?,
        DeltaPolicy::Heuristic { k } if k >= l => {
            return Err(Error::Rank {
                k,
                min: 0,
                max: l - 1,
            })
        }
        DeltaPolicy::Heuristic { .. } => {}
    }
    let rows = sample_indices(m, l, opts.sampling, rng)?;
    let cols = sample_indices(n, l, opts.sampling, rng)?;
    let mr = rows.multiplicity();
    let mc = cols.multiplicity();

    let block = a.submatrix(&mr.unique, &mc.unique)?;
    let wr: Vec<f64> = mr.count.iter().map(|&c| (c as f64).sqrt()).collect();
    let wc: Vec<f64> = mc.count.iter().map(|&c| (c as f64).sqrt()).collect();
    let scaled = Mat::from_fn(block.nrows(), block.ncols(), |u, v| block[(u, v)] * (wr[u] * wc[v]));
    let dec = svd(scaled.as_ref())?;

    let delta = match opts.delta {
        DeltaPolicy::Fixed(d) => d,
        DeltaPolicy::Heuristic { k } => {
            let raw = heuristic_delta_from_spectrum(&dec.sigma, l, m, n, l, k)?;
            let s1 = dec.sigma.first().copied().unwrap_or(0.0);
            let floor = f64::EPSILON.sqrt() * s1;
            raw.max(floor).max(f64::MIN_POSITIVE)
        }
    };
    let zt = dec.with_threshold(delta).pinv();
    let core = Mat::from_fn(l, l, |p, q| {
        let (u, v) = (mc.position[p], mr.position[q]);
        zt[(u, v)] * (1.0 / (wc[u] * wr[v]))
    });
    SkeletonDecomposition::new(rows, cols, core, (m, n), delta, AlgorithmTag::UniformK3)
}
