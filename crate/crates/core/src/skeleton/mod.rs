//! Skeleton factorizations `A ~ A[:, C] Z A[R, :]` and related low-rank forms.

mod apply;
mod colsvd;
mod io;
mod mixing;
mod rrqr;
mod uniform;

pub use apply::{apply_to_vector, approximation_error, reconstruct_dense, Approximant, ApproxOperator, DENSE_LIMIT};
pub use colsvd::skeleton_colsvd;
pub use io::{read_json, write_json, SkeletonFile};
pub use mixing::{dft_sign_mix, skeleton_mixed_wrapper, MixedSource};
pub use rrqr::{skeleton_rows_rrqr_nk2, skeleton_rrqr_mnk};
pub use uniform::{
    heuristic_delta, heuristic_delta_from_spectrum, skeleton_uniform, skeleton_uniform_k3, DeltaPolicy,
    UniformOptions,
};

use serde::{Deserialize, Serialize};

use crate::sampling::IndexSample;
use crate::{Error, Mat, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmTag {
    /// Uniform sampling with a thresholded pseudoinverse of `A[R, C]`.
    UniformK3,
    /// Sampling plus pivoted QR on both sides, core from `A` itself.
    RrqrMnk,
    /// Row sampling plus pivoted QR on the sampled rows.
    RowsRrqrNk2,
    /// Column SVD variant returning `U1 U1[R, :]^+ A[R, :]`.
    Colsvd,
    /// Uniform sampling of the sign-and-DFT mixed matrix.
    MixedWrapper,
}

impl AlgorithmTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::UniformK3 => "uniform_k3",
            Self::RrqrMnk => "rrqr_mnk",
            Self::RowsRrqrNk2 => "rows_rrqr_nk2",
            Self::Colsvd => "colsvd",
            Self::MixedWrapper => "mixed_wrapper",
        }
    }
}

impl std::fmt::Display for AlgorithmTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AlgorithmTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            Self::UniformK3,
            Self::RrqrMnk,
            Self::RowsRrqrNk2,
            Self::Colsvd,
            Self::MixedWrapper,
        ]
        .into_iter()
        .find(|t| t.as_str() == s)
        .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

/// `A ~ A[:, C] Z A[R, :]` with `Z` of size `|C| x |R|`.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonDecomposition {
    pub rows: IndexSample,
    pub cols: IndexSample,
    pub core: Mat,
    /// `(m, n)` of the source.
    pub dims: (usize, usize),
    pub delta_used: f64,
    pub algorithm: AlgorithmTag,
    pub seed: Option<u64>,
}

impl SkeletonDecomposition {
    pub fn new(
        rows: IndexSample,
        cols: IndexSample,
        core: Mat,
        dims: (usize, usize),
        delta_used: f64,
        algorithm: AlgorithmTag,
    ) -> Result<Self> {
        if core.nrows() != cols.len() || core.ncols() != rows.len() {
            return Err(Error::DimensionMismatch {
                expected: cols.len(),
                found: core.nrows(),
            });
        }
        if rows.range() != dims.0 || cols.range() != dims.1 {
            return Err(Error::DimensionMismatch {
                expected: dims.0,
                found: rows.range(),
            });
        }
        Ok(Self {
            rows,
            cols,
            core,
            dims,
            delta_used,
            algorithm,
            seed: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// `A ~ left * right`, `left` m x r and `right` r x n.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankFactorization {
    pub left: Mat,
    pub right: Mat,
    pub algorithm: AlgorithmTag,
}

impl LowRankFactorization {
    pub fn new(left: Mat, right: Mat, algorithm: AlgorithmTag) -> Result<Self> {
        if left.ncols() != right.nrows() {
            return Err(Error::DimensionMismatch {
                expected: left.ncols(),
                found: right.nrows(),
            });
        }
        Ok(Self { left, right, algorithm })
    }

    /// The zero factorization of an `m x n` matrix.
    pub fn zero(m: usize, n: usize, algorithm: AlgorithmTag) -> Self {
        Self {
            left: Mat::zeros(m, 0),
            right: Mat::zeros(0, n),
            algorithm,
        }
    }

    pub fn rank(&self) -> usize {
        self.left.ncols()
    }
}

/// Checks `1 <= l <= bound`.
pub(crate) fn check_l(l: usize, bound: usize) -> Result<()> {
    if l < 1 || l > bound {
        return Err(Error::SampleSize { l, min: 1, max: bound });
    }
    Ok(())
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidDelta(delta));
    }
    Ok(())
}
