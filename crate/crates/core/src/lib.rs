//! Randomized skeleton (CUR) decompositions.
//!
//! A skeleton decomposition approximates `A` by `A[:, C] * Z * A[R, :]`, where
//! `R` and `C` are sampled row and column indices and `Z` is a small core
//! matrix. The main algorithm samples rows and columns uniformly and computes
//! `Z` as a thresholded pseudoinverse of `A[R, C]`, reading only `O(l^2)`
//! entries of `A`.
//!
//! Modules:
//! - [`matsource`]: read access to test and application matrices.
//! - [`linalg`]: SVD, thresholded pseudoinverse, pivoted QR selection,
//!   power iteration, DFT rows.
//! - [`sampling`]: reproducible uniform index sampling.
//! - [`skeleton`]: the factorization algorithms and their application.
//! - [`diagnostics`]: coherence, error measures and the lift-lemma oracles.
//! - [`bench`]: experiment runners behind the `skeletonlab` CLI.

pub mod bench;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod matsource;
pub mod sampling;
pub mod skeleton;

pub use error::{Error, Result};

/// Scalar type used throughout. Real inputs embed with zero imaginary part.
pub type C64 = num_complex::Complex64;

/// Dense column-major matrix.
pub type Mat = faer::Mat<C64>;

/// Borrowed view of a dense matrix.
pub type MatRef<'a> = faer::MatRef<'a, C64>;
