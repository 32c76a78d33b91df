use rand::Rng;

use super::{check_delta, check_l, skeleton_uniform_k3, AlgorithmTag, LowRankFactorization};
use crate::linalg::{apply_dft_columns, dft_matrix_rows, random_sign_diagonal};
use crate::matsource::{check_dim, check_indices, MatrixSource};
use crate::{Error, Mat, MatRef, Result, C64};

/// `U = F D X` with `D` a random sign diagonal.
pub fn dft_sign_mix<R: Rng + ?Sized>(x: MatRef<'_>, rng: &mut R) -> Result<Mat> {
    let d = random_sign_diagonal(x.nrows(), rng);
    let mut u = x.to_owned();
    scale_rows(&mut u, &d);
    apply_dft_columns(&mut u);
    Ok(u)
}

fn scale_rows(m: &mut Mat, d: &[f64]) {
    for j in 0..m.ncols() {
        for (z, &s) in m.col_as_slice_mut(j).iter_mut().zip(d) {
            *z *= s;
        }
    }
}

/// `F^* x = conj(F conj(x))` column by column.
fn apply_dft_adjoint_columns(m: &mut Mat) {
    for j in 0..m.ncols() {
        m.col_as_slice_mut(j).iter_mut().for_each(|z| *z = z.conj());
    }
    apply_dft_columns(m);
    for j in 0..m.ncols() {
        m.col_as_slice_mut(j).iter_mut().for_each(|z| *z = z.conj());
    }
}

/// `B = F D2 A D1 F^*` for square `A`, evaluated lazily.
///
/// A block `B[R, C]` costs one pass over `A` for `F[R, :] D2 A` followed by
/// `O(n)` work per entry.
pub struct MixedSource<'a, S: ?Sized> {
    a: &'a S,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl<'a, S: MatrixSource + ?Sized> MixedSource<'a, S> {
    pub fn new(a: &'a S, d1: Vec<f64>, d2: Vec<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::NotSquare { rows: n, cols: a.ncols() });
        }
        check_dim(n, d1.len())?;
        check_dim(n, d2.len())?;
        Ok(Self { a, d1, d2 })
    }

    /// `D1 F[C, :]^*`, `n x |C|`.
    fn right_factor(&self, cols: &[usize]) -> Result<Mat> {
        let fc = dft_matrix_rows(self.a.ncols(), cols)?;
        Ok(Mat::from_fn(fc.ncols(), fc.nrows(), |q, b| fc[(b, q)].conj() * self.d1[q]))
    }

    /// `F[R, :] D2 A`, `|R| x n`.
    pub fn left_rows(&self, rows: &[usize]) -> Result<Mat> {
        let fr = dft_matrix_rows(self.a.nrows(), rows)?;
        let v = Mat::from_fn(fr.nrows(), fr.ncols(), |a, p| fr[(a, p)] * self.d2[p]);
        self.a.mul_left(v.as_ref())
    }

    /// `A D1 F[C, :]^*`, `n x |C|`.
    pub fn right_cols(&self, cols: &[usize]) -> Result<Mat> {
        let w = self.right_factor(cols)?;
        self.a.mul_right(w.as_ref())
    }
}

impl<S: MatrixSource + ?Sized> MatrixSource for MixedSource<'_, S> {
    fn nrows(&self) -> usize {
        self.a.nrows()
    }
    fn ncols(&self) -> usize {
        self.a.ncols()
    }
    fn entry(&self, i: usize, j: usize) -> C64 {
        self.submatrix(&[i], &[j])
            .map(|m| m[(0, 0)])
            .unwrap_or(C64::new(f64::NAN, f64::NAN))
    }
    fn has_fast_matvec(&self) -> bool {
        self.a.has_fast_matvec()
    }
    fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<Mat> {
        check_indices(rows, self.nrows())?;
        check_indices(cols, self.ncols())?;
        Ok(&self.left_rows(rows)? * &self.right_factor(cols)?)
    }
    fn mul_right(&self, w: MatRef<'_>) -> Result<Mat> {
        check_dim(self.ncols(), w.nrows())?;
        // B W = F D2 A D1 (F^* W)
        let mut t = w.to_owned();
        apply_dft_adjoint_columns(&mut t);
        scale_rows(&mut t, &self.d1);
        let mut u = self.a.mul_right(t.as_ref())?;
        scale_rows(&mut u, &self.d2);
        apply_dft_columns(&mut u);
        Ok(u)
    }
    fn mul_left(&self, w: MatRef<'_>) -> Result<Mat> {
        check_dim(self.nrows(), w.ncols())?;
        // W B = (B^* W^*)^* with B^* = F D1 A^* D2 F^*
        let mut t = w.adjoint().to_owned();
        apply_dft_adjoint_columns(&mut t);
        scale_rows(&mut t, &self.d2);
        let mut u = self.a.mul_left(t.adjoint().to_owned().as_ref())?.adjoint().to_owned();
        scale_rows(&mut u, &self.d1);
        apply_dft_columns(&mut u);
        Ok(u.adjoint().to_owned())
    }
    fn to_dense(&self) -> Result<Mat> {
        let n = self.nrows();
        let eye = Mat::identity(n, n);
        self.mul_right(eye.as_ref())
    }
}

/// Runs the uniform skeleton on `B = F D2 A D1 F^*` and maps it back:
/// `A ~ (A D1 F[C, :]^*) Z (F[R, :] D2 A)`. Requires square `A`; each of
/// the two outer factors costs a pass over `A`.
pub fn skeleton_mixed_wrapper<S, R>(a: &S, l: usize, delta: f64, rng: &mut R) -> Result<LowRankFactorization>
where
    S: MatrixSource + ?Sized,
    R: Rng + ?Sized,
{
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NotSquare { rows: n, cols: a.ncols() });
    }
    check_l(l, n)?;
    check_delta(delta)?;
    let d1 = random_sign_diagonal(n, rng);
    let d2 = random_sign_diagonal(n, rng);
    let b = MixedSource::new(a, d1, d2)?;
    let s = skeleton_uniform_k3(&b, l, delta, rng)?;
    let left = &b.right_cols(s.cols.indices())? * &s.core;
    let right = b.left_rows(s.rows.indices())?;
    LowRankFactorization::new(left, right, AlgorithmTag::MixedWrapper)
}
