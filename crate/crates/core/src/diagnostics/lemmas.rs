//! Numerical evaluation of the lift inequalities. Each check computes both
//! sides with dense spectral norms; the inequalities are theorems, so a
//! negative slack beyond rounding indicates a linear-algebra defect.
//!
//! Transposes of the real-valued statements become conjugate transposes.

use serde::Serialize;

use crate::linalg::{norm2, pinv, select_cols, select_rows, svd};
use crate::sampling::IndexSample;
use crate::{Error, Mat, MatRef, Result};

use super::require_orthonormal;

/// `lhs <= rhs`, with `slack = rhs - lhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl InequalityReport {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            slack: rhs - lhs,
        }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.slack >= -tol
    }
}

/// The seven-term bound, with its individual terms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowColReport {
    pub report: InequalityReport,
    pub terms: [f64; 7],
}

/// The projection bound and its squared strengthening.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProjectionReport {
    pub plain: InequalityReport,
    pub squared: InequalityReport,
}

/// Splits a unitary `Y` into `(Y1, Y2)` after `k` columns.
fn split(y: MatRef<'_>, k: usize) -> Result<(Mat, Mat)> {
    if y.nrows() != y.ncols() {
        return Err(Error::NotSquare {
            rows: y.nrows(),
            cols: y.ncols(),
        });
    }
    if k < 1 || k > y.ncols() {
        return Err(Error::Rank {
            k,
            min: 1,
            max: y.ncols(),
        });
    }
    require_orthonormal(y)?;
    let n = y.ncols();
    Ok((y.subcols(0, k).to_owned(), y.subcols(k, n - k).to_owned()))
}

/// `||B^+||` for a tall `B`, failing unless `B` has full column rank.
fn pinv_norm_full_rank(b: MatRef<'_>) -> Result<f64> {
    if b.nrows() < b.ncols() {
        return Err(Error::RankDeficient);
    }
    let s = b.singular_values().map_err(|_| Error::SvdFailed)?;
    let (smax, smin) = (s[0], s[s.len() - 1]);
    let tol = b.nrows().max(b.ncols()) as f64 * f64::EPSILON * smax;
    if !(smin > tol) {
        return Err(Error::RankDeficient);
    }
    Ok(1.0 / smin)
}

fn check_sample(s: &IndexSample, n: usize) -> Result<()> {
    if s.range() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: s.range(),
        });
    }
    Ok(())
}

/// `||A|| <= ||Y1C^+|| ||A_:C|| + ||Y1C^+|| ||A Y2 Y2C^*|| + ||A Y2||`.
pub fn check_lift_column(a: MatRef<'_>, y: MatRef<'_>, k: usize, c: &IndexSample) -> Result<InequalityReport> {
    if y.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            found: y.nrows(),
        });
    }
    check_sample(c, a.ncols())?;
    let (y1, y2) = split(y, k)?;
    let p = pinv_norm_full_rank(select_rows(y1.as_ref(), c.indices()).as_ref())?;
    let a_c = select_cols(a, c.indices());
    let ay2 = a * &y2;
    let y2c = select_rows(y2.as_ref(), c.indices());
    let rhs = p * norm2(a_c.as_ref())? + p * norm2((&ay2 * y2c.adjoint()).as_ref())? + norm2(ay2.as_ref())?;
    Ok(InequalityReport::new(norm2(a)?, rhs))
}

/// Row form: `||A|| <= ||X1R^+|| ||A_R:|| + ||X1R^+|| ||X2R X2^* A|| + ||X2^* A||`.
pub fn check_lift_row(a: MatRef<'_>, x: MatRef<'_>, k: usize, r: &IndexSample) -> Result<InequalityReport> {
    // The column lemma applied to A^* with Y = X.
    check_lift_column(a.adjoint().to_owned().as_ref(), x, k, r)
}

/// Seven-term bound on `||A||` through `||A_RC||`.
pub fn check_lift_rowcol(
    a: MatRef<'_>,
    x: MatRef<'_>,
    y: MatRef<'_>,
    k: usize,
    r: &IndexSample,
    c: &IndexSample,
) -> Result<RowColReport> {
    if x.nrows() != a.nrows() || y.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: x.nrows(),
        });
    }
    check_sample(r, a.nrows())?;
    check_sample(c, a.ncols())?;
    let (x1, x2) = split(x, k)?;
    let (y1, y2) = split(y, k)?;
    let (ri, ci) = (r.indices(), c.indices());
    let x1r = select_rows(x1.as_ref(), ri);
    let x2r = select_rows(x2.as_ref(), ri);
    let y1c = select_rows(y1.as_ref(), ci);
    let y2c = select_rows(y2.as_ref(), ci);
    let px = pinv_norm_full_rank(x1r.as_ref())?;
    let py = pinv_norm_full_rank(y1c.as_ref())?;

    let a_rc = select_cols(select_rows(a, ri).as_ref(), ci);
    let x1a = x1.adjoint() * a;
    let x2a = x2.adjoint() * a;
    let x1ay2 = &x1a * &y2;
    let x2ay1 = &x2a * &y1;
    let x2ay2 = &x2a * &y2;

    let terms = [
        px * py * norm2(a_rc.as_ref())?,
        px * py * norm2((&(&x2r * &x2ay1) * y1c.adjoint()).as_ref())?,
        px * py * norm2((&(&x1r * &x1ay2) * y2c.adjoint()).as_ref())?,
        px * py * norm2((&(&x2r * &x2ay2) * y2c.adjoint()).as_ref())?,
        px * norm2((&x1r * &x1ay2).as_ref())?,
        py * norm2((&x2ay1 * y1c.adjoint()).as_ref())?,
        norm2(x2ay2.as_ref())?,
    ];
    Ok(RowColReport {
        report: InequalityReport::new(norm2(a)?, terms.iter().sum()),
        terms,
    })
}

/// `A - A_:C A_:C^+ A`, formed as `A - U1 (U1^* A)` with `U1` the left
/// singular vectors `pinv` keeps.
fn projection_residual(a: MatRef<'_>, c: &IndexSample) -> Result<Mat> {
    let a_c = select_cols(a, c.indices());
    let dec = svd(a_c.as_ref())?;
    let Some(&s1) = dec.sigma.first() else {
        return Ok(a.to_owned());
    };
    let cutoff = a_c.nrows().max(a_c.ncols()) as f64 * f64::EPSILON * s1;
    let dec = dec.with_threshold(cutoff);
    let u1 = dec.u.subcols(0, dec.kept);
    Ok(a - u1 * (u1.adjoint() * a))
}

/// `||A - A_:C A_:C^+ A|| <= ||Y1C^+|| ||A Y2 Y2C^*|| + ||A Y2||`, and
/// `||A - A_:C A_:C^+ A||^2 <= ||A Y2 Y2C^* (Y1C^*)^+||^2 + ||A Y2||^2`.
pub fn check_lift_projection(a: MatRef<'_>, y: MatRef<'_>, k: usize, c: &IndexSample) -> Result<ProjectionReport> {
    if y.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            found: y.nrows(),
        });
    }
    check_sample(c, a.ncols())?;
    let (y1, y2) = split(y, k)?;
    let y1c = select_rows(y1.as_ref(), c.indices());
    let p = pinv_norm_full_rank(y1c.as_ref())?;
    let lhs = norm2(projection_residual(a, c)?.as_ref())?;

    let ay2 = a * &y2;
    let y2c = select_rows(y2.as_ref(), c.indices());
    let tail_c = &ay2 * y2c.adjoint();
    let n_ay2 = norm2(ay2.as_ref())?;
    let plain = InequalityReport::new(lhs, p * norm2(tail_c.as_ref())? + n_ay2);

    let y1c_adj_pinv = pinv(y1c.adjoint().to_owned().as_ref())?;
    let t = norm2((&tail_c * &y1c_adj_pinv).as_ref())?;
    let squared = InequalityReport::new(lhs * lhs, t * t + n_ay2 * n_ay2);
    Ok(ProjectionReport { plain, squared })
}
