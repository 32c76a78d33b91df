use crate::{Mat, C64};

/// `P_d(x)` by the three-term recurrence.
pub fn legendre_p(d: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if d == 0 {
        return p0;
    }
    for j in 1..d {
        let jf = j as f64;
        let p2 = ((2.0 * jf + 1.0) * x * p1 - jf * p0) / (jf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthogonalizes `v` against `basis` twice and normalizes it. Returns
/// `None` when `v` is numerically inside the span.
fn orthonormalize(v: &mut [f64], basis: &[Vec<f64>]) -> Option<()> {
    let start = norm(v);
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
    }
    let r = norm(v);
    if !(r > 1e-8 * start) {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= r);
    Some(())
}

/// Orthonormal `n x n` basis whose leading columns come from Legendre
/// polynomials `P_0, P_1, ...` evaluated on `grid` and orthonormalized by
/// modified Gram-Schmidt with reorthogonalization.
///
/// High-degree polynomials become numerically dependent on an equispaced
/// grid; once that happens the basis is completed with orthonormalized
/// coordinate vectors instead.
pub fn discrete_legendre_basis(grid: &[f64]) -> Mat {
    let n = grid.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut degree = 0;
    let mut polys_done = false;
    let mut next_unit = 0;
    while basis.len() < n {
        let mut v = if !polys_done && degree < n {
            let v: Vec<f64> = grid.iter().map(|&x| legendre_p(degree, x)).collect();
            degree += 1;
            v
        } else {
            let mut e = vec![0.0; n];
            e[next_unit] = 1.0;
            next_unit += 1;
            e
        };
        match orthonormalize(&mut v, &basis) {
            Some(()) => basis.push(v),
            None => polys_done = true,
        }
        if next_unit >= n && basis.len() < n {
            // Unreachable for a nonempty grid: the unit vectors span R^n.
            break;
        }
    }
    let mut out = Mat::zeros(n, n);
    for (j, q) in basis.iter().enumerate() {
        for (i, &v) in q.iter().enumerate() {
            out[(i, j)] = C64::new(v, 0.0);
        }
    }
    out
}
