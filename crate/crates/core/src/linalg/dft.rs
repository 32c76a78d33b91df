use std::f64::consts::PI;

use rand::Rng;
use rustfft::FftPlanner;

use crate::{Error, Mat, Result, C64};

/// Rows of the unitary DFT matrix, `F[j, l] = n^{-1/2} exp(-2 pi i j l / n)`.
pub fn dft_matrix_rows(n: usize, rows: &[usize]) -> Result<Mat> {
    if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
        return Err(Error::IndexOutOfRange { index: bad, bound: n });
    }
    let scale = 1.0 / (n as f64).sqrt();
    // Reducing j*l mod n first keeps the phase argument small and exact.
    Ok(Mat::from_fn(rows.len(), n, |a, l| {
        let jl = ((rows[a] as u128 * l as u128) % n as u128) as f64;
        let t = -2.0 * PI * jl / n as f64;
        C64::new(scale * t.cos(), scale * t.sin())
    }))
}

/// Replaces every column `x` of `m` with `F x`.
pub fn apply_dft_columns(m: &mut Mat) {
    let n = m.nrows();
    if n == 0 {
        return;
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let scale = 1.0 / (n as f64).sqrt();
    let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for j in 0..m.ncols() {
        let col = m.col_as_slice_mut(j);
        fft.process_with_scratch(col, &mut scratch);
        for z in col.iter_mut() {
            *z *= scale;
        }
    }
}

/// Independent equiprobable signs, `d_i` in `{+1, -1}`.
pub fn random_sign_diagonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}
