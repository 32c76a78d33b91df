use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::select_rows;
use crate::matsource::{synthetic_fourier_source, Basis, SyntheticModelSpec};
use crate::sampling::{recommended_l, sample_uniform, trial_rng};
use crate::{Error, Result};

use super::coherence;

/// Outcome of repeated row sampling of a `mu`-coherent `n x k` basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplingBoundReport {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub trials: usize,
    pub mu: f64,
    /// Trials violating `||Y_C^+|| <= 1.53 sqrt(n/l)` or `||Y_C|| <= 1.31 sqrt(l/n)`.
    pub failures: usize,
    pub failure_rate: f64,
    /// `2 k n^{-2}`.
    pub bound: f64,
    /// Three binomial standard deviations at the bound.
    pub slack: f64,
    /// Whether `l >= 10 mu k ln n`, where the bound applies.
    pub in_regime: bool,
    /// `failure_rate <= bound + slack`. Only meaningful in regime.
    pub passed: bool,
}

/// Samples `l` rows of the first `k` basis columns in each trial and counts
/// violations of the two-sided norm event.
pub fn montecarlo_sampling_bounds<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    l: usize,
    basis: Basis,
    trials: usize,
    rng: &mut R,
) -> Result<SamplingBoundReport> {
    if k < 1 || k > n {
        return Err(Error::Rank { k, min: 1, max: n });
    }
    let mut spec = SyntheticModelSpec::exact_rank(n, k, basis);
    spec.singular_values.iter_mut().take(k).for_each(|s| *s = 1.0);
    let (_, model) = synthetic_fourier_source(&spec)?;
    let y = model.y1;
    let mu = coherence(y.as_ref())?;
    let master = rng.next_u64();

    let upper_pinv = 1.53 * (n as f64 / l as f64).sqrt();
    let upper = 1.31 * (l as f64 / n as f64).sqrt();
    let outcomes: Vec<Result<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(master, t as u64);
            let c = sample_uniform(n, l, &mut rng)?;
            let yc = select_rows(y.as_ref(), c.indices());
            if l < k {
                return Ok(false);
            }
            let s = yc.singular_values().map_err(|_| Error::SvdFailed)?;
            let (smax, smin) = (s[0], s[k - 1]);
            Ok(smin > 0.0 && 1.0 / smin <= upper_pinv && smax <= upper)
        })
        .collect();
    let mut failures = 0;
    for o in outcomes {
        if !o? {
            failures += 1;
        }
    }
    let bound = 2.0 * k as f64 / (n as f64 * n as f64);
    let p = bound.min(1.0);
    let slack = if trials > 0 {
        3.0 * (p * (1.0 - p) / trials as f64).sqrt()
    } else {
        0.0
    };
    let failure_rate = if trials > 0 {
        failures as f64 / trials as f64
    } else {
        0.0
    };
    Ok(SamplingBoundReport {
        n,
        k,
        l,
        trials,
        mu,
        failures,
        failure_rate,
        bound,
        slack,
        in_regime: l >= recommended_l(mu, k, n),
        passed: failure_rate <= bound + slack,
    })
}
