use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::config::{Fault, ValidationConfig};
use crate::diagnostics::{
    check_lift_column, check_lift_projection, check_lift_row, check_lift_rowcol, montecarlo_sampling_bounds,
};
use crate::linalg::{norm2, pinv_threshold, select_rows};
use crate::matsource::{haar_unitary, Basis};
use crate::sampling::{derive_seed, recommended_l, sample_uniform, trial_rng, IndexSample};
use crate::{Mat, Result, C64};

/// Slack below which a lemma check fails.
pub const LEMMA_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        write!(f, "{}", if self.passed() { "ok" } else { "FAILED" })
    }
}

/// A random matrix with unitary bases and samples for the lift checks.
#[derive(Clone, Debug)]
pub struct LemmaInstance {
    pub a: Mat,
    pub x: Mat,
    pub y: Mat,
    pub k: usize,
    pub r: IndexSample,
    pub c: IndexSample,
}

fn gaussian<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Mat {
    Mat::from_fn(m, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

fn min_singular(b: &Mat) -> f64 {
    b.singular_values()
        .ok()
        .and_then(|s| s.last().copied())
        .unwrap_or(0.0)
}

/// `A = X1 B Y1^* + eta G` with Haar `X`, `Y`, dimensions in `2..=max_dim`
/// and `eta` drawn from `{1, 1e-3, 1e-8}`. The samples are redrawn until
/// `X1[R, :]` and `Y1[C, :]` have full column rank.
pub fn random_lemma_instance<R: Rng + ?Sized>(max_dim: usize, rng: &mut R) -> LemmaInstance {
    let m = rng.random_range(2..=max_dim);
    let n = rng.random_range(2..=max_dim);
    let k = rng.random_range(1..=m.min(n).min(8));
    let x = haar_unitary(m, rng);
    let y = haar_unitary(n, rng);
    let eta = [1.0, 1e-3, 1e-8][rng.random_range(0..3)];
    let b = gaussian(k, k, rng);
    let mut a = &(&x.subcols(0, k) * &b) * y.subcols(0, k).adjoint();
    a += faer::Scale(C64::new(eta, 0.0)) * gaussian(m, n, rng);
    let draw = |dim: usize, basis: &Mat, rng: &mut R| loop {
        let l = rng.random_range(k..=dim.max(k) + 4);
        let s = sample_uniform(dim, l, rng).expect("valid sample size");
        if min_singular(&select_rows(basis.subcols(0, k), s.indices())) > 1e-6 {
            return s;
        }
    };
    let r = draw(m, &x, rng);
    let c = draw(n, &y, rng);
    LemmaInstance { a, x, y, k, r, c }
}

fn instances(cfg: &ValidationConfig, stream: u64) -> Vec<LemmaInstance> {
    let master = derive_seed(cfg.seed, stream);
    (0..cfg.instances)
        .into_par_iter()
        .map(|i| random_lemma_instance(40, &mut trial_rng(master, i as u64)))
        .collect()
}

fn slack_check(name: &str, slacks: Result<Vec<f64>>) -> CheckResult {
    match slacks {
        Ok(s) => {
            let worst = s.iter().copied().fold(f64::INFINITY, f64::min);
            let failures = s.iter().filter(|&&v| !(v >= -LEMMA_TOL)).count();
            CheckResult {
                name: name.into(),
                passed: failures == 0,
                detail: format!("instances={} failures={failures} min_slack={worst:.3e}", s.len()),
            }
        }
        Err(e) => CheckResult {
            name: name.into(),
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Thresholded pseudoinverse: `||Z|| <= 1/delta` and `Z M Z = Z`.
fn pinv_contract(cfg: &ValidationConfig) -> CheckResult {
    let master = derive_seed(cfg.seed, 0);
    let outcomes: Result<Vec<(bool, f64)>> = (0..cfg.instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(master, i as u64);
            let m = rng.random_range(1..=30);
            let n = rng.random_range(1..=30);
            let r = m.min(n);
            let u = haar_unitary(m, &mut rng);
            let v = haar_unitary(n, &mut rng);
            let sigma: Vec<f64> = (0..r).map(|j| 10f64.powf(-8.0 * j as f64 / r as f64)).collect();
            let mut s = Mat::zeros(m, n);
            for (j, &sv) in sigma.iter().enumerate() {
                s[(j, j)] = C64::new(sv, 0.0);
            }
            let a = &(&u * &s) * v.adjoint();
            let delta = 10f64.powf(-rng.random_range(0.0..4.0));
            let mut z = pinv_threshold(a.as_ref(), delta)?;
            if cfg.fault == Some(Fault::CorruptedPinv) {
                z *= faer::Scale(C64::new(1.001, 0.0));
            }
            let nz = norm2(z.as_ref())?;
            let na = norm2(a.as_ref())?;
            let resid = norm2((&(&z * &a) * &z - &z).as_ref())?;
            let ok = nz <= (1.0 + 1e-10) / delta && resid <= 1e-9 * nz * nz * na + 1e-300;
            Ok((ok, resid / nz.max(f64::MIN_POSITIVE)))
        })
        .collect();
    match outcomes {
        Ok(o) => {
            let failures = o.iter().filter(|p| !p.0).count();
            let worst = o.iter().map(|p| p.1).fold(0.0, f64::max);
            CheckResult {
                name: "pinv_contract".into(),
                passed: failures == 0,
                detail: format!("instances={} failures={failures} max_rel_residual={worst:.3e}", o.len()),
            }
        }
        Err(e) => CheckResult {
            name: "pinv_contract".into(),
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Lemma oracles, the pseudoinverse contract and the sampling bounds.
pub fn run_validation(cfg: &ValidationConfig) -> Result<ValidationReport> {
    let mut checks = vec![pinv_contract(cfg)];

    let col = instances(cfg, 1);
    checks.push(slack_check(
        "lift_column",
        col.par_iter()
            .map(|p| Ok(check_lift_column(p.a.as_ref(), p.y.as_ref(), p.k, &p.c)?.slack))
            .collect(),
    ));
    checks.push(slack_check(
        "lift_row",
        col.par_iter()
            .map(|p| Ok(check_lift_row(p.a.as_ref(), p.x.as_ref(), p.k, &p.r)?.slack))
            .collect(),
    ));
    let rowcol = instances(cfg, 2);
    checks.push(slack_check(
        "lift_rowcol",
        rowcol
            .par_iter()
            .map(|p| Ok(check_lift_rowcol(p.a.as_ref(), p.x.as_ref(), p.y.as_ref(), p.k, &p.r, &p.c)?.report.slack))
            .collect(),
    ));
    let proj = instances(cfg, 3);
    checks.push(slack_check(
        "lift_projection",
        proj.par_iter()
            .map(|p| {
                let rep = check_lift_projection(p.a.as_ref(), p.y.as_ref(), p.k, &p.c)?;
                Ok(rep.plain.slack.min(rep.squared.slack))
            })
            .collect(),
    ));

    let (n, k) = (1024, 4);
    let l = recommended_l(1.0, k, n);
    let mc = montecarlo_sampling_bounds(n, k, l, Basis::UnitaryDft, cfg.mc_trials, &mut trial_rng(cfg.seed, 4))?;
    checks.push(CheckResult {
        name: "sampling_bound_dft".into(),
        passed: mc.passed && mc.in_regime,
        detail: format!(
            "n={n} k={k} l={l} trials={} failures={} rate={:.3e} bound={:.3e} slack={:.3e}",
            mc.trials, mc.failures, mc.failure_rate, mc.bound, mc.slack
        ),
    });

    // Spiky bases sit far outside the regime; recorded, not enforced.
    let spiky = montecarlo_sampling_bounds(64, 4, 32, Basis::IdentitySpike, cfg.mc_trials.min(200), &mut trial_rng(cfg.seed, 5))?;
    checks.push(CheckResult {
        name: "sampling_bound_spiky_info".into(),
        passed: true,
        detail: format!(
            "n=64 k=4 l=32 mu={:.1} in_regime={} rate={:.3e}",
            spiky.mu, spiky.in_regime, spiky.failure_rate
        ),
    });
    Ok(ValidationReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(fault: Option<Fault>) -> ValidationConfig {
        ValidationConfig {
            instances: 40,
            mc_trials: 50,
            fault,
            seed: 11,
        }
    }

    #[test]
    fn small_suite_passes_and_is_deterministic() {
        let a = run_validation(&small(None)).unwrap();
        assert!(a.passed(), "{a}");
        assert_eq!(a, run_validation(&small(None)).unwrap());
    }

    #[test]
    fn corrupted_pinv_fails() {
        let r = run_validation(&small(Some(Fault::CorruptedPinv))).unwrap();
        assert!(!r.passed());
        assert!(!r.checks[0].passed);
        assert!(r.to_string().contains("FAIL pinv_contract"));
    }

    #[test]
    fn instances_are_well_posed() {
        let mut rng = trial_rng(3, 0);
        for _ in 0..50 {
            let p = random_lemma_instance(12, &mut rng);
            assert_eq!((p.a.nrows(), p.a.ncols()), (p.x.nrows(), p.y.nrows()));
            assert!(p.r.len() >= p.k && p.c.len() >= p.k);
        }
    }
}
