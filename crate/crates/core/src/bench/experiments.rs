use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{
    ComparisonConfig, KernelKind, ModelKind, ScalingConfig, SmoothKernelConfig, VcurveConfig,
};
use super::record::{ExperimentOutput, ExperimentRecord};
use crate::diagnostics::{discrete_legendre_basis, tail_coefficient_sum};
use crate::linalg::{spectral_norm, PowerIteration};
use crate::matsource::{
    chebyshev_sum_source, exp_xy_source, synthetic_fourier_source, Basis, CountingSource, DenseSource,
    MatrixSource, SyntheticModelSpec,
};
use crate::sampling::{derive_seed, trial_rng};
use crate::skeleton::{
    approximation_error, skeleton_colsvd, skeleton_mixed_wrapper, skeleton_rows_rrqr_nk2, skeleton_rrqr_mnk,
    skeleton_uniform, AlgorithmTag, ApproxOperator, Approximant, DeltaPolicy, LowRankFactorization,
    SkeletonDecomposition, UniformOptions,
};
use crate::{Error, Mat, Result};

/// Power iteration used for `err2`. Loose on purpose: the experiments look
/// at errors across many orders of magnitude. Residuals at rounding level
/// have flat spectra and stop at the iteration cap.
pub const MEASURE: PowerIteration = PowerIteration {
    tol: 1e-4,
    max_iters: 50,
};

/// Stream of the measurement generator within a trial seed.
const MEASURE_STREAM: u64 = u64::MAX;

/// The output of any of the algorithms.
#[derive(Clone, Debug)]
pub enum Fitted {
    Skeleton(SkeletonDecomposition),
    LowRank(LowRankFactorization),
}

impl Approximant for Fitted {
    fn dims(&self) -> (usize, usize) {
        match self {
            Fitted::Skeleton(s) => s.dims(),
            Fitted::LowRank(f) => f.dims(),
        }
    }

    fn operator<'s, S: MatrixSource + ?Sized>(&'s self, a: &S) -> Result<ApproxOperator<'s>> {
        match self {
            Fitted::Skeleton(s) => s.operator(a),
            Fitted::LowRank(f) => f.operator(a),
        }
    }
}

/// Runs `algo`. `k` is the target rank of the RRQR variants; the
/// pseudoinverse-based algorithms take their threshold from `policy`
/// (only the uniform skeleton supports the heuristic).
pub fn fit<S, R>(algo: AlgorithmTag, a: &S, l: usize, k: usize, policy: DeltaPolicy, rng: &mut R) -> Result<Fitted>
where
    S: MatrixSource + ?Sized,
    R: Rng + ?Sized,
{
    let fixed = || match policy {
        DeltaPolicy::Fixed(d) => Ok(d),
        DeltaPolicy::Heuristic { .. } => Err(Error::InvalidParameter(format!(
            "{algo} needs a fixed threshold"
        ))),
    };
    Ok(match algo {
        AlgorithmTag::UniformK3 => Fitted::Skeleton(skeleton_uniform(
            a,
            l,
            &UniformOptions {
                delta: policy,
                sampling: Default::default(),
            },
            rng,
        )?),
        AlgorithmTag::RrqrMnk => Fitted::Skeleton(skeleton_rrqr_mnk(a, l, k, rng)?),
        AlgorithmTag::RowsRrqrNk2 => Fitted::Skeleton(skeleton_rows_rrqr_nk2(a, l, k, rng)?),
        AlgorithmTag::Colsvd => Fitted::LowRank(skeleton_colsvd(a, l, fixed()?, rng)?),
        AlgorithmTag::MixedWrapper => Fitted::LowRank(skeleton_mixed_wrapper(a, l, fixed()?, rng)?),
    })
}

/// `||A - approx||_2` with [`MEASURE`], drawing the start vector from the
/// measurement stream of `seed`.
pub fn measure_error<P, S>(approx: &P, a: &S, seed: u64) -> Result<f64>
where
    P: Approximant + ?Sized,
    S: MatrixSource + ?Sized,
{
    Ok(approximation_error(approx, a, MEASURE, &mut trial_rng(seed, MEASURE_STREAM))?.value)
}

/// Least-squares slope of `ln y` against `ln x`. `None` without two distinct
/// positive abscissae or with a non-positive ordinate.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if logs.len() < 2 || sxx <= 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

struct Target<'a, S: ?Sized, M: ?Sized> {
    experiment: &'static str,
    source: &'a S,
    /// What the error is measured against; a dense copy for slow sources.
    measure: &'a M,
    norm: f64,
    eps_k: f64,
    eps1_k: Option<f64>,
    timing: bool,
}

#[derive(Clone, Copy, Debug)]
struct Trial {
    trial: u64,
    seed: u64,
    l: usize,
    k: usize,
    algo: AlgorithmTag,
    policy: DeltaPolicy,
}

fn run_trial<S, M>(target: &Target<'_, S, M>, t: &Trial) -> Result<ExperimentRecord>
where
    S: MatrixSource + ?Sized,
    M: MatrixSource + ?Sized,
{
    let counted = CountingSource::new(target.source);
    let mut rng = ChaCha8Rng::seed_from_u64(t.seed);
    let start = Instant::now();
    let fitted = fit(t.algo, &counted, t.l, t.k, t.policy, &mut rng)?;
    let runtime_ms = if target.timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    let delta = match (&fitted, t.policy) {
        (Fitted::Skeleton(s), _) => s.delta_used,
        (Fitted::LowRank(_), DeltaPolicy::Fixed(d)) => d,
        (Fitted::LowRank(_), DeltaPolicy::Heuristic { .. }) => f64::NAN,
    };
    let err2 = measure_error(&fitted, target.measure, t.seed)?;
    Ok(ExperimentRecord {
        experiment: target.experiment.to_string(),
        trial: t.trial,
        seed: t.seed,
        m: target.source.nrows(),
        n: target.source.ncols(),
        l: t.l,
        k: t.k,
        delta,
        err2,
        err2_rel: err2 / target.norm,
        eps_k: target.eps_k,
        eps1_k: target.eps1_k,
        runtime_ms,
        algorithm_tag: t.algo,
        entry_reads: counted.reads(),
    })
}

fn run_trials<S, M>(target: &Target<'_, S, M>, trials: &[Trial]) -> Result<Vec<ExperimentRecord>>
where
    S: MatrixSource + ?Sized,
    M: MatrixSource + ?Sized,
{
    trials.par_iter().map(|t| run_trial(target, t)).collect()
}

fn sort_records(records: &mut [ExperimentRecord]) {
    records.sort_by(|a, b| (&a.experiment, a.trial).cmp(&(&b.experiment, b.trial)));
}

/// `sigma[k]` and the tail sum of a diagonal model.
fn diagonal_measures(spec: &SyntheticModelSpec) -> (f64, Option<f64>) {
    let s = &spec.singular_values;
    let k = spec.k.min(s.len());
    (s.get(k).copied().unwrap_or(0.0), Some(s[k..].iter().sum()))
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

/// Mean `err2_rel` of the records matching `pred`.
fn mean_error(records: &[ExperimentRecord], pred: impl Fn(&ExperimentRecord) -> bool) -> f64 {
    mean(records.iter().filter(|r| pred(r)).map(|r| r.err2_rel))
}

/// Error against `delta` on the log-spaced DFT model, one curve per `k`.
pub fn run_vcurve(cfg: &VcurveConfig) -> Result<ExperimentOutput> {
    cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    let mut out = ExperimentOutput::default();
    let per_k = (cfg.deltas.len() * cfg.trials) as u64;
    for (ki, &k) in cfg.ks.iter().enumerate() {
        let spec = SyntheticModelSpec::log_spaced(cfg.n, k, cfg.eps, Basis::UnitaryDft);
        let (a, _) = synthetic_fourier_source(&spec)?;
        let (eps_k, eps1_k) = diagonal_measures(&spec);
        let target = Target {
            experiment: "vcurve",
            source: &a,
            measure: &a,
            norm: spec.singular_values[0],
            eps_k,
            eps1_k,
            timing: cfg.timing,
        };
        let trials: Vec<Trial> = cfg
            .deltas
            .iter()
            .enumerate()
            .flat_map(|(di, &delta)| {
                (0..cfg.trials).map(move |t| Trial {
                    trial: ki as u64 * per_k + (di * cfg.trials + t) as u64,
                    seed: derive_seed(cfg.seed, t as u64),
                    l: cfg.l,
                    k,
                    algo: AlgorithmTag::UniformK3,
                    policy: DeltaPolicy::Fixed(delta),
                })
            })
            .collect();
        let records = run_trials(&target, &trials)?;
        if cfg.trials > 0 {
            let curve: Vec<(f64, f64)> = cfg
                .deltas
                .iter()
                .enumerate()
                .map(|(di, &d)| {
                    let lo = ki as u64 * per_k + (di * cfg.trials) as u64;
                    let hi = lo + cfg.trials as u64;
                    (d, mean_error(&records, |r| (lo..hi).contains(&r.trial)))
                })
                .collect();
            for (d, e) in &curve {
                out.notes.push(format!("vcurve k={k} delta={d:.6e} mean_err2_rel={e:.6e}"));
            }
            if curve.len() > 1 {
                let (imin, _) = curve
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                    .expect("nonempty");
                let mut sorted = curve.clone();
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                let dmin = curve[imin].0;
                let left: Vec<_> = sorted.iter().copied().filter(|p| p.0 <= dmin).collect();
                let right: Vec<_> = sorted.iter().copied().filter(|p| p.0 >= dmin).collect();
                let show = |s: Option<f64>| s.map_or("none".to_string(), |v| format!("{v:.4}"));
                out.notes.push(format!(
                    "vcurve k={k} delta_opt={dmin:.6e} min_err2_rel={:.6e} slope_left={} slope_right={}",
                    curve[imin].1,
                    show(loglog_slope(&left)),
                    show(loglog_slope(&right)),
                ));
            }
        }
        out.records.extend(records);
    }
    sort_records(&mut out.records);
    Ok(out)
}

/// Error against `n` on the two-level DFT model with `delta = eps l / sqrt(n)`.
pub fn run_scaling(cfg: &ScalingConfig) -> Result<ExperimentOutput> {
    cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    let mut out = ExperimentOutput::default();
    let per_eps = (cfg.ns.len() * cfg.trials) as u64;
    for (ei, &eps) in cfg.eps.iter().enumerate() {
        let mut curve = Vec::new();
        for (ni, &n) in cfg.ns.iter().enumerate() {
            let spec = SyntheticModelSpec::two_level(n, cfg.k, eps, Basis::UnitaryDft);
            let (a, _) = synthetic_fourier_source(&spec)?;
            let (eps_k, eps1_k) = diagonal_measures(&spec);
            let delta = eps * cfg.l as f64 / (n as f64).sqrt();
            let target = Target {
                experiment: "scaling",
                source: &a,
                measure: &a,
                norm: 1.0,
                eps_k,
                eps1_k,
                timing: cfg.timing,
            };
            let base = ei as u64 * per_eps + (ni * cfg.trials) as u64;
            let trials: Vec<Trial> = (0..cfg.trials)
                .map(|t| Trial {
                    trial: base + t as u64,
                    seed: derive_seed(cfg.seed, t as u64),
                    l: cfg.l,
                    k: cfg.k,
                    algo: AlgorithmTag::UniformK3,
                    policy: DeltaPolicy::Fixed(delta),
                })
                .collect();
            let records = run_trials(&target, &trials)?;
            if cfg.trials > 0 {
                let e = mean_error(&records, |_| true);
                out.notes.push(format!("scaling eps={eps:.3e} n={n} mean_err2_rel={e:.6e}"));
                curve.push((n as f64, e));
            }
            out.records.extend(records);
        }
        if let Some(s) = (curve.len() > 1).then(|| loglog_slope(&curve)).flatten() {
            out.notes.push(format!("scaling eps={eps:.3e} slope={s:.4}"));
        }
    }
    sort_records(&mut out.records);
    Ok(out)
}

/// `eps_k` and `eps1_k` of a dense matrix against bases whose leading `k`
/// columns span the model, for `k = 1..=kmax`.
pub(crate) fn coefficient_table(a: &Mat, x: &Mat, y: &Mat, kmax: usize) -> Result<Vec<(usize, f64, f64)>> {
    let coef = x.adjoint() * a * y;
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0ef);
    let opts = PowerIteration {
        tol: 1e-8,
        max_iters: 1000,
    };
    (1..=kmax)
        .map(|k| {
            let mut tail = coef.clone();
            tail.as_mut().submatrix_mut(0, 0, k, k).fill(Default::default());
            let e = spectral_norm(&tail, opts, &mut rng)?.value;
            Ok((k, e, tail_coefficient_sum(coef.as_ref(), k)))
        })
        .collect()
}

/// Error against `l` for one of the smooth kernels.
pub fn run_smoothkernel(cfg: &SmoothKernelConfig) -> Result<ExperimentOutput> {
    cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    let mut out = ExperimentOutput::default();
    let source = match cfg.kernel {
        KernelKind::ExpXy => exp_xy_source(cfg.n)?,
        KernelKind::ChebyshevSum => {
            let (src, info) = chebyshev_sum_source(cfg.n, derive_seed(cfg.seed, u64::MAX - 1))?;
            for (i, c) in info.coefficients.iter().enumerate() {
                let row: Vec<String> = c.iter().map(|v| format!("{v:.6e}")).collect();
                out.notes.push(format!("chebyshev_sum c[{i},:]= {}", row.join(" ")));
            }
            src
        }
    };
    let dense = DenseSource::from_mat(source.to_dense()?)?;
    let norm = spectral_norm(
        &dense.as_mat(),
        PowerIteration {
            tol: 1e-12,
            max_iters: 2000,
        },
        &mut ChaCha8Rng::seed_from_u64(0x5eed),
    )?
    .value;

    let table = if cfg.coefficient_ks > 0 {
        let x = discrete_legendre_basis(source.grid_x());
        let y = discrete_legendre_basis(source.grid_y());
        let table = coefficient_table(&source.to_dense()?, &x, &y, cfg.coefficient_ks)?;
        for (k, e, e1) in &table {
            out.notes.push(format!("coefficients k={k} eps_k={e:.6e} eps1_k={e1:.6e}"));
        }
        table
    } else {
        Vec::new()
    };

    let name = match cfg.kernel {
        KernelKind::ExpXy => "smoothkernel_exp_xy",
        KernelKind::ChebyshevSum => "smoothkernel_chebyshev_sum",
    };
    let mut curve = Vec::new();
    for (li, &l) in cfg.ls.iter().enumerate() {
        let policy = cfg.policy_at(l);
        let k = match policy {
            DeltaPolicy::Heuristic { k } => k,
            DeltaPolicy::Fixed(_) => (l / 2).saturating_sub(2).max(1),
        };
        let (eps_k, eps1_k) = table
            .iter()
            .find(|row| row.0 == k)
            .map_or((f64::NAN, None), |row| (row.1, Some(row.2)));
        let target = Target {
            experiment: name,
            source: &source,
            measure: &dense,
            norm,
            eps_k,
            eps1_k,
            timing: cfg.timing,
        };
        let trials: Vec<Trial> = (0..cfg.trials)
            .map(|t| Trial {
                trial: (li * cfg.trials + t) as u64,
                seed: derive_seed(cfg.seed, t as u64),
                l,
                k,
                algo: AlgorithmTag::UniformK3,
                policy,
            })
            .collect();
        let records = run_trials(&target, &trials)?;
        if cfg.trials > 0 {
            let e = mean_error(&records, |_| true);
            out.notes.push(format!("{name} l={l} mean_err2_rel={e:.6e}"));
            curve.push((l, e));
        }
        out.records.extend(records);
    }
    if curve.len() > 1 {
        // Semilog slope: decades of error per unit of l.
        let pts: Vec<(f64, f64)> = curve.iter().map(|&(l, e)| (l as f64, e.log10())).collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 && sxy.is_finite() {
            out.notes.push(format!("{name} log10_err_per_l={:.4}", sxy / sxx));
        }
    }
    sort_records(&mut out.records);
    Ok(out)
}

/// Several algorithms on the same model and the same per-trial seeds.
pub fn run_comparison(cfg: &ComparisonConfig) -> Result<ExperimentOutput> {
    cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    let spec = match cfg.model {
        ModelKind::FourierToy => SyntheticModelSpec::log_spaced(cfg.n, cfg.k, cfg.eps, Basis::UnitaryDft),
        ModelKind::ExactRank => SyntheticModelSpec::exact_rank(cfg.n, cfg.k, Basis::UnitaryDft),
    };
    let (a, _) = synthetic_fourier_source(&spec)?;
    let (eps_k, eps1_k) = diagonal_measures(&spec);
    let target = Target {
        experiment: "comparison",
        source: &a,
        measure: &a,
        norm: spec.singular_values[0],
        eps_k,
        eps1_k,
        timing: cfg.timing,
    };
    let trials: Vec<Trial> = cfg
        .algos
        .iter()
        .enumerate()
        .flat_map(|(ai, &algo)| {
            (0..cfg.trials).map(move |t| Trial {
                trial: (ai * cfg.trials + t) as u64,
                seed: derive_seed(cfg.seed, t as u64),
                l: cfg.l,
                k: cfg.k,
                algo,
                policy: DeltaPolicy::Fixed(cfg.delta),
            })
        })
        .collect();
    let mut out = ExperimentOutput {
        records: run_trials(&target, &trials)?,
        notes: Vec::new(),
    };
    if cfg.trials > 0 {
        for &algo in &cfg.algos {
            let rows: Vec<&ExperimentRecord> = out.records.iter().filter(|r| r.algorithm_tag == algo).collect();
            out.notes.push(format!(
                "comparison algo={algo} mean_err2_rel={:.6e} mean_runtime_ms={:.3} mean_entry_reads={:.1}",
                mean(rows.iter().map(|r| r.err2_rel)),
                mean(rows.iter().map(|r| r.runtime_ms)),
                mean(rows.iter().map(|r| r.entry_reads as f64)),
            ));
        }
    }
    sort_records(&mut out.records);
    Ok(out)
}
