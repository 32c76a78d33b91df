use std::path::Path;

use serde::Deserialize;

use crate::skeleton::{AlgorithmTag, DeltaPolicy};
use crate::{Error, Result};

/// Master seed when neither flag, config nor environment gives one.
pub const DEFAULT_SEED: u64 = 20_080_101;

/// Environment variable consulted for the master seed.
pub const SEED_ENV: &str = "SKELETONLAB_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Vcurve,
    Scaling,
    Smoothkernel,
    Comparison,
    Validation,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    ExpXy,
    ChebyshevSum,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DeltaPolicyKind {
    Fixed,
    #[default]
    Heuristic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Log-spaced head with a flat `eps` tail, DFT bases.
    #[default]
    FourierToy,
    /// Exact rank `k`, DFT bases.
    ExactRank,
}

/// Deliberate defects for exercising the failure path of the validation
/// suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    CorruptedPinv,
}

/// Everything a TOML config file or the command line may set. Lists accept
/// a single value or an array.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub n: Option<Vec<usize>>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub l: Option<Vec<usize>>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub k: Option<Vec<usize>>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub delta: Option<Vec<f64>>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub eps: Option<Vec<f64>>,
    pub kernel: Option<KernelKind>,
    #[serde(default, deserialize_with = "one_or_many_algos")]
    pub algo: Option<Vec<AlgorithmTag>>,
    pub delta_policy: Option<DeltaPolicyKind>,
    pub model: Option<ModelKind>,
    /// Skip the coefficient table of the smooth-kernel run.
    pub skip_coefficients: Option<bool>,
    pub inject_fault: Option<Fault>,
    /// Lemma instances per suite in the validation run.
    pub instances: Option<usize>,
    /// Write `runtime_ms = 0` so reruns give byte-identical files.
    pub no_timing: Option<bool>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Option<Vec<T>>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(Some(match OneOrMany::<T>::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    }))
}

fn one_or_many_algos<'de, D>(d: D) -> std::result::Result<Option<Vec<AlgorithmTag>>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let names: Option<Vec<String>> = one_or_many(d)?;
    names
        .unwrap_or_default()
        .iter()
        .map(|s| s.parse().map_err(serde::de::Error::custom))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(Some)
}

impl ConfigFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Fields set in `over` win.
    pub fn merge(self, over: ConfigFile) -> ConfigFile {
        ConfigFile {
            experiment: over.experiment.or(self.experiment),
            seed: over.seed.or(self.seed),
            trials: over.trials.or(self.trials),
            n: over.n.or(self.n),
            l: over.l.or(self.l),
            k: over.k.or(self.k),
            delta: over.delta.or(self.delta),
            eps: over.eps.or(self.eps),
            kernel: over.kernel.or(self.kernel),
            algo: over.algo.or(self.algo),
            delta_policy: over.delta_policy.or(self.delta_policy),
            model: over.model.or(self.model),
            skip_coefficients: over.skip_coefficients.or(self.skip_coefficients),
            inject_fault: over.inject_fault.or(self.inject_fault),
            instances: over.instances.or(self.instances),
            no_timing: over.no_timing.or(self.no_timing),
        }
    }

    /// The master seed: this config, then `env_seed`, then [`DEFAULT_SEED`].
    pub fn resolve_seed(&self, env_seed: Option<&str>) -> Result<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match env_seed {
            Some(text) => text
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}=`{text}` is not an unsigned integer"))),
            None => Ok(DEFAULT_SEED),
        }
    }

    /// Resolves into a typed, validated plan.
    pub fn plan(&self, env_seed: Option<&str>) -> Result<Plan> {
        let seed = self.resolve_seed(env_seed)?;
        let experiment = self
            .experiment
            .ok_or_else(|| Error::Config("no experiment selected".into()))?;
        let plan = match experiment {
            Experiment::Vcurve => Plan::Vcurve(VcurveConfig::resolve(self, seed)?),
            Experiment::Scaling => Plan::Scaling(ScalingConfig::resolve(self, seed)?),
            Experiment::Smoothkernel => Plan::Smoothkernel(SmoothKernelConfig::resolve(self, seed)?),
            Experiment::Comparison => Plan::Comparison(ComparisonConfig::resolve(self, seed)?),
            Experiment::Validation => Plan::Validation(ValidationConfig::resolve(self, seed)?),
        };
        Ok(plan)
    }
}

/// A resolved experiment.
#[derive(Clone, Debug, PartialEq)]
pub enum Plan {
    Vcurve(VcurveConfig),
    Scaling(ScalingConfig),
    Smoothkernel(SmoothKernelConfig),
    Comparison(ComparisonConfig),
    Validation(ValidationConfig),
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn single<T: Copy>(name: &str, v: &Option<Vec<T>>, default: T) -> Result<T> {
    match v.as_deref() {
        None => Ok(default),
        Some([x]) => Ok(*x),
        Some(_) => Err(config_err(format!("`{name}` takes a single value here"))),
    }
}

fn nonempty<T: Clone>(name: &str, v: &Option<Vec<T>>, default: Vec<T>) -> Result<Vec<T>> {
    let out = v.clone().unwrap_or(default);
    if out.is_empty() {
        return Err(config_err(format!("`{name}` is empty")));
    }
    Ok(out)
}

fn positive(name: &str, values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(config_err(format!("`{name}` must be positive and finite, got {v}")));
    }
    Ok(())
}

fn check_l_n(l: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(config_err("n must be positive"));
    }
    if l == 0 || l > n {
        return Err(config_err(format!("l={l} must lie in 1..={n}")));
    }
    Ok(())
}

/// `1e-15, 10^-14.5, ..., 1e-3`.
pub fn default_delta_grid() -> Vec<f64> {
    (0..=24).map(|i| 10f64.powf(-15.0 + 0.5 * i as f64)).collect()
}

/// Error against `delta` for several `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct VcurveConfig {
    pub n: usize,
    pub l: usize,
    pub ks: Vec<usize>,
    /// Tail level of the model.
    pub eps: f64,
    pub deltas: Vec<f64>,
    pub trials: usize,
    /// Record wall-clock time per trial.
    pub timing: bool,
    pub seed: u64,
}

impl VcurveConfig {
    fn resolve(c: &ConfigFile, seed: u64) -> Result<Self> {
        let cfg = Self {
            n: single("n", &c.n, 301)?,
            l: single("l", &c.l, 100)?,
            ks: nonempty("k", &c.k, vec![3, 9, 21])?,
            eps: single("eps", &c.eps, 1e-15)?,
            deltas: nonempty("delta", &c.delta, default_delta_grid())?,
            trials: c.trials.unwrap_or(20),
            timing: !c.no_timing.unwrap_or(false),
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_l_n(self.l, self.n)?;
        positive("eps", &[self.eps])?;
        positive("delta", &self.deltas)?;
        if let Some(k) = self.ks.iter().find(|&&k| k == 0 || k >= self.n) {
            return Err(config_err(format!("k={k} must lie in 1..{}", self.n)));
        }
        Ok(())
    }
}

/// Error against `n` with `delta = eps l / sqrt(n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingConfig {
    pub ns: Vec<usize>,
    pub k: usize,
    pub l: usize,
    pub eps: Vec<f64>,
    pub trials: usize,
    /// Record wall-clock time per trial.
    pub timing: bool,
    pub seed: u64,
}

impl ScalingConfig {
    fn resolve(c: &ConfigFile, seed: u64) -> Result<Self> {
        if c.delta.is_some() {
            return Err(config_err("`delta` is derived from eps, l and n in the scaling run"));
        }
        let cfg = Self {
            ns: nonempty("n", &c.n, vec![100, 200, 400, 800, 1600])?,
            k: single("k", &c.k, 9)?,
            l: single("l", &c.l, 40)?,
            eps: nonempty("eps", &c.eps, vec![1e-6, 1e-8, 1e-10])?,
            trials: c.trials.unwrap_or(20),
            timing: !c.no_timing.unwrap_or(false),
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        positive("eps", &self.eps)?;
        for &n in &self.ns {
            check_l_n(self.l, n)?;
            if self.k == 0 || self.k >= n {
                return Err(config_err(format!("k={} must lie in 1..{n}", self.k)));
            }
        }
        Ok(())
    }
}

/// Error against `l` for a smooth kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothKernelConfig {
    pub kernel: KernelKind,
    pub n: usize,
    pub ls: Vec<usize>,
    pub policy: DeltaPolicyKind,
    /// Used by the fixed policy.
    pub delta: f64,
    pub trials: usize,
    /// Largest `k` in the coefficient table; 0 skips it.
    pub coefficient_ks: usize,
    /// Record wall-clock time per trial.
    pub timing: bool,
    pub seed: u64,
}

impl SmoothKernelConfig {
    fn resolve(c: &ConfigFile, seed: u64) -> Result<Self> {
        let kernel = c.kernel.unwrap_or_default();
        let (n, ls) = match kernel {
            KernelKind::ExpXy => (900, (1..=8).map(|i| 5 * i).collect()),
            KernelKind::ChebyshevSum => (1000, vec![12, 18, 24]),
        };
        let policy = c.delta_policy.unwrap_or(if c.delta.is_some() {
            DeltaPolicyKind::Fixed
        } else {
            DeltaPolicyKind::Heuristic
        });
        let delta = single("delta", &c.delta, f64::NAN)?;
        let cfg = Self {
            kernel,
            n: single("n", &c.n, n)?,
            ls: nonempty("l", &c.l, ls)?,
            policy,
            delta,
            trials: c.trials.unwrap_or(10),
            coefficient_ks: match (kernel, c.skip_coefficients) {
                (KernelKind::ExpXy, Some(true)) | (KernelKind::ChebyshevSum, _) => 0,
                (KernelKind::ExpXy, _) => 20,
            },
            timing: !c.no_timing.unwrap_or(false),
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for &l in &self.ls {
            check_l_n(l, self.n)?;
        }
        if self.policy == DeltaPolicyKind::Fixed {
            positive("delta", &[self.delta])?;
        }
        if self.coefficient_ks >= self.n {
            return Err(config_err("coefficient table larger than n"));
        }
        Ok(())
    }

    /// The policy at sample size `l`; the heuristic uses `k = max(l/2 - 2, 1)`.
    pub fn policy_at(&self, l: usize) -> DeltaPolicy {
        match self.policy {
            DeltaPolicyKind::Fixed => DeltaPolicy::Fixed(self.delta),
            DeltaPolicyKind::Heuristic => DeltaPolicy::Heuristic {
                k: (l / 2).saturating_sub(2).max(1),
            },
        }
    }
}

/// Several algorithms on identical seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonConfig {
    pub model: ModelKind,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub eps: f64,
    /// Threshold for the pseudoinverse-based algorithms.
    pub delta: f64,
    pub algos: Vec<AlgorithmTag>,
    pub trials: usize,
    /// Record wall-clock time per trial.
    pub timing: bool,
    pub seed: u64,
}

impl ComparisonConfig {
    fn resolve(c: &ConfigFile, seed: u64) -> Result<Self> {
        let model = c.model.unwrap_or_default();
        let eps = single("eps", &c.eps, 1e-8)?;
        let default_delta = match model {
            ModelKind::FourierToy => eps,
            ModelKind::ExactRank => 1e-12,
        };
        let cfg = Self {
            model,
            n: single("n", &c.n, 301)?,
            k: single("k", &c.k, 9)?,
            l: single("l", &c.l, 100)?,
            eps,
            delta: single("delta", &c.delta, default_delta)?,
            algos: nonempty(
                "algo",
                &c.algo,
                vec![
                    AlgorithmTag::UniformK3,
                    AlgorithmTag::RrqrMnk,
                    AlgorithmTag::RowsRrqrNk2,
                    AlgorithmTag::Colsvd,
                ],
            )?,
            trials: c.trials.unwrap_or(20),
            timing: !c.no_timing.unwrap_or(false),
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_l_n(self.l, self.n)?;
        positive("eps", &[self.eps])?;
        positive("delta", &[self.delta])?;
        if self.k == 0 || self.k > self.l {
            return Err(config_err(format!("k={} must lie in 1..={}", self.k, self.l)));
        }
        Ok(())
    }
}

/// The oracle suite.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationConfig {
    /// Randomized instances per lemma.
    pub instances: usize,
    /// Monte Carlo trials for the sampling bound.
    pub mc_trials: usize,
    pub fault: Option<Fault>,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            instances: 500,
            mc_trials: 1000,
            fault: None,
            seed: DEFAULT_SEED,
        }
    }
}

impl ValidationConfig {
    fn resolve(c: &ConfigFile, seed: u64) -> Result<Self> {
        Ok(Self {
            instances: c.instances.unwrap_or(500),
            mc_trials: c.trials.unwrap_or(1000),
            fault: c.inject_fault,
            seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_scalars_and_lists() {
        let c = ConfigFile::from_toml_str(
            "experiment = \"vcurve\"\nn = 101\nk = [3, 5]\ndelta = 1e-8\nalgo = [\"uniform_k3\", \"colsvd\"]\n",
        )
        .unwrap();
        assert_eq!(c.experiment, Some(Experiment::Vcurve));
        assert_eq!(c.n, Some(vec![101]));
        assert_eq!(c.k, Some(vec![3, 5]));
        assert_eq!(c.delta, Some(vec![1e-8]));
        assert_eq!(c.algo, Some(vec![AlgorithmTag::UniformK3, AlgorithmTag::Colsvd]));
    }

    #[test]
    fn unknown_keys_and_values_rejected() {
        assert!(ConfigFile::from_toml_str("bogus = 1").is_err());
        assert!(ConfigFile::from_toml_str("algo = \"nope\"").is_err());
        assert!(ConfigFile::from_toml_str("kernel = \"gauss\"").is_err());
    }

    #[test]
    fn seed_precedence() {
        let file = ConfigFile {
            seed: Some(5),
            ..Default::default()
        };
        let flags = ConfigFile {
            seed: Some(9),
            ..Default::default()
        };
        assert_eq!(file.clone().merge(flags).resolve_seed(Some("7")).unwrap(), 9);
        assert_eq!(file.resolve_seed(Some("7")).unwrap(), 5);
        assert_eq!(ConfigFile::default().resolve_seed(Some("7")).unwrap(), 7);
        assert_eq!(ConfigFile::default().resolve_seed(None).unwrap(), DEFAULT_SEED);
        assert!(ConfigFile::default().resolve_seed(Some("x")).is_err());
    }

    #[test]
    fn defaults() {
        let c = ConfigFile {
            experiment: Some(Experiment::Vcurve),
            ..Default::default()
        };
        let Plan::Vcurve(v) = c.plan(None).unwrap() else { panic!() };
        assert_eq!((v.n, v.l, v.trials), (301, 100, 20));
        assert_eq!(v.ks, vec![3, 9, 21]);
        assert_eq!(v.deltas.len(), 25);
        assert!((v.deltas[0] - 1e-15).abs() < 1e-29);
        assert!((v.deltas[24] - 1e-3).abs() < 1e-17);
        assert!(((v.deltas[24] / v.deltas[0]).log10() - 12.0).abs() < 1e-9);
    }

    #[test]
    fn rejections() {
        let base = |e| ConfigFile {
            experiment: Some(e),
            ..Default::default()
        };
        assert!(ConfigFile::default().plan(None).is_err());
        let mut c = base(Experiment::Scaling);
        c.eps = Some(vec![0.0]);
        assert!(matches!(c.plan(None), Err(Error::Config(_))));
        let mut c = base(Experiment::Smoothkernel);
        c.n = Some(vec![20]);
        c.l = Some(vec![30]);
        assert!(matches!(c.plan(None), Err(Error::Config(_))));
        let mut c = base(Experiment::Vcurve);
        c.delta = Some(vec![]);
        assert!(c.plan(None).is_err());
        let mut c = base(Experiment::Vcurve);
        c.n = Some(vec![10, 20]);
        assert!(c.plan(None).is_err());
        let mut c = base(Experiment::Smoothkernel);
        c.delta_policy = Some(DeltaPolicyKind::Fixed);
        assert!(c.plan(None).is_err());
    }

    #[test]
    fn heuristic_k() {
        let c = ConfigFile {
            experiment: Some(Experiment::Smoothkernel),
            ..Default::default()
        };
        let Plan::Smoothkernel(s) = c.plan(None).unwrap() else { panic!() };
        assert_eq!(s.n, 900);
        assert_eq!(s.policy_at(30), DeltaPolicy::Heuristic { k: 13 });
        assert_eq!(s.policy_at(5), DeltaPolicy::Heuristic { k: 1 });
        assert_eq!(s.coefficient_ks, 20);
    }
}
