use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use skeletonlab::bench::{
    self, write_csv, ConfigFile, DeltaPolicyKind, Experiment, Fault, KernelKind, ModelKind, Outcome,
};
use skeletonlab::skeleton::AlgorithmTag;
use skeletonlab::Error;

/// Runs skeleton-decomposition experiments and writes CSV plot data.
///
/// Flags override the config file. List-valued flags take comma-separated
/// values.
#[derive(Debug, Parser)]
#[command(name = "skeletonlab", version)]
struct Cli {
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    l: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    delta: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    eps: Vec<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed; falls back to SKELETONLAB_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    kernel: Option<KernelKind>,
    /// Algorithms for the comparison run.
    #[arg(long, value_delimiter = ',')]
    algo: Vec<String>,
    #[arg(long, value_enum)]
    delta_policy: Option<DeltaPolicyKind>,
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// Lemma instances per suite in the validation run.
    #[arg(long)]
    instances: Option<usize>,
    /// Skip the coefficient table of the smooth-kernel run.
    #[arg(long)]
    skip_coefficients: bool,
    /// Write zero runtimes so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    #[arg(long, value_enum)]
    inject_fault: Option<Fault>,
}

fn nonempty<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

impl Cli {
    fn overrides(&self) -> Result<ConfigFile, Error> {
        let algo = self
            .algo
            .iter()
            .map(|s| s.parse::<AlgorithmTag>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ConfigFile {
            experiment: self.experiment,
            seed: self.seed,
            trials: self.trials,
            n: nonempty(self.n.clone()),
            l: nonempty(self.l.clone()),
            k: nonempty(self.k.clone()),
            delta: nonempty(self.delta.clone()),
            eps: nonempty(self.eps.clone()),
            kernel: self.kernel,
            algo: nonempty(algo),
            delta_policy: self.delta_policy,
            model: self.model,
            skip_coefficients: self.skip_coefficients.then_some(true),
            inject_fault: self.inject_fault,
            instances: self.instances,
            no_timing: self.no_timing.then_some(true),
        })
    }
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let config = file.merge(cli.overrides()?);
    let env_seed = std::env::var(bench::config::SEED_ENV).ok();
    let plan = config.plan(env_seed.as_deref())?;
    let mut w = output(&cli.out)?;
    let ok = match bench::run(&plan)? {
        Outcome::Data(out) => {
            write_csv(&out, &mut w)?;
            true
        }
        Outcome::Validation(report) => {
            writeln!(w, "{report}")?;
            report.passed()
        }
    };
    w.flush()?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Error::Config(msg)) => {
            eprintln!("skeletonlab: config error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("skeletonlab: {e}");
            ExitCode::from(1)
        }
    }
}
