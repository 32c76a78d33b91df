//! Experiment runners behind the `skeletonlab` CLI.
//!
//! Each runner returns [`ExperimentRecord`] rows plus free-form notes
//! (fitted slopes, coefficients) that are written as `#` comment lines after
//! the CSV body.

pub mod config;
mod experiments;
mod record;
mod validation;

pub use config::{
    default_delta_grid, ComparisonConfig, ConfigFile, DeltaPolicyKind, Experiment, Fault, KernelKind, ModelKind,
    Plan, ScalingConfig, SmoothKernelConfig, ValidationConfig, VcurveConfig,
};
pub use experiments::{
    fit, loglog_slope, measure_error, run_comparison, run_scaling, run_smoothkernel, run_vcurve, Fitted, MEASURE,
};
pub use record::{read_csv, write_csv, ExperimentOutput, ExperimentRecord};
pub use validation::{random_lemma_instance, run_validation, CheckResult, LemmaInstance, ValidationReport};

use crate::Result;

/// What a run produced.
#[derive(Debug)]
pub enum Outcome {
    Data(ExperimentOutput),
    Validation(ValidationReport),
}

/// Runs a resolved plan.
pub fn run(plan: &Plan) -> Result<Outcome> {
    Ok(match plan {
        Plan::Vcurve(c) => Outcome::Data(run_vcurve(c)?),
        Plan::Scaling(c) => Outcome::Data(run_scaling(c)?),
        Plan::Smoothkernel(c) => Outcome::Data(run_smoothkernel(c)?),
        Plan::Comparison(c) => Outcome::Data(run_comparison(c)?),
        Plan::Validation(c) => Outcome::Validation(run_validation(c)?),
    })
}
