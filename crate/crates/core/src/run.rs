//! Executes configured experiments and assembles result documents.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{grad_semigroup_bound, log_grad_bound, pole_grad_bound, pole_log_grad_bound, BoundReport};
use crate::config::{ExperimentConfig, FieldKind, FieldSpec};
use crate::error::Result;
use crate::estimators::{EstimatorRegistry, EstimatorResult, Problem};
use crate::reference::ReferenceKernel;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything needed to reproduce a run, plus its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDocument {
    pub version: String,
    pub config: ExperimentConfig,
    pub result: EstimatorResult,
    /// Present only when timing was requested, so that documents stay byte-identical otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub timing: bool,
}

fn problem_for(config: &ExperimentConfig, options: RunOptions) -> Result<Problem> {
    let mut problem = config.to_problem()?;
    if let Some(w) = options.workers {
        problem = problem.with_workers(w);
    }
    Ok(problem)
}

pub fn run(config: &ExperimentConfig, options: RunOptions) -> Result<RunDocument> {
    let problem = problem_for(config, options)?;
    let estimator = EstimatorRegistry::default().get(&config.estimator.name)?;
    let start = Instant::now();
    let mut result = estimator.estimate(&problem)?;
    let elapsed = start.elapsed().as_secs_f64();
    if let Some((value, source)) = reference_for(config, &problem, &result)? {
        result = result.with_reference(value, &source);
    }
    Ok(RunDocument {
        version: VERSION.to_string(),
        config: config.clone(),
        result,
        wall_clock_seconds: options.timing.then_some(elapsed),
    })
}

fn constant_value(spec: &FieldSpec) -> Option<f64> {
    match spec.kind {
        FieldKind::Zero => Some(0.0),
        FieldKind::Constant => spec.value,
        _ => None,
    }
}

/// Spreads a radial derivative over the reported components.
fn radial_components(problem: &Problem, result: &EstimatorResult, radial: f64) -> Vec<f64> {
    if let Some(d) = problem.directions.first() {
        return vec![d[0] * radial];
    }
    let mut v = vec![0.0; result.estimate.len()];
    v[0] = radial;
    v
}

/// Closed-form or quadrature value of what the run estimates, when one exists.
fn reference_for(
    config: &ExperimentConfig,
    problem: &Problem,
    result: &EstimatorResult,
) -> Result<Option<(Vec<f64>, String)>> {
    let name = config.estimator.name.as_str();
    if name == "girsanov-density" {
        return Ok(Some((vec![1.0], "martingale".into())));
    }
    let drift_free = config.drift.as_ref().is_none_or(|z| z.kind == FieldKind::Zero);
    let Some(c) = constant_value(&config.potential) else { return Ok(None) };
    if !drift_free {
        return Ok(None);
    }
    let (t, r0) = (problem.horizon(), problem.r0);
    let decay = (-c * t).exp();
    if name.starts_with("semigroup") {
        let Some(f) = config.test_function.as_ref().map_or(Some(1.0), constant_value) else { return Ok(None) };
        let value = if name == "semigroup" { vec![f * decay] } else { vec![0.0; result.estimate.len()] };
        return Ok(Some((value, "constant-test-function".into())));
    }
    let Some(kernel) = ReferenceKernel::for_geometry(&problem.geometry) else { return Ok(None) };
    let source = kernel.tag().to_string();
    let value = match name {
        "kernel" => vec![kernel.value(r0, t)? * decay],
        "kernel-gradient" if r0 > 0.0 => radial_components(problem, result, kernel.d_r(r0, t)? * decay),
        "log-gradient" if r0 > 0.0 => radial_components(problem, result, kernel.d_log_r(r0, t)?),
        _ => return Ok(None),
    };
    Ok(Some((value, source)))
}

/// Bound reports for the configured problem: pole bounds for bridge estimators,
/// entropy bounds for semigroup estimators.
pub fn audit_bounds(config: &ExperimentConfig, options: RunOptions) -> Result<Vec<BoundReport>> {
    let mut problem = problem_for(config, options)?.with_mode(crate::stochastic::PathMode::FullPolar);
    problem.directions.clear();
    if config.estimator.name.starts_with("semigroup") {
        Ok(vec![grad_semigroup_bound(&problem)?, log_grad_bound(&problem)?])
    } else {
        Ok(vec![pole_grad_bound(&problem)?, pole_log_grad_bound(&problem)?])
    }
}
