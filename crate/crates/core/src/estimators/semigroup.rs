//! Forward-path estimators: the semigroup and its gradient.

use super::formula::{FormulaRegistry, GradientPathData};
use super::kernel::constant_decay;
use super::parallel::map_paths;
use super::problem::Problem;
use super::result::EstimatorResult;
use crate::error::{Error, Result};
use crate::stats::{mean_error, MeanError};
use crate::stochastic::RngStream;
use crate::weights::{cumulative_trapezoid, reduced_potential, trapezoid};

/// Per-path samples of `f(x_T) exp(−∫_0^T V(x_s) ds)` over forward paths.
pub fn semigroup_samples(problem: &Problem) -> Result<Vec<f64>> {
    problem.validate_common()?;
    let sim = problem.simulator();
    let x0 = problem.start();
    let steps = problem.grid.steps();
    let f = problem.test_function.as_ref();
    let decay = constant_decay(problem);
    map_paths(problem.n_paths, problem.workers, |i| {
        let mut rng = RngStream::new(problem.seed, i as u64);
        let path = sim.forward(&x0, &[], &mut rng)?;
        let reduced = reduced_potential(&path, problem.potential.as_ref())?;
        let end = path.radii[path.steps()];
        Ok(f.value(end) * (-trapezoid(&reduced, steps)).exp() * decay)
    })
}

/// `P_T^{h,V} f(x0) = E[f(x_T) exp(−∫_0^T V(x_s) ds)]` over forward paths.
pub fn estimate_semigroup(problem: &Problem) -> Result<EstimatorResult> {
    let value = mean_error(&semigroup_samples(problem)?);
    Ok(EstimatorResult::new("semigroup", vec!["value".into()], &[value], problem.seed, problem.grid.summary()))
}

/// `d P_T^{h,V} f` at `x0` along the requested directions.
pub fn estimate_grad_semigroup(problem: &Problem) -> Result<EstimatorResult> {
    problem.validate_gradient()?;
    let formula = FormulaRegistry::default().get(&problem.variant)?;
    let grid = &problem.grid;
    let horizon = grid.horizon();
    let m = grid.len();
    let t_inner = problem.t_inner.unwrap_or(horizon);
    if !(t_inner > 0.0 && t_inner <= horizon * (1.0 + 1e-12)) {
        return Err(Error::Config(format!("t_inner must lie in (0, T], got {t_inner}")));
    }
    let upto = grid
        .node_index(t_inner)
        .ok_or_else(|| Error::Config(format!("t_inner = {t_inner} is not a node of the time grid")))?;
    if upto != m && !formula.supports_inner_time() {
        return Err(Error::Config(format!("the '{}' formula is evaluated at t = T only", formula.name())));
    }
    let directions = problem.resolved_directions();
    let sim = problem.simulator();
    let x0 = problem.start();
    let (nodes, steps) = (grid.nodes(), grid.steps());
    let v = problem.potential.as_ref();
    let f = problem.test_function.as_ref();
    let rows = map_paths(problem.n_paths, problem.workers, |i| {
        let mut rng = RngStream::new(problem.seed, i as u64);
        let path = sim.forward(&x0, &directions, &mut rng)?;
        let reduced = reduced_potential(&path, v)?;
        let slope: Vec<f64> = path.radii.iter().map(|&r| v.d1(r)).collect();
        let prefix = cumulative_trapezoid(&reduced, steps);
        let total = prefix[m];
        let suffix: Vec<f64> = prefix.iter().map(|p| (p - total).exp()).collect();
        let end = f.value(path.radii[m]);
        let weight = if formula.weight_includes_potential() { end * (-total).exp() } else { end };
        let integrals: Vec<Vec<f64>> = (0..directions.len()).map(|j| path.stochastic_integral(j)).collect();
        let radial: Vec<Vec<f64>> = path.directions.iter().map(|d| d.radial.clone()).collect();
        let data = GradientPathData {
            nodes,
            steps,
            potential: &reduced,
            potential_slope: &slope,
            integrals: &integrals,
            radial: &radial,
            suffix: &suffix,
        };
        let mut bracket = vec![0.0; directions.len()];
        formula.bracket(&data, upto, &mut bracket);
        Ok(bracket.into_iter().map(|b| weight * b).collect::<Vec<f64>>())
    })?;
    let decay = constant_decay(problem);
    let values: Vec<MeanError> = (0..directions.len())
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let s = mean_error(&col);
            MeanError { mean: s.mean * decay, stderr: s.stderr * decay, count: s.count }
        })
        .collect();
    let mut result =
        EstimatorResult::new("semigroup-gradient", problem.direction_labels(), &values, problem.seed, grid.summary());
    result.variant = Some(formula.name().to_string());
    Ok(result)
}
