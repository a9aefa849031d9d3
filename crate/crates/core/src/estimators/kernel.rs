//! Bridge estimators: kernel, kernel gradient, log-gradient and the Girsanov density.

use super::formula::{FormulaRegistry, GradientPathData};
use super::parallel::map_paths;
use super::problem::Problem;
use super::result::EstimatorResult;
use crate::error::{Error, Result};
use crate::stats::{effective_sample_size, mean_error, ratio_error, MeanError};
use crate::stochastic::{PathMode, RngStream};
use crate::weights::{certify, cumulative_trapezoid, girsanov_density, reduced_potential, trapezoid};

/// `e^{(h−S)(y0) − (h−S)(x0)} k_T(x0, y0)`, the deterministic factor of the kernel.
pub fn kernel_prefactor(problem: &Problem) -> Result<f64> {
    let g = &problem.geometry;
    let h = g.weight();
    let z = &problem.drift;
    let r0 = problem.r0;
    let log = h.value(0.0) - h.value(r0) + g.s_field(z, r0)? + g.log_gauss_kernel_k(r0, problem.horizon())?;
    Ok(log.exp())
}

/// Per-path weights `exp ∫(Φ^h + Ψ − (V − c))`; the constant `c` is applied by the caller.
pub fn kernel_path_weights(problem: &Problem) -> Result<(Vec<f64>, f64)> {
    problem.validate_common()?;
    certify(&problem.geometry, &problem.drift, problem.potential.as_ref())?;
    let sim = problem.simulator();
    let x0 = problem.start();
    let steps = problem.grid.steps();
    let results = map_paths(problem.n_paths, problem.workers, |i| {
        let mut rng = RngStream::new(problem.seed, i as u64);
        let path = sim.bridge(&x0, &[], problem.mode, &mut rng)?;
        let reduced = reduced_potential(&path, problem.potential.as_ref())?;
        let rate: Vec<f64> = path.weight_rate.iter().zip(&reduced).map(|(w, v)| w - v).collect();
        let beta = trapezoid(&rate, steps).exp();
        if !beta.is_finite() {
            return Err(Error::Numerical(format!("path {i}: weight is {beta}")));
        }
        Ok((beta, path.gram_deviation))
    })?;
    let gram = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok((results.into_iter().map(|r| r.0).collect(), gram))
}

/// `p_T^{h,Z,V}(x0, y0)` by the bridge representation.
pub fn estimate_kernel(problem: &Problem) -> Result<EstimatorResult> {
    let (weights, gram) = kernel_path_weights(problem)?;
    let prefactor = kernel_prefactor(problem)?;
    let decay = constant_decay(problem);
    let m = mean_error(&weights);
    let value = MeanError { mean: prefactor * m.mean * decay, stderr: prefactor * m.stderr * decay, count: m.count };
    let mut result =
        EstimatorResult::new("kernel", vec!["value".into()], &[value], problem.seed, problem.grid.summary());
    result.diagnostics.effective_sample_size = Some(effective_sample_size(&weights));
    if problem.mode == PathMode::FullPolar {
        result.diagnostics.gram_deviation = Some(gram);
    }
    Ok(result)
}

/// `e^{−cT}` for the constant part `c` of the potential.
pub(crate) fn constant_decay(problem: &Problem) -> f64 {
    (-problem.potential.offset() * problem.horizon()).exp()
}

/// Per-path `(β_V, weight × bracket per direction)` for the gradient formulas.
struct GradientSamples {
    beta: Vec<f64>,
    numerators: Vec<Vec<f64>>,
    gram: f64,
}

fn gradient_samples(problem: &Problem) -> Result<GradientSamples> {
    problem.validate_gradient()?;
    let g = &problem.geometry;
    certify(g, &problem.drift, problem.potential.as_ref())?;
    if !g.rho_h_lower().is_finite() {
        return Err(Error::Precondition("Ric − 2 Hess h has no finite lower bound".into()));
    }
    let formula = FormulaRegistry::default().get(&problem.variant)?;
    let directions = problem.resolved_directions();
    let sim = problem.simulator();
    let x0 = problem.start();
    let grid = &problem.grid;
    let (nodes, steps) = (grid.nodes(), grid.steps());
    let m = grid.len();
    let v = problem.potential.as_ref();
    let rows = map_paths(problem.n_paths, problem.workers, |i| {
        let mut rng = RngStream::new(problem.seed, i as u64);
        let path = sim.bridge(&x0, &directions, PathMode::FullPolar, &mut rng)?;
        let reduced = reduced_potential(&path, v)?;
        let slope: Vec<f64> = path.radii.iter().map(|&r| v.d1(r)).collect();
        let geometric = trapezoid(&path.weight_rate, steps);
        let prefix = cumulative_trapezoid(&reduced, steps);
        let total = prefix[m];
        let suffix: Vec<f64> = prefix.iter().map(|p| (p - total).exp()).collect();
        let beta_v = (geometric - total).exp();
        let weight = if formula.weight_includes_potential() { beta_v } else { geometric.exp() };
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
        formula.bracket(&data, m, &mut bracket);
        let row: Vec<f64> = bracket.iter().map(|b| weight * b).collect();
        if !beta_v.is_finite() || row.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("path {i}: non-finite gradient sample")));
        }
        Ok((beta_v, row, path.gram_deviation))
    })?;
    let mut beta = Vec::with_capacity(rows.len());
    let mut numerators = vec![Vec::with_capacity(rows.len()); directions.len()];
    let mut gram: f64 = 0.0;
    for (b, row, gd) in rows {
        beta.push(b);
        for (col, x) in numerators.iter_mut().zip(row) {
            col.push(x);
        }
        gram = gram.max(gd);
    }
    Ok(GradientSamples { beta, numerators, gram })
}

/// `d p_T^{h,V}(·, y0)` at `x0` along the requested directions.
pub fn estimate_grad_kernel(problem: &Problem) -> Result<EstimatorResult> {
    let samples = gradient_samples(problem)?;
    let g = &problem.geometry;
    let h = g.weight();
    let scale = (h.value(0.0) - h.value(problem.r0)).exp() * g.gauss_kernel_k(problem.r0, problem.horizon())?;
    let decay = constant_decay(problem);
    let values: Vec<MeanError> = samples
        .numerators
        .iter()
        .map(|col| {
            let m = mean_error(col);
            MeanError { mean: scale * m.mean * decay, stderr: scale * m.stderr * decay, count: m.count }
        })
        .collect();
    let mut result = EstimatorResult::new(
        "kernel-gradient",
        problem.direction_labels(),
        &values,
        problem.seed,
        problem.grid.summary(),
    );
    result.variant = Some(problem.variant.clone());
    result.diagnostics.gram_deviation = Some(samples.gram);
    Ok(result)
}

/// `d log p_T^{h,V}(·, y0)` at `x0` by the self-normalized ratio of means.
pub fn estimate_grad_log_kernel(problem: &Problem) -> Result<EstimatorResult> {
    let samples = gradient_samples(problem)?;
    let ess = effective_sample_size(&samples.beta);
    if ess < 10.0 {
        return Err(Error::Numerical(format!(
            "effective sample size of the path weights is {ess:.2} (< 10); the ratio estimate is unreliable"
        )));
    }
    let values: Vec<MeanError> = samples.numerators.iter().map(|col| ratio_error(col, &samples.beta)).collect();
    let mut result =
        EstimatorResult::new("log-gradient", problem.direction_labels(), &values, problem.seed, problem.grid.summary());
    result.variant = Some(problem.variant.clone());
    result.diagnostics.effective_sample_size = Some(ess);
    result.diagnostics.gram_deviation = Some(samples.gram);
    Ok(result)
}

/// `E[M_t]` under the bridge law, with `V ≡ 0`; equals 1 for a martingale.
pub fn estimate_girsanov_mean(problem: &Problem) -> Result<EstimatorResult> {
    problem.validate_common()?;
    let t = problem.girsanov_time.unwrap_or(0.5 * problem.horizon());
    let at = problem.grid.node_index(t).ok_or_else(|| {
        Error::Config(format!("Girsanov time {t} is not a grid node; choose a node of the time grid"))
    })?;
    if at >= problem.grid.len() {
        return Err(Error::Domain(format!("the Girsanov density needs t < T, got t = {t}")));
    }
    let sim = problem.simulator();
    let x0 = problem.start();
    let g = &problem.geometry;
    let values = map_paths(problem.n_paths, problem.workers, |i| {
        let mut rng = RngStream::new(problem.seed, i as u64);
        let path = sim.bridge(&x0, &[], problem.mode, &mut rng)?;
        girsanov_density(&path, g, &problem.drift, at)
    })?;
    let mut result = EstimatorResult::new(
        "girsanov-density",
        vec!["mean".into()],
        &[mean_error(&values)],
        problem.seed,
        problem.grid.summary(),
    );
    result.diagnostics.effective_sample_size = Some(effective_sample_size(&values));
    Ok(result)
}

/// Central difference of the kernel in `r0` with common random numbers.
///
/// Per-path differences make the standard error reflect the paired estimator.
pub fn kernel_finite_difference(problem: &Problem, step: f64) -> Result<EstimatorResult> {
    if !(step > 0.0 && step < problem.r0) {
        return Err(Error::Config(format!("finite-difference step must lie in (0, r0), got {step}")));
    }
    let plus = problem.clone().with_r0(problem.r0 + step);
    let minus = problem.clone().with_r0(problem.r0 - step);
    let (wp, _) = kernel_path_weights(&plus)?;
    let (wm, _) = kernel_path_weights(&minus)?;
    let (pp, pm) = (kernel_prefactor(&plus)?, kernel_prefactor(&minus)?);
    let decay = constant_decay(problem);
    let diffs: Vec<f64> = wp.iter().zip(&wm).map(|(a, b)| (pp * a - pm * b) / (2.0 * step)).collect();
    let m = mean_error(&diffs);
    let value = MeanError { mean: m.mean * decay, stderr: m.stderr * decay, count: m.count };
    Ok(EstimatorResult::new(
        "kernel-finite-difference",
        vec!["radial".into()],
        &[value],
        problem.seed,
        problem.grid.summary(),
    ))
}
