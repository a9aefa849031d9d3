//! Explicit gradient bounds and the constants that enter them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::estimators::{
    estimate_grad_kernel, estimate_grad_log_kernel, estimate_grad_semigroup, kernel_path_weights, EstimatorResult,
    Problem,
};
use crate::geometry::{scan_radii, ModelGeometry};
use crate::quadrature::{integrate, Tolerance};
use crate::stats::{mean_error, MeanError};
use crate::weights::certify;

/// Below this `|Kt|` the constants are evaluated by their Taylor series.
const SERIES_THRESHOLD: f64 = 1e-4;

/// `C_1(t, K) = (1 − e^{−Kt}) / (Kt)`.
pub fn c1(t: f64, k: f64) -> Result<f64> {
    check_time(t)?;
    let x = k * t;
    if x.abs() < SERIES_THRESHOLD {
        return Ok(1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0);
    }
    Ok(-(-x).exp_m1() / x)
}

/// `C_2(t, K) = (2 / (Kt)) (1 + (e^{−Kt/2} − 1) / (Kt/2))`.
pub fn c2(t: f64, k: f64) -> Result<f64> {
    check_time(t)?;
    let x = k * t;
    if x.abs() < SERIES_THRESHOLD {
        return Ok(0.5 - x / 12.0 + x * x / 96.0 - x * x * x / 960.0);
    }
    let y = x / 2.0;
    Ok((1.0 + (-y).exp_m1() / y) / y)
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("time must be positive, got {t}")))
    }
}

/// An explicit bound set against the quantity it controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub bound_value: f64,
    pub observed_value: f64,
    /// `bound_value − observed_value`.
    pub margin: f64,
    /// Three combined standard errors of the two sides.
    pub tolerance: f64,
    pub satisfied: bool,
    pub inputs: BTreeMap<String, f64>,
}

impl BoundReport {
    fn new(name: &str, bound: MeanError, observed: MeanError, inputs: BTreeMap<String, f64>) -> Self {
        let margin = bound.mean - observed.mean;
        let tolerance = 3.0 * bound.stderr.hypot(observed.stderr);
        BoundReport {
            name: name.to_string(),
            bound_value: bound.mean,
            observed_value: observed.mean,
            margin,
            tolerance,
            satisfied: margin >= -tolerance,
            inputs,
        }
    }

    /// True when the bound holds with room to spare beyond the Monte Carlo noise.
    pub fn clears_noise(&self) -> bool {
        self.margin > self.tolerance
    }
}

/// Euclidean norm of an estimated vector with a first-order standard error.
fn vector_norm(result: &EstimatorResult) -> MeanError {
    let norm = result.estimate.iter().map(|x| x * x).sum::<f64>().sqrt();
    let stderr = if norm > 0.0 {
        result.estimate.iter().zip(&result.stderr).map(|(x, s)| (x / norm * s).powi(2)).sum::<f64>().sqrt()
    } else {
        result.stderr.iter().map(|s| s * s).sum::<f64>().sqrt()
    };
    MeanError { mean: norm, stderr, count: result.n_paths }
}

fn divide(a: MeanError, b: MeanError) -> MeanError {
    let mean = a.mean / b.mean;
    let rel = if a.mean != 0.0 { (a.stderr / a.mean).hypot(b.stderr / b.mean) } else { 0.0 };
    let stderr = if a.mean != 0.0 { mean.abs() * rel } else { a.stderr / b.mean };
    MeanError { mean, stderr, count: a.count }
}

/// Entropy side of the semigroup bounds for a fixed problem.
struct EntropyTerm {
    normalization: MeanError,
    entropy: MeanError,
}

fn entropy_term(problem: &Problem) -> Result<EntropyTerm> {
    let samples = crate::estimators::semigroup_samples(problem)?;
    if samples.iter().any(|&s| s < 0.0) {
        return Err(Error::Precondition("the entropy bound needs a non-negative test function".into()));
    }
    let normalization = mean_error(&samples);
    if !(normalization.mean > 1e-12 && normalization.mean > 3.0 * normalization.stderr) {
        return Err(Error::Precondition(format!(
            "P_t f(x0) = {:.3e} ± {:.1e} is indistinguishable from zero; cannot normalize",
            normalization.mean, normalization.stderr
        )));
    }
    let plus: Vec<f64> = samples
        .iter()
        .map(|&s| {
            let phi = s / normalization.mean;
            if phi > 1.0 {
                phi * phi.ln()
            } else {
                0.0
            }
        })
        .collect();
    Ok(EntropyTerm { normalization, entropy: mean_error(&plus) })
}

/// `(1/√t) (2 C_1 ℋ)^{1/2} + t C_2 |∇V|_∞` with a delta-method error from `ℋ`.
fn entropy_bound(t: f64, k: f64, entropy: MeanError, grad_v: f64) -> Result<MeanError> {
    let a = (2.0 * c1(t, k)?).sqrt() / t.sqrt();
    let root = entropy.mean.max(0.0).sqrt();
    let mean = a * root + t * c2(t, k)? * grad_v;
    let stderr = if root > 0.0 { a * entropy.stderr / (2.0 * root) } else { 0.0 };
    Ok(MeanError { mean, stderr, count: entropy.count })
}

fn semigroup_inputs(problem: &Problem, term: &EntropyTerm, k: f64) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("t".to_string(), problem.horizon()),
        ("K".to_string(), k),
        ("r0".to_string(), problem.r0),
        ("grad_v_sup".to_string(), problem.potential.grad_bound()),
        ("normalization".to_string(), term.normalization.mean),
        ("entropy".to_string(), term.entropy.mean),
        ("n_paths".to_string(), problem.n_paths as f64),
    ])
}

/// `|∇P_t f̂|(x0)` for `f̂ = f / P_t f(x0)`, set against the entropy bound at `t = T`.
pub fn grad_semigroup_bound(problem: &Problem) -> Result<BoundReport> {
    let term = entropy_term(problem)?;
    let k = problem.geometry.rho_h_lower();
    let bound = entropy_bound(problem.horizon(), k, term.entropy, problem.potential.grad_bound())?;
    let gradient = estimate_grad_semigroup(&problem.clone().with_variant("bc1"))?;
    let observed = divide(vector_norm(&gradient), term.normalization);
    Ok(BoundReport::new("grad_semigroup", bound, observed, semigroup_inputs(problem, &term, k)))
}

/// `|∇ log P_t f|(x0)` against the same bound with the normalized entropy `ℋ_t(f, x0)`.
pub fn log_grad_bound(problem: &Problem) -> Result<BoundReport> {
    let term = entropy_term(problem)?;
    let k = problem.geometry.rho_h_lower();
    let bound = entropy_bound(problem.horizon(), k, term.entropy, problem.potential.grad_bound())?;
    let gradient = estimate_grad_semigroup(&problem.clone().with_variant("bc1"))?;
    let observed = divide(vector_norm(&gradient), term.normalization);
    Ok(BoundReport::new("log_grad_semigroup", bound, observed, semigroup_inputs(problem, &term, k)))
}

/// Both sides of `E[φΨ] ≤ E[φ log φ] + log E[e^Ψ]` on samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyInequality {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the entropy inequality under the empirical measure, with `φ` rescaled to mean one.
pub fn entropy_inequality(phi: &[f64], psi: &[f64]) -> Result<EntropyInequality> {
    if phi.len() != psi.len() || phi.is_empty() {
        return Err(domain("φ and Ψ need the same non-zero number of samples"));
    }
    if phi.iter().any(|&p| p < 0.0) {
        return Err(domain("φ must be non-negative"));
    }
    let n = phi.len() as f64;
    let scale = phi.iter().sum::<f64>() / n;
    if scale <= 0.0 {
        return Err(domain("φ has zero mean"));
    }
    let lhs = phi.iter().zip(psi).map(|(p, s)| p / scale * s).sum::<f64>() / n;
    let entropy = phi
        .iter()
        .map(|&p| {
            let q = p / scale;
            if q > 0.0 {
                q * q.ln()
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / n;
    let top = psi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_mean_exp = top + (psi.iter().map(|s| (s - top).exp()).sum::<f64>() / n).ln();
    let rhs = entropy + log_mean_exp;
    Ok(EntropyInequality { lhs, rhs, holds: lhs <= rhs + 1e-12 * (1.0 + rhs.abs()) })
}

/// Ingredients of the explicit pole-gradient constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleBoundInputs {
    pub dim: usize,
    /// Lower bound `K` on `Ric − 2 Hess h`.
    pub k: f64,
    pub horizon: f64,
    /// `d(x0, y0)`.
    pub distance: f64,
    pub grad_h: f64,
    pub grad_log_j: f64,
    pub grad_v: f64,
}

/// `(1/T)[√(∫e^{−Kr}) + |dV|∫e^{−Kr/2}(T−r) + (|∇h| + ½|∇log J|)∫e^{−Kr/2}
/// + ∫e^{−Kr/2}(d/T + √(nr/T)/√(T−r))]`, each integral over `[0, T]`.
pub fn pole_bound_factor(p: &PoleBoundInputs) -> Result<f64> {
    let t = p.horizon;
    check_time(t)?;
    let k = p.k;
    let tol = Tolerance::new(0.0, 1e-12);
    let damp = |r: f64| (-k * r / 2.0).exp();
    let energy = t * c1(t, k)?;
    let drift = integrate(damp, 0.0, t, tol)?.value;
    let potential = integrate(|r| damp(r) * (t - r), 0.0, t, tol)?.value;
    // r = T − u² removes the inverse square root at r = T.
    let n = p.dim as f64;
    let bessel =
        integrate(|u| 2.0 * damp(t - u * u) * (n * (t - u * u) / t).max(0.0).sqrt(), 0.0, t.sqrt(), tol)?.value;
    let total = energy.sqrt()
        + p.grad_v * potential
        + (p.grad_h + 0.5 * p.grad_log_j) * drift
        + p.distance / t * drift
        + bessel;
    Ok(total / t)
}

/// `sup_r |∇ log J|` over the certification scan.
pub fn grad_log_jacobian_sup(g: &ModelGeometry) -> Result<f64> {
    let mut sup = 0.0f64;
    for r in scan_radii(g.scan_limit()) {
        sup = sup.max(g.grad_log_jacobian(r)?.abs());
    }
    Ok(sup)
}

struct PoleSetup {
    inputs: PoleBoundInputs,
    factor: f64,
    log_beta_sup: f64,
}

fn pole_setup(problem: &Problem) -> Result<PoleSetup> {
    problem.validate_gradient()?;
    let g = &problem.geometry;
    let certificate = certify(g, &problem.drift, problem.potential.as_ref())?;
    let k = g.rho_h_lower();
    if !k.is_finite() {
        return Err(Error::Precondition("Ric − 2 Hess h has no finite lower bound".into()));
    }
    let inputs = PoleBoundInputs {
        dim: g.dim(),
        k,
        horizon: problem.horizon(),
        distance: problem.r0,
        grad_h: g.weight().grad_bound(),
        grad_log_j: grad_log_jacobian_sup(g)?,
        grad_v: problem.potential.grad_bound(),
    };
    let factor = pole_bound_factor(&inputs)?;
    Ok(PoleSetup { inputs, factor, log_beta_sup: problem.horizon() * certificate.sup })
}

fn pole_inputs(setup: &PoleSetup, extra: &[(&str, f64)]) -> BTreeMap<String, f64> {
    let p = &setup.inputs;
    let mut map = BTreeMap::from([
        ("n".to_string(), p.dim as f64),
        ("K".to_string(), p.k),
        ("T".to_string(), p.horizon),
        ("distance".to_string(), p.distance),
        ("grad_h_sup".to_string(), p.grad_h),
        ("grad_log_j_sup".to_string(), p.grad_log_j),
        ("grad_v_sup".to_string(), p.grad_v),
        ("factor".to_string(), setup.factor),
    ]);
    map.extend(extra.iter().map(|(k, v)| (k.to_string(), *v)));
    map
}

/// `|∇p_T^{h,V}(·, y0)|(x0) / k_T(x0, y0)` against `e^{h(y0)−h(x0)} |β|_∞ × factor`.
pub fn pole_grad_bound(problem: &Problem) -> Result<BoundReport> {
    let setup = pole_setup(problem)?;
    let g = &problem.geometry;
    let h = g.weight();
    let beta_sup = setup.log_beta_sup.exp();
    let bound = (h.value(0.0) - h.value(problem.r0)).exp() * beta_sup * setup.factor;
    let k_t = g.gauss_kernel_k(problem.r0, problem.horizon())?;
    let gradient = estimate_grad_kernel(problem)?;
    let norm = vector_norm(&gradient);
    let observed = MeanError { mean: norm.mean / k_t, stderr: norm.stderr / k_t, count: norm.count };
    let inputs = pole_inputs(&setup, &[("beta_sup", beta_sup)]);
    Ok(BoundReport::new("pole_grad_kernel", MeanError { mean: bound, stderr: 0.0, count: 0 }, observed, inputs))
}

/// `|∇ log p_T^{h,V}(·, y0)|(x0)` against `|β|_∞ / E[β] × factor`.
pub fn pole_log_grad_bound(problem: &Problem) -> Result<BoundReport> {
    let setup = pole_setup(problem)?;
    // The sampled weights exclude the constant part of V; put it back through the supremum.
    let (weights, _) = kernel_path_weights(problem)?;
    let mean = mean_error(&weights);
    let offset = problem.potential.offset() * problem.horizon();
    let z_sup = (setup.log_beta_sup + offset).exp() / mean.mean;
    let z_stderr = z_sup * mean.stderr / mean.mean;
    let bound = MeanError { mean: z_sup * setup.factor, stderr: z_stderr * setup.factor, count: mean.count };
    let observed = vector_norm(&estimate_grad_log_kernel(problem)?);
    let inputs = pole_inputs(&setup, &[("normalized_weight_sup", z_sup)]);
    Ok(BoundReport::new("pole_log_grad_kernel", bound, observed, inputs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GaussianBump, RadialField};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn constants_at_unit_arguments() {
        assert_relative_eq!(c1(1.0, 1.0).unwrap(), 1.0 - (-1f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(c1(1.0, 1.0).unwrap(), 0.632121, epsilon = 5e-7);
        assert_relative_eq!(c2(1.0, 1.0).unwrap(), 2.0 * (1.0 + ((-0.5f64).exp() - 1.0) / 0.5), epsilon = 1e-15);
        assert_relative_eq!(c2(1.0, 1.0).unwrap(), 0.426123, epsilon = 5e-7);
        assert_eq!(c1(2.0, 0.0).unwrap(), 1.0);
        assert_eq!(c2(2.0, 0.0).unwrap(), 0.5);
        assert!(c1(0.0, 1.0).is_err());
        assert!(c2(-1.0, 1.0).is_err());
    }

    #[test]
    fn small_time_limits() {
        for k in [-3.0, 1.0, 5.0] {
            assert_relative_eq!(c1(1e-9, k).unwrap(), 1.0, epsilon = 1e-8);
            let t = 1e-9;
            assert!((t * c2(t, k).unwrap()).abs() < 1e-8);
        }
        // Large time with K > 0: t C_2 → 2/K.
        let k = 2.0;
        assert_relative_eq!(1e6 * c2(1e6, k).unwrap(), 2.0 / k, max_relative = 1e-5);
    }

    #[test]
    fn branch_continuity() {
        for k in [1.0, -1.0] {
            let below = (SERIES_THRESHOLD * (1.0 - 1e-9)) * k;
            let above = (SERIES_THRESHOLD * (1.0 + 1e-9)) * k;
            assert!((c1(1.0, below).unwrap() - c1(1.0, above).unwrap()).abs() < 1e-10);
            assert!((c2(1.0, below).unwrap() - c2(1.0, above).unwrap()).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn constants_are_positive_and_ordered(t in 1e-3f64..10.0, k in -3.0f64..3.0) {
            let a = c1(t, k).unwrap();
            let b = c2(t, k).unwrap();
            prop_assert!(a > 0.0 && b > 0.0);
            // C_1 decreases in K.
            prop_assert!(c1(t, k + 0.1).unwrap() < a);
        }

        #[test]
        fn entropy_inequality_holds_on_samples(
            phi in proptest::collection::vec(0.0f64..5.0, 2..50),
            seed in proptest::collection::vec(-3.0f64..3.0, 50),
        ) {
            prop_assume!(phi.iter().any(|&p| p > 0.0));
            let psi = &seed[..phi.len()];
            let check = entropy_inequality(&phi, psi).unwrap();
            prop_assert!(check.holds, "{} > {}", check.lhs, check.rhs);
        }
    }

    #[test]
    fn pole_factor_is_affine_in_grad_v() {
        let base =
            PoleBoundInputs { dim: 3, k: -2.0, horizon: 1.0, distance: 1.0, grad_h: 0.0, grad_log_j: 2.0, grad_v: 0.0 };
        let f0 = pole_bound_factor(&base).unwrap();
        let f1 = pole_bound_factor(&PoleBoundInputs { grad_v: 1.0, ..base }).unwrap();
        let f2 = pole_bound_factor(&PoleBoundInputs { grad_v: 2.0, ..base }).unwrap();
        assert!(f1 > f0);
        assert_relative_eq!(f2 - f1, f1 - f0, max_relative = 1e-10);
    }

    #[test]
    fn pole_factor_flat_closed_form() {
        // K = 0: √T + |dV| T²/2 + (|∇h| + ½|∇log J| + d/T) T + π√(nT)/2, all over T.
        let p =
            PoleBoundInputs { dim: 2, k: 0.0, horizon: 0.5, distance: 1.0, grad_h: 0.3, grad_log_j: 0.0, grad_v: 0.7 };
        let t: f64 = 0.5;
        let expected =
            (t.sqrt() + 0.7 * t * t / 2.0 + (0.3 + 1.0 / t) * t + (2.0 * t).sqrt() * std::f64::consts::PI / 2.0) / t;
        assert_relative_eq!(pole_bound_factor(&p).unwrap(), expected, max_relative = 1e-10);
    }

    #[test]
    fn hyperbolic_log_jacobian_gradient_sup() {
        let g = ModelGeometry::hyperbolic(3, 1.0).unwrap();
        assert_relative_eq!(grad_log_jacobian_sup(&g).unwrap(), 2.0, max_relative = 1e-2);
        assert_eq!(grad_log_jacobian_sup(&ModelGeometry::euclidean(2).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn trivial_semigroup_bound() {
        let p = Problem::new(ModelGeometry::euclidean(2).unwrap(), 1.0, 1.0)
            .unwrap()
            .with_grid(32, crate::stochastic::Refinement::None)
            .unwrap()
            .with_paths(400)
            .with_mode(crate::stochastic::PathMode::FullPolar);
        let report = log_grad_bound(&p).unwrap();
        assert_eq!(report.bound_value, 0.0);
        assert_eq!(report.inputs["entropy"], 0.0);
        assert!(report.satisfied);
    }

    #[test]
    fn semigroup_bound_rejects_vanishing_normalization() {
        let f: Arc<dyn RadialField> = Arc::new(GaussianBump::new(0.0, 0.0, 1.0).unwrap());
        let p = Problem::new(ModelGeometry::euclidean(2).unwrap(), 1.0, 1.0)
            .unwrap()
            .with_grid(8, crate::stochastic::Refinement::None)
            .unwrap()
            .with_paths(10)
            .with_test_function(f);
        assert!(matches!(grad_semigroup_bound(&p), Err(Error::Precondition(_))));
    }
}
