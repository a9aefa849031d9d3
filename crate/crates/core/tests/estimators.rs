use std::sync::Arc;

use fkbridge::estimators::{
    estimate_grad_kernel, estimate_grad_semigroup, Estimator, EstimatorRegistry, EstimatorResult, FnEstimator, Problem,
};
use fkbridge::geometry::{GaussianBump, ModelGeometry};
use fkbridge::reference::{h2_kernel_dr, h3_kernel_dr};
use fkbridge::stochastic::{PathMode, Refinement};

fn gradient_problem(g: ModelGeometry, r0: f64, paths: usize) -> Problem {
    Problem::new(g, r0, 1.0)
        .unwrap()
        .with_grid(256, Refinement::Geometric { ratio: 0.9 })
        .unwrap()
        .with_mode(PathMode::FullPolar)
        .with_paths(paths)
        .with_seed(99)
}

fn assert_close(label: &str, r: &EstimatorResult, j: usize, exact: f64) {
    let (e, s) = (r.estimate[j], r.stderr[j]);
    assert!((e - exact).abs() <= 4.0 * s.max(1e-14), "{label}: {e} ± {s} vs {exact}");
}

#[test]
fn hyperbolic_kernel_gradients_match_references() {
    let r = estimate_grad_kernel(&gradient_problem(ModelGeometry::hyperbolic(3, 1.0).unwrap(), 0.8, 10_000)).unwrap();
    assert_close("H³ radial", &r, 0, h3_kernel_dr(0.8, 1.0).unwrap());
    assert_close("H³ tangential", &r, 1, 0.0);
    let r = estimate_grad_kernel(&gradient_problem(ModelGeometry::hyperbolic(2, 1.0).unwrap(), 1.5, 10_000)).unwrap();
    assert_close("H² radial", &r, 0, h2_kernel_dr(1.5, 1.0).unwrap());
}

#[test]
fn flat_semigroup_gradient_of_a_gaussian() {
    let w: f64 = 1.0;
    let (r0, t) = (0.9, 1.0);
    let f = Arc::new(GaussianBump::new(0.0, 1.0, w).unwrap());
    for variant in ["bc1", "holder"] {
        let p = gradient_problem(ModelGeometry::euclidean(2).unwrap(), r0, 20_000)
            .with_test_function(f.clone())
            .with_variant(variant);
        let r = estimate_grad_semigroup(&p).unwrap();
        let s = w * w + 2.0 * t;
        let value = (w * w / s) * (-r0 * r0 / s).exp();
        assert_close(variant, &r, 0, -2.0 * r0 / s * value);
        assert_close(variant, &r, 1, 0.0);
    }
}

struct Doubling;

impl Estimator for Doubling {
    fn name(&self) -> &'static str {
        "doubled-kernel"
    }
    fn estimate(&self, problem: &Problem) -> fkbridge::Result<EstimatorResult> {
        let mut r = fkbridge::estimators::estimate_kernel(problem)?;
        r.estimate.iter_mut().for_each(|e| *e *= 2.0);
        Ok(r)
    }
}

#[test]
fn registry_accepts_new_strategies() {
    let mut registry = EstimatorRegistry::default();
    registry.register(Arc::new(Doubling));
    registry.register(Arc::new(FnEstimator::new("plain", fkbridge::estimators::estimate_kernel)));
    let p = Problem::new(ModelGeometry::euclidean(2).unwrap(), 1.0, 1.0).unwrap().with_paths(10);
    let doubled = registry.get("doubled-kernel").unwrap().estimate(&p).unwrap();
    let plain = registry.get("plain").unwrap().estimate(&p).unwrap();
    assert_eq!(doubled.estimate[0], 2.0 * plain.estimate[0]);
    assert!(registry.names().contains(&"log-gradient"));
}
