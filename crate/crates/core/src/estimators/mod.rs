//! Monte Carlo estimators behind a common interface, selectable by name.

mod formula;
mod kernel;
mod parallel;
mod problem;
mod result;
mod semigroup;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use formula::{Bounded, Differentiable, FormulaRegistry, GradientFormula, GradientPathData};
pub use kernel::{
    estimate_girsanov_mean, estimate_grad_kernel, estimate_grad_log_kernel, estimate_kernel, kernel_finite_difference,
    kernel_path_weights, kernel_prefactor,
};
pub use parallel::map_paths;
pub use problem::Problem;
pub use result::{Diagnostics, EstimatorResult, Reference};
pub use semigroup::{estimate_grad_semigroup, estimate_semigroup, semigroup_samples};

use crate::error::{Error, Result};

pub trait Estimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn estimate(&self, problem: &Problem) -> Result<EstimatorResult>;
}

/// An estimator backed by a plain function.
#[derive(Clone, Copy)]
pub struct FnEstimator {
    name: &'static str,
    run: fn(&Problem) -> Result<EstimatorResult>,
}

impl FnEstimator {
    pub const fn new(name: &'static str, run: fn(&Problem) -> Result<EstimatorResult>) -> Self {
        FnEstimator { name, run }
    }
}

impl Estimator for FnEstimator {
    fn name(&self) -> &'static str {
        self.name
    }
    fn estimate(&self, problem: &Problem) -> Result<EstimatorResult> {
        (self.run)(problem)
    }
}

#[derive(Clone)]
pub struct EstimatorRegistry {
    entries: BTreeMap<&'static str, Arc<dyn Estimator>>,
}

impl fmt::Debug for EstimatorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        let mut r = EstimatorRegistry { entries: BTreeMap::new() };
        for e in [
            FnEstimator::new("kernel", estimate_kernel),
            FnEstimator::new("kernel-gradient", estimate_grad_kernel),
            FnEstimator::new("log-gradient", estimate_grad_log_kernel),
            FnEstimator::new("semigroup", estimate_semigroup),
            FnEstimator::new("semigroup-gradient", estimate_grad_semigroup),
            FnEstimator::new("girsanov-density", estimate_girsanov_mean),
        ] {
            r.register(Arc::new(e));
        }
        r
    }
}

impl EstimatorRegistry {
    pub fn register(&mut self, estimator: Arc<dyn Estimator>) {
        self.entries.insert(estimator.name(), estimator);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Estimator>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::Config(format!("unknown estimator '{name}'; available: {}", self.names().join(", "))))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}
