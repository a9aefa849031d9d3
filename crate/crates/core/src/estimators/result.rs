//! Monte Carlo aggregates.

use serde::{Deserialize, Serialize};

use crate::stats::MeanError;
use crate::stochastic::GridSummary;

/// Known value an estimate is compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub value: Vec<f64>,
    pub source: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Effective sample size of the path weights.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_sample_size: Option<f64>,
    /// Largest frame Gram deviation before re-orthonormalization.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gram_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub estimator: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    /// Component names; `value` for scalars, frame directions for gradients.
    pub components: Vec<String>,
    pub estimate: Vec<f64>,
    pub stderr: Vec<f64>,
    /// 95% normal confidence intervals.
    pub confidence_interval: Vec<[f64; 2]>,
    pub n_paths: usize,
    pub seed: u64,
    pub grid: GridSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_score: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl EstimatorResult {
    pub(crate) fn new(
        estimator: &str,
        components: Vec<String>,
        values: &[MeanError],
        seed: u64,
        grid: GridSummary,
    ) -> Self {
        let estimate: Vec<f64> = values.iter().map(|m| m.mean).collect();
        let stderr: Vec<f64> = values.iter().map(|m| m.stderr).collect();
        let confidence_interval = estimate.iter().zip(&stderr).map(|(e, s)| [e - 1.96 * s, e + 1.96 * s]).collect();
        EstimatorResult {
            estimator: estimator.to_string(),
            variant: None,
            components,
            estimate,
            stderr,
            confidence_interval,
            n_paths: values.first().map_or(0, |m| m.count),
            seed,
            grid,
            reference: None,
            z_score: None,
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn scalar(&self) -> f64 {
        self.estimate[0]
    }

    pub fn scalar_stderr(&self) -> f64 {
        self.stderr[0]
    }

    /// Attaches a reference and the deviation in standard errors.
    ///
    /// Zero standard errors are floored at `1e-15·|reference|` so exact estimators get finite scores.
    pub fn with_reference(mut self, value: Vec<f64>, source: &str) -> Self {
        let z = self
            .estimate
            .iter()
            .zip(&self.stderr)
            .zip(&value)
            .map(|((e, s), r)| {
                let floor = 1e-15 * r.abs().max(f64::MIN_POSITIVE);
                (e - r) / s.max(floor)
            })
            .collect();
        self.z_score = Some(z);
        self.reference = Some(Reference { value, source: source.to_string() });
        self
    }
}
