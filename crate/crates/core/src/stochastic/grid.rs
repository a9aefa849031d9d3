//! Time grids on `[0, T]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Refinement {
    #[serde(alias = "uniform")]
    None,
    /// Step sizes shrink geometrically towards `T`; `ratio` is last step over first step.
    Geometric { ratio: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    refinement: Refinement,
    nodes: Vec<f64>,
    steps: Vec<f64>,
    /// `T − t_k`, accumulated from the end so that it is exact to rounding near `T`.
    remaining: Vec<f64>,
}

/// Compact description of a grid for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub horizon: f64,
    pub steps: usize,
    pub refinement: Refinement,
    pub first_step: f64,
    pub last_step: f64,
}

impl TimeGrid {
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        Self::new(horizon, steps, Refinement::None)
    }

    pub fn geometric(horizon: f64, steps: usize, ratio: f64) -> Result<Self> {
        Self::new(horizon, steps, Refinement::Geometric { ratio })
    }

    pub fn new(horizon: f64, steps: usize, refinement: Refinement) -> Result<Self> {
        if steps < 2 {
            return Err(Error::Config(format!("grid.steps ≥ 2 required, got {steps}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("time horizon must be positive and finite, got {horizon}")));
        }
        let sizes: Vec<f64> = match refinement {
            Refinement::None => vec![horizon / steps as f64; steps],
            Refinement::Geometric { ratio } => {
                if !(ratio > 0.0 && ratio <= 1.0) {
                    return Err(Error::Config(format!("geometric refinement ratio must lie in (0, 1], got {ratio}")));
                }
                let q = ratio.powf(1.0 / (steps - 1) as f64);
                let raw: Vec<f64> = (0..steps).map(|k| q.powi(k as i32)).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|s| horizon * s / total).collect()
            }
        };
        let mut nodes = Vec::with_capacity(steps + 1);
        let mut t = 0.0;
        nodes.push(t);
        for s in &sizes[..steps - 1] {
            t += s;
            nodes.push(t);
        }
        nodes.push(horizon);
        let mut remaining = vec![0.0; steps + 1];
        for k in (0..steps).rev() {
            remaining[k] = remaining[k + 1] + sizes[k];
        }
        remaining[0] = horizon;
        // Use node differences as steps so that steps sum to T exactly.
        let steps_vec: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(TimeGrid { horizon, refinement, nodes, steps: steps_vec, remaining })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn refinement(&self) -> Refinement {
        self.refinement
    }

    /// Number of steps `m`; there are `m + 1` nodes.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn remaining(&self) -> &[f64] {
        &self.remaining
    }

    /// Index of the node equal to `t` up to rounding.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * self.horizon;
        let k = self.nodes.partition_point(|&s| s < t - tol);
        (k < self.nodes.len() && (self.nodes[k] - t).abs() <= tol).then_some(k)
    }

    pub fn summary(&self) -> GridSummary {
        GridSummary {
            horizon: self.horizon,
            steps: self.len(),
            refinement: self.refinement,
            first_step: self.steps[0],
            last_step: self.steps[self.len() - 1],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(TimeGrid::uniform(1.0, 1).unwrap_err().to_string().contains("grid.steps ≥ 2"));
        assert!(TimeGrid::uniform(0.0, 10).is_err());
        assert!(TimeGrid::geometric(1.0, 10, 1.5).is_err());
    }

    #[test]
    fn node_lookup() {
        let g = TimeGrid::uniform(1.0, 8).unwrap();
        assert_eq!(g.node_index(0.5), Some(4));
        assert_eq!(g.node_index(1.0), Some(8));
        assert_eq!(g.node_index(0.3), None);
    }

    proptest! {
        #[test]
        fn grids_are_increasing_and_end_at_horizon(
            horizon in 0.01f64..50.0,
            steps in 2usize..400,
            ratio in 0.01f64..=1.0,
        ) {
            for grid in [TimeGrid::uniform(horizon, steps).unwrap(), TimeGrid::geometric(horizon, steps, ratio).unwrap()] {
                prop_assert_eq!(grid.nodes().len(), steps + 1);
                prop_assert_eq!(grid.nodes()[steps], horizon);
                prop_assert!(grid.nodes().windows(2).all(|w| w[1] > w[0]));
                prop_assert!(grid.steps()[steps - 1] <= grid.steps()[0] * (1.0 + 1e-9));
                prop_assert!((grid.remaining()[0] - horizon).abs() <= 1e-12 * horizon);
                prop_assert_eq!(grid.remaining()[steps], 0.0);
                let total: f64 = grid.steps().iter().sum();
                prop_assert!((total - horizon).abs() <= 1e-12 * horizon);
            }
        }
    }
}
