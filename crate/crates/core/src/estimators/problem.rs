//! A fully specified estimation problem.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{ModelGeometry, RadialDrift, RadialField, Zero};
use crate::stochastic::{adapted_basis, PathMode, PathSimulator, Refinement, TimeGrid, TransportScheme};

/// Inputs shared by every estimator.
#[derive(Debug, Clone)]
pub struct Problem {
    pub geometry: ModelGeometry,
    pub potential: Arc<dyn RadialField>,
    pub drift: RadialDrift,
    /// Distance of the start point `x0` from the pole `y0`.
    pub r0: f64,
    /// Unit direction of `x0` in normal coordinates.
    pub theta0: Vec<f64>,
    pub grid: TimeGrid,
    pub n_paths: usize,
    pub seed: u64,
    pub mode: PathMode,
    pub scheme: TransportScheme,
    /// Directions in the adapted frame at `x0`; empty means the whole frame.
    pub directions: Vec<Vec<f64>>,
    /// Gradient formula name.
    pub variant: String,
    /// Inner time of the differentiable-potential semigroup formula; defaults to `T`.
    pub t_inner: Option<f64>,
    /// Test function of semigroup estimators.
    pub test_function: Arc<dyn RadialField>,
    /// Time at which the Girsanov density is evaluated.
    pub girsanov_time: Option<f64>,
    pub workers: Option<usize>,
}

impl Problem {
    /// Start at distance `r0` along the first axis, `T = horizon`, 512 uniform steps, 10⁴ paths.
    pub fn new(geometry: ModelGeometry, r0: f64, horizon: f64) -> Result<Self> {
        let n = geometry.dim();
        let mut theta0 = vec![0.0; n];
        theta0[0] = 1.0;
        Ok(Problem {
            geometry,
            potential: Arc::new(Zero),
            drift: RadialDrift::zero(),
            r0,
            theta0,
            grid: TimeGrid::uniform(horizon, 512)?,
            n_paths: 10_000,
            seed: 0,
            mode: PathMode::RadialOnly,
            scheme: TransportScheme::default(),
            directions: Vec::new(),
            variant: "bc1".into(),
            t_inner: None,
            test_function: Arc::new(crate::geometry::Constant(1.0)),
            girsanov_time: None,
            workers: None,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    pub fn with_potential(mut self, v: Arc<dyn RadialField>) -> Self {
        self.potential = v;
        self
    }

    pub fn with_drift(mut self, z: RadialDrift) -> Self {
        self.drift = z;
        self
    }

    pub fn with_grid(mut self, steps: usize, refinement: Refinement) -> Result<Self> {
        self.grid = TimeGrid::new(self.horizon(), steps, refinement)?;
        Ok(self)
    }

    pub fn with_paths(mut self, n_paths: usize) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: PathMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_scheme(mut self, scheme: TransportScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_variant(mut self, variant: &str) -> Self {
        self.variant = variant.to_string();
        self
    }

    pub fn with_direction(mut self, v: Vec<f64>) -> Self {
        self.directions = vec![v];
        self
    }

    pub fn with_theta0(mut self, theta: Vec<f64>) -> Result<Self> {
        let norm = theta.iter().map(|x| x * x).sum::<f64>().sqrt();
        if theta.len() != self.geometry.dim() || !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Config(format!("theta0 must be a non-zero {}-vector", self.geometry.dim())));
        }
        self.theta0 = theta.into_iter().map(|x| x / norm).collect();
        Ok(self)
    }

    pub fn with_t_inner(mut self, t: f64) -> Self {
        self.t_inner = Some(t);
        self
    }

    pub fn with_test_function(mut self, f: Arc<dyn RadialField>) -> Self {
        self.test_function = f;
        self
    }

    pub fn with_girsanov_time(mut self, t: f64) -> Self {
        self.girsanov_time = Some(t);
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn with_r0(mut self, r0: f64) -> Self {
        self.r0 = r0;
        self
    }

    pub fn start(&self) -> Vec<f64> {
        self.theta0.iter().map(|t| t * self.r0).collect()
    }

    /// Requested directions, or the adapted frame at `x0` when none were given.
    pub fn resolved_directions(&self) -> Vec<Vec<f64>> {
        if !self.directions.is_empty() {
            return self.directions.clone();
        }
        let n = self.geometry.dim();
        (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect()
    }

    /// Labels of the estimate components for the resolved directions.
    pub fn direction_labels(&self) -> Vec<String> {
        if !self.directions.is_empty() {
            return vec!["direction".into()];
        }
        let mut labels = vec!["radial".to_string()];
        labels.extend((1..self.geometry.dim()).map(|i| format!("tangential_{i}")));
        labels
    }

    /// Basis of the adapted frame at `x0` in normal coordinates, column-major.
    pub fn frame_at_start(&self) -> Vec<f64> {
        adapted_basis(&self.theta0)
    }

    pub fn simulator(&self) -> PathSimulator {
        PathSimulator::new(self.geometry.clone(), self.drift.clone(), self.grid.clone()).with_scheme(self.scheme)
    }

    pub(crate) fn validate_common(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::Config(format!("n_paths must be at least 2, got {}", self.n_paths)));
        }
        if !(self.r0 >= 0.0 && self.r0.is_finite()) {
            return Err(Error::Config(format!("r0 must be a finite non-negative radius, got {}", self.r0)));
        }
        if self.r0 > self.geometry.r_max() {
            return Err(Error::Config(format!("r0 = {} exceeds the warp range {}", self.r0, self.geometry.r_max())));
        }
        if self.theta0.len() != self.geometry.dim() {
            return Err(Error::Config("theta0 dimension does not match the geometry".into()));
        }
        let n = self.geometry.dim();
        if let Some(d) = self.directions.iter().find(|d| d.len() != n) {
            return Err(Error::Config(format!("direction has {} components, expected {n}", d.len())));
        }
        Ok(())
    }

    /// Gradient formulas need a start away from the pole and no extra drift.
    pub(crate) fn validate_gradient(&self) -> Result<()> {
        self.validate_common()?;
        if self.r0 == 0.0 {
            return Err(Error::Precondition(
                "gradient estimators need r0 > 0: the initial direction is undefined at the pole".into(),
            ));
        }
        if !self.drift.is_zero() {
            return Err(Error::Precondition("gradient estimators are implemented for Z = 0 only".into()));
        }
        Ok(())
    }
}
