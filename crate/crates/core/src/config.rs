//! Experiment configuration: a JSON document describing one estimation run.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::estimators::{EstimatorRegistry, FormulaRegistry, Problem};
use crate::geometry::{
    Constant, CurvatureProfile, GaussianBump, ModelGeometry, Quadratic, RadialDrift, RadialField, TabulatedField,
    TabulatedWarp, Zero,
};
use crate::stochastic::{PathMode, Refinement, TransportScheme};

pub const DEFAULT_STEPS: usize = 512;
pub const DEFAULT_PATHS: usize = 10_000;
pub const DEFAULT_GEOMETRIC_RATIO: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Euclidean,
    Hyperbolic,
    Custom,
}

/// Curvature profile `κ(r)` of a custom warp and its tabulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarpSpec {
    pub curvature_at_pole: f64,
    pub curvature_at_infinity: f64,
    pub width: f64,
    #[serde(default = "default_warp_range")]
    pub r_max: f64,
    #[serde(default = "default_warp_step")]
    pub step: f64,
}

fn default_warp_range() -> f64 {
    40.0
}

fn default_warp_step() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub kind: GeometryKind,
    pub n: usize,
    /// Curvature radius of hyperbolic space.
    #[serde(default, alias = "R", skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warp: Option<WarpSpec>,
    /// Lower bound for `Ric − 2 Hess h`; scanned when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_eps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Zero,
    Constant,
    GaussianBump,
    Quadratic,
    #[serde(rename = "custom-radial", alias = "custom_radial")]
    CustomRadial,
}

/// A radial function, used for `h`, `V`, `Z` and test functions.
///
/// `sup`, `inf` and `grad_bound` may be declared; a declaration tighter than what the field
/// actually attains is a violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub kind: FieldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_bound: Option<f64>,
}

impl FieldSpec {
    pub fn zero() -> Self {
        FieldSpec {
            kind: FieldKind::Zero,
            value: None,
            offset: None,
            amplitude: None,
            width: None,
            coefficient: None,
            r: None,
            v: None,
            sup: None,
            inf: None,
            grad_bound: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        FieldSpec { kind: FieldKind::Constant, value: Some(c), ..Self::zero() }
    }

    pub fn gaussian_bump(offset: f64, amplitude: f64, width: f64) -> Self {
        FieldSpec {
            kind: FieldKind::GaussianBump,
            offset: Some(offset),
            amplitude: Some(amplitude),
            width: Some(width),
            ..Self::zero()
        }
    }

    /// Builds the field, appending one message per problem to `out`.
    fn build(&self, path: &str, out: &mut Vec<String>) -> Option<Arc<dyn RadialField>> {
        let allowed: &[&str] = match self.kind {
            FieldKind::Zero => &[],
            FieldKind::Constant => &["value"],
            FieldKind::GaussianBump => &["offset", "amplitude", "width"],
            FieldKind::Quadratic => &["offset", "coefficient"],
            FieldKind::CustomRadial => &["r", "v"],
        };
        let present = [
            ("value", self.value.is_some()),
            ("offset", self.offset.is_some()),
            ("amplitude", self.amplitude.is_some()),
            ("width", self.width.is_some()),
            ("coefficient", self.coefficient.is_some()),
            ("r", self.r.is_some()),
            ("v", self.v.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                out.push(format!("{path}.{name} is not a parameter of kind {:?}", self.kind));
            }
        }
        let before = out.len();
        let mut need = |name: &str, value: Option<f64>| -> f64 {
            match value {
                Some(x) if x.is_finite() => x,
                Some(x) => {
                    out.push(format!("{path}.{name} must be finite, got {x}"));
                    f64::NAN
                }
                None => {
                    out.push(format!("{path}.{name} is required for kind {:?}", self.kind));
                    f64::NAN
                }
            }
        };
        let field: Option<Arc<dyn RadialField>> = match self.kind {
            FieldKind::Zero => Some(Arc::new(Zero)),
            FieldKind::Constant => {
                let c = need("value", self.value);
                Some(Arc::new(Constant(c)))
            }
            FieldKind::GaussianBump => {
                let offset = self.offset.unwrap_or(0.0);
                let amplitude = need("amplitude", self.amplitude);
                let width = need("width", self.width);
                if out.len() > before {
                    None
                } else {
                    match GaussianBump::new(offset, amplitude, width) {
                        Ok(b) => Some(Arc::new(b)),
                        Err(e) => {
                            out.push(format!("{path}: {e}"));
                            None
                        }
                    }
                }
            }
            FieldKind::Quadratic => {
                let coefficient = need("coefficient", self.coefficient);
                Some(Arc::new(Quadratic { offset: self.offset.unwrap_or(0.0), coefficient }))
            }
            FieldKind::CustomRadial => match (&self.r, &self.v) {
                (Some(r), Some(v)) => match TabulatedField::new(r.clone(), v.clone()) {
                    Ok(t) => Some(Arc::new(t)),
                    Err(e) => {
                        out.push(format!("{path}: {e}"));
                        None
                    }
                },
                _ => {
                    out.push(format!("{path}.r and {path}.v are required for kind custom-radial"));
                    None
                }
            },
        };
        if out.len() > before {
            return None;
        }
        let field = field?;
        let slack = 1e-9;
        if let Some(s) = self.sup {
            if s < field.sup() - slack * (1.0 + s.abs()) {
                out.push(format!("{path}.sup = {s} is below the attained supremum {}", field.sup()));
            }
        }
        if let Some(i) = self.inf {
            if i > field.inf() + slack * (1.0 + i.abs()) {
                out.push(format!("{path}.inf = {i} is above the attained infimum {}", field.inf()));
            }
        }
        if let Some(gb) = self.grad_bound {
            if gb < field.grad_bound() - slack * (1.0 + gb.abs()) {
                out.push(format!("{path}.grad_bound = {gb} is below the attained bound {}", field.grad_bound()));
            }
        }
        Some(field)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoints {
    pub r0: f64,
    /// Unit direction of `x0` in normal coordinates; the first axis when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub refinement: Option<Refinement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    #[serde(default = "default_estimator")]
    pub name: String,
    #[serde(default = "default_variant")]
    pub variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_inner: Option<f64>,
    /// Tangent direction at `x0` in adapted components (radial first).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(default)]
    pub mode: Option<PathMode>,
    #[serde(default)]
    pub scheme: Option<TransportScheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub girsanov_time: Option<f64>,
}

fn default_estimator() -> String {
    "kernel".into()
}

fn default_variant() -> String {
    "bc1".into()
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        EstimatorSpec {
            name: default_estimator(),
            variant: default_variant(),
            t_inner: None,
            direction: None,
            mode: None,
            scheme: None,
            girsanov_time: None,
        }
    }
}

impl EstimatorSpec {
    /// Estimators built on full-polar paths with transported frames.
    pub fn is_gradient(&self) -> bool {
        matches!(self.name.as_str(), "kernel-gradient" | "log-gradient" | "semigroup-gradient")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometrySpec,
    /// The weight `h` of `Δ^h`.
    #[serde(default = "FieldSpec::zero")]
    pub weight: FieldSpec,
    #[serde(default = "FieldSpec::zero")]
    pub potential: FieldSpec,
    /// Radial component of the extra drift `Z`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<FieldSpec>,
    /// `f` for the semigroup estimators; `f ≡ 1` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_function: Option<FieldSpec>,
    pub endpoints: Endpoints,
    #[serde(alias = "T")]
    pub horizon: f64,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub estimator: EstimatorSpec,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_paths() -> usize {
    DEFAULT_PATHS
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Syntax { line: usize, column: usize, message: String },
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax { line, column, message } => write!(f, "line {line}, column {column}: {message}"),
            ConfigError::Invalid(v) => write!(f, "{}", v.join("; ")),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<ConfigError> for Error {
    fn from(e: ConfigError) -> Self {
        Error::Config(e.to_string())
    }
}

/// Parses and validates a configuration, filling defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_as(text, |_| None)
}

/// Like [`parse_config`], but lets the caller replace the estimator name before defaults
/// that depend on it are resolved. `choose` receives the configured name.
pub fn parse_config_as(
    text: &str,
    choose: impl FnOnce(&str) -> Option<String>,
) -> Result<ExperimentConfig, ConfigError> {
    let mut config: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if let Some(name) = choose(&config.estimator.name) {
        config.estimator.name = name;
    }
    config.fill_defaults();
    let violations = config.violations();
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}

impl ExperimentConfig {
    /// A minimal kernel configuration.
    pub fn new(geometry: GeometrySpec, r0: f64, horizon: f64) -> Self {
        let mut c = ExperimentConfig {
            geometry,
            weight: FieldSpec::zero(),
            potential: FieldSpec::zero(),
            drift: None,
            test_function: None,
            endpoints: Endpoints { r0, theta0: None },
            horizon,
            grid: GridSpec::default(),
            estimator: EstimatorSpec::default(),
            n_paths: DEFAULT_PATHS,
            seed: 0,
            output: None,
        };
        c.fill_defaults();
        c
    }

    /// Resolves path mode, scheme and grid defaults. Idempotent.
    pub fn fill_defaults(&mut self) {
        let mode = *self.estimator.mode.get_or_insert(if self.estimator.is_gradient() {
            PathMode::FullPolar
        } else {
            PathMode::RadialOnly
        });
        self.estimator.scheme.get_or_insert(TransportScheme::default());
        self.grid.steps.get_or_insert(DEFAULT_STEPS);
        self.grid.refinement.get_or_insert(match mode {
            PathMode::FullPolar => Refinement::Geometric { ratio: DEFAULT_GEOMETRIC_RATIO },
            PathMode::RadialOnly => Refinement::None,
        });
    }

    /// Every semantic problem with the configuration.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let geometry = self.geometry_checked(&mut out);
        let n = self.geometry.n;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            out.push(format!("horizon must be positive, got {}", self.horizon));
        }
        let r0 = self.endpoints.r0;
        if !(r0 >= 0.0 && r0.is_finite()) {
            out.push(format!("endpoints.r0 must be a finite non-negative radius, got {r0}"));
        } else if let Some(g) = &geometry {
            if r0 > g.r_max() {
                out.push(format!("endpoints.r0 = {r0} exceeds the warp range {}", g.r_max()));
            }
        }
        if let Some(theta) = &self.endpoints.theta0 {
            let norm = theta.iter().map(|x| x * x).sum::<f64>().sqrt();
            if theta.len() != n {
                out.push(format!("endpoints.theta0 has {} components, expected {n}", theta.len()));
            } else if !(norm > 0.0 && norm.is_finite()) {
                out.push("endpoints.theta0 must be a non-zero finite vector".into());
            }
        }
        match self.grid.steps {
            Some(s) if s < 2 => out.push(format!("grid.steps ≥ 2 required, got {s}")),
            _ => {}
        }
        if let Some(Refinement::Geometric { ratio }) = self.grid.refinement {
            if !(ratio > 0.0 && ratio.is_finite()) {
                out.push(format!("grid.refinement.ratio must be positive, got {ratio}"));
            }
        }
        if self.n_paths < 2 {
            out.push(format!("n_paths ≥ 2 required, got {}", self.n_paths));
        }
        let estimators = EstimatorRegistry::default();
        if estimators.get(&self.estimator.name).is_err() {
            out.push(format!("estimator.name '{}' is not one of {:?}", self.estimator.name, estimators.names()));
        }
        let formulas = FormulaRegistry::default();
        if formulas.get(&self.estimator.variant).is_err() {
            out.push(format!("estimator.variant '{}' is not one of {:?}", self.estimator.variant, formulas.names()));
        }
        if let Some(d) = &self.estimator.direction {
            if d.len() != n {
                out.push(format!("estimator.direction has {} components, expected {n}", d.len()));
            }
        }
        if let Some(t) = self.estimator.t_inner {
            if !(t > 0.0 && t <= self.horizon) {
                out.push(format!("estimator.t_inner must lie in (0, horizon], got {t}"));
            }
        }
        if let Some(t) = self.estimator.girsanov_time {
            if !(t > 0.0 && t < self.horizon) {
                out.push(format!("estimator.girsanov_time must lie in (0, horizon), got {t}"));
            }
        }
        if self.estimator.is_gradient() && self.estimator.mode == Some(PathMode::RadialOnly) {
            out.push("gradient estimators need estimator.mode = full_polar".into());
        }
        self.weight.build("weight", &mut out);
        self.potential.build("potential", &mut out);
        if let Some(z) = &self.drift {
            if let Some(field) = z.build("drift", &mut out) {
                if let Err(e) = RadialDrift::from_component(field) {
                    out.push(format!("drift: {e}"));
                }
            }
        }
        if let Some(f) = &self.test_function {
            f.build("test_function", &mut out);
        }
        out
    }

    fn geometry_checked(&self, out: &mut Vec<String>) -> Option<ModelGeometry> {
        let spec = &self.geometry;
        let before = out.len();
        if spec.n < 2 {
            out.push(format!("geometry.n ≥ 2 required, got {}", spec.n));
        }
        match spec.kind {
            GeometryKind::Hyperbolic => match spec.radius {
                Some(r) if r > 0.0 && r.is_finite() => {}
                Some(r) => out.push(format!("geometry.R must be positive, got {r}")),
                None => out.push("geometry.R is required for hyperbolic space".into()),
            },
            _ if spec.radius.is_some() => out.push("geometry.R applies to hyperbolic space only".into()),
            _ => {}
        }
        match (spec.kind, &spec.warp) {
            (GeometryKind::Custom, None) => out.push("geometry.warp is required for kind custom".into()),
            (GeometryKind::Custom, Some(_)) => {}
            (_, Some(_)) => out.push("geometry.warp applies to kind custom only".into()),
            _ => {}
        }
        if let Some(k) = spec.rho_lower {
            if !k.is_finite() {
                out.push(format!("geometry.rho_lower must be finite, got {k}"));
            }
        }
        if out.len() > before {
            return None;
        }
        match self.build_geometry() {
            Ok(g) => Some(g),
            Err(e) => {
                out.push(format!("geometry: {e}"));
                None
            }
        }
    }

    fn build_geometry(&self) -> crate::Result<ModelGeometry> {
        let spec = &self.geometry;
        let mut g = match spec.kind {
            GeometryKind::Euclidean => ModelGeometry::euclidean(spec.n)?,
            GeometryKind::Hyperbolic => ModelGeometry::hyperbolic(spec.n, spec.radius.unwrap_or(f64::NAN))?,
            GeometryKind::Custom => {
                let w = spec.warp.as_ref().ok_or_else(|| Error::Config("custom geometry needs a warp".into()))?;
                let profile = CurvatureProfile {
                    at_pole: w.curvature_at_pole,
                    at_infinity: w.curvature_at_infinity,
                    width: w.width,
                };
                ModelGeometry::new(spec.n, Arc::new(TabulatedWarp::new(profile, w.r_max, w.step)?))?
            }
        };
        if let Some(eps) = spec.r_eps {
            g = g.with_r_eps(eps)?;
        }
        let mut ignored = Vec::new();
        if let Some(h) = self.weight.build("weight", &mut ignored) {
            g = g.with_weight(h);
        }
        if let Some(k) = spec.rho_lower {
            g = g.with_rho_lower(k);
        }
        Ok(g)
    }

    /// The estimation problem described by a valid configuration.
    pub fn to_problem(&self) -> crate::Result<Problem> {
        let violations = self.violations();
        if !violations.is_empty() {
            return Err(ConfigError::Invalid(violations).into());
        }
        let mut ignored = Vec::new();
        let geometry = self.build_geometry()?;
        let mut problem = Problem::new(geometry, self.endpoints.r0, self.horizon)?
            .with_grid(self.grid.steps.unwrap_or(DEFAULT_STEPS), self.grid.refinement.unwrap_or(Refinement::None))?
            .with_paths(self.n_paths)
            .with_seed(self.seed)
            .with_mode(self.estimator.mode.unwrap_or(PathMode::RadialOnly))
            .with_scheme(self.estimator.scheme.unwrap_or_default())
            .with_variant(&self.estimator.variant);
        if let Some(v) = self.potential.build("potential", &mut ignored) {
            problem = problem.with_potential(v);
        }
        if let Some(z) = self.drift.as_ref().and_then(|z| z.build("drift", &mut ignored)) {
            problem = problem.with_drift(RadialDrift::from_component(z)?);
        }
        if let Some(f) = self.test_function.as_ref().and_then(|f| f.build("test_function", &mut ignored)) {
            problem = problem.with_test_function(f);
        }
        if let Some(theta) = &self.endpoints.theta0 {
            problem = problem.with_theta0(theta.clone())?;
        }
        if let Some(d) = &self.estimator.direction {
            problem = problem.with_direction(d.clone());
        }
        if let Some(t) = self.estimator.t_inner {
            problem = problem.with_t_inner(t);
        }
        if let Some(t) = self.estimator.girsanov_time {
            problem = problem.with_girsanov_time(t);
        }
        Ok(problem)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "geometry": {"kind": "euclidean", "n": 3},
        "endpoints": {"r0": 1.0},
        "horizon": 1.0,
        "estimator": {"name": "kernel-gradient"}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid.steps, Some(512));
        assert_eq!(c.grid.refinement, Some(Refinement::Geometric { ratio: 0.9 }));
        assert_eq!(c.estimator.mode, Some(PathMode::FullPolar));
        assert_eq!(c.n_paths, DEFAULT_PATHS);
        let p = c.to_problem().unwrap();
        assert_eq!(p.grid.len(), 512);
    }

    #[test]
    fn radial_kernel_defaults_to_uniform_grid() {
        let text = r#"{"geometry": {"kind": "hyperbolic", "n": 3, "R": 1.0}, "endpoints": {"r0": 1.0}, "T": 1.0}"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.grid.refinement, Some(Refinement::None));
        assert_eq!(c.geometry.radius, Some(1.0));
    }

    #[test]
    fn single_step_grid_rejected() {
        let text = MINIMAL.replace("\"horizon\": 1.0", "\"horizon\": 1.0, \"grid\": {\"steps\": 1}");
        let ConfigError::Invalid(v) = parse_config(&text).unwrap_err() else { panic!() };
        assert!(v.iter().any(|m| m.contains("grid.steps ≥ 2")), "{v:?}");
    }

    #[test]
    fn negative_radius_rejected() {
        let text = r#"{"geometry": {"kind": "hyperbolic", "n": 3, "R": -1.0}, "endpoints": {"r0": 1.0}, "T": 1.0}"#;
        let ConfigError::Invalid(v) = parse_config(text).unwrap_err() else { panic!() };
        assert!(v.iter().any(|m| m.contains("geometry.R")), "{v:?}");
    }

    #[test]
    fn violations_are_listed_exhaustively() {
        let text = r#"{
            "geometry": {"kind": "euclidean", "n": 1},
            "endpoints": {"r0": -1.0},
            "T": 0.0,
            "grid": {"steps": 0},
            "n_paths": 1,
            "estimator": {"name": "nope", "variant": "bogus"},
            "potential": {"kind": "gaussian_bump", "width": 1.0}
        }"#;
        let ConfigError::Invalid(v) = parse_config(text).unwrap_err() else { panic!() };
        assert!(v.len() >= 8, "{v:?}");
    }

    #[test]
    fn unknown_keys_and_syntax_errors() {
        let text = MINIMAL.replace("\"horizon\"", "\"colour\": 1, \"horizon\"");
        assert!(matches!(parse_config(&text), Err(ConfigError::Syntax { .. })));
        let err = parse_config("{\n  \"geometry\": ,\n}").unwrap_err();
        let ConfigError::Syntax { line, column, .. } = err else { panic!() };
        assert_eq!((line, column), (2, 15));
    }

    #[test]
    fn declared_bounds_are_checked() {
        let text = r#"{"geometry": {"kind": "euclidean", "n": 2}, "endpoints": {"r0": 1.0}, "T": 1.0,
            "potential": {"kind": "gaussian_bump", "amplitude": 0.5, "width": 1.0, "sup": 0.4}}"#;
        let ConfigError::Invalid(v) = parse_config(text).unwrap_err() else { panic!() };
        assert!(v[0].contains("potential.sup"));
    }

    #[test]
    fn custom_geometry_and_fields() {
        let text = r#"{
            "geometry": {"kind": "custom", "n": 3, "warp": {"curvature_at_pole": -1.0, "curvature_at_infinity": -0.5, "width": 2.0, "r_max": 20.0, "step": 0.01}},
            "potential": {"kind": "custom-radial", "r": [0.0, 1.0, 2.0], "v": [0.0, 0.5, 0.6]},
            "endpoints": {"r0": 0.5, "theta0": [0.0, 2.0, 0.0]},
            "T": 0.5
        }"#;
        let c = parse_config(text).unwrap();
        let p = c.to_problem().unwrap();
        assert_eq!(p.theta0, vec![0.0, 1.0, 0.0]);
        assert_eq!(p.geometry.warp().name(), "custom");
    }

    #[test]
    fn estimator_override_resolves_gradient_defaults() {
        let text = r#"{"geometry": {"kind": "euclidean", "n": 2}, "endpoints": {"r0": 1.0}, "T": 1.0}"#;
        let c = parse_config_as(text, |_| Some("log-gradient".into())).unwrap();
        assert_eq!(c.estimator.mode, Some(PathMode::FullPolar));
    }

    #[test]
    fn round_trip_preserves_resolved_config() {
        let c = parse_config(MINIMAL).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(parse_config(&text).unwrap(), c);
    }
}
