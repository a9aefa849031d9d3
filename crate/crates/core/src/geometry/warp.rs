//! Warping functions `f` of rotationally symmetric metrics `dr² + f(r)² dθ²`.

use std::fmt;

use crate::error::{Error, Result};

/// `f`, `f'` and `f''` at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpValues {
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
}

/// The warping function of a model space with a pole at `r = 0`.
///
/// Implementations must satisfy `f(0) = 0`, `f'(0) = 1`, `f > 0` on `(0, r_max)`,
/// and supply their derivatives analytically.
pub trait Warp: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn f(&self, r: f64) -> f64;
    fn f1(&self, r: f64) -> f64;
    fn f2(&self, r: f64) -> f64;

    fn values(&self, r: f64) -> WarpValues {
        WarpValues { f: self.f(r), f1: self.f1(r), f2: self.f2(r) }
    }

    /// Coefficient `a` of the expansion `f(r) = r + a r³ + O(r⁵)`, i.e. `f'''(0) / 6`.
    fn pole_cubic(&self) -> f64;

    /// Largest radius on which the warp is defined.
    fn r_max(&self) -> f64 {
        f64::INFINITY
    }

    /// Closed-form `Φ = ½ J^{½} Δ J^{-½}` for warps that have one.
    fn phi_closed_form(&self, _dim: usize, _r: f64) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Euclidean;

impl Warp for Euclidean {
    fn name(&self) -> &str {
        "euclidean"
    }
    fn f(&self, r: f64) -> f64 {
        r
    }
    fn f1(&self, _r: f64) -> f64 {
        1.0
    }
    fn f2(&self, _r: f64) -> f64 {
        0.0
    }
    fn pole_cubic(&self) -> f64 {
        0.0
    }
    fn phi_closed_form(&self, _dim: usize, _r: f64) -> Option<f64> {
        Some(0.0)
    }
}

/// Constant sectional curvature `-1/R²`: `f(r) = R sinh(r/R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperbolic {
    radius: f64,
}

impl Hyperbolic {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Config(format!("hyperbolic radius must be positive, got {radius}")));
        }
        Ok(Hyperbolic { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `1/r² − 1/(R² sinh²(r/R))`, finite at the pole.
    fn inverse_square_gap(&self, r: f64) -> f64 {
        let rr = self.radius * self.radius;
        let x = r / self.radius;
        if x < 1e-3 {
            let x2 = x * x;
            (1.0 / 3.0 - x2 / 15.0 + 2.0 * x2 * x2 / 189.0) / rr
        } else {
            let s = x.sinh();
            1.0 / (r * r) - 1.0 / (rr * s * s)
        }
    }
}

impl Warp for Hyperbolic {
    fn name(&self) -> &str {
        "hyperbolic"
    }
    fn f(&self, r: f64) -> f64 {
        self.radius * (r / self.radius).sinh()
    }
    fn f1(&self, r: f64) -> f64 {
        (r / self.radius).cosh()
    }
    fn f2(&self, r: f64) -> f64 {
        (r / self.radius).sinh() / self.radius
    }
    fn values(&self, r: f64) -> WarpValues {
        let x = r / self.radius;
        let e = x.exp();
        let ei = 1.0 / e;
        let (s, c) = if x < 1e-2 { (x.sinh(), 0.5 * (e + ei)) } else { (0.5 * (e - ei), 0.5 * (e + ei)) };
        WarpValues { f: self.radius * s, f1: c, f2: s / self.radius }
    }
    fn pole_cubic(&self) -> f64 {
        1.0 / (6.0 * self.radius * self.radius)
    }
    fn phi_closed_form(&self, dim: usize, r: f64) -> Option<f64> {
        let m = (dim - 1) as f64;
        let curvature_term = -(m * m) / (8.0 * self.radius * self.radius);
        let coupling = m * (dim as f64 - 3.0);
        Some(curvature_term + coupling / 8.0 * self.inverse_square_gap(r))
    }
}

/// Constant sectional curvature `+1/R²`: `f(r) = R sin(r/R)`, defined for `r < πR`.
///
/// Not a manifold with a pole globally; used for curvature checks on `r < πR`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spherical {
    radius: f64,
}

impl Spherical {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Config(format!("spherical radius must be positive, got {radius}")));
        }
        Ok(Spherical { radius })
    }
}

impl Warp for Spherical {
    fn name(&self) -> &str {
        "spherical"
    }
    fn f(&self, r: f64) -> f64 {
        self.radius * (r / self.radius).sin()
    }
    fn f1(&self, r: f64) -> f64 {
        (r / self.radius).cos()
    }
    fn f2(&self, r: f64) -> f64 {
        -(r / self.radius).sin() / self.radius
    }
    fn pole_cubic(&self) -> f64 {
        -1.0 / (6.0 * self.radius * self.radius)
    }
    fn r_max(&self) -> f64 {
        std::f64::consts::PI * self.radius
    }
}

/// Radial curvature profile `κ(r) = κ∞ + (κ0 − κ∞) exp(−r²/w²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureProfile {
    pub at_pole: f64,
    pub at_infinity: f64,
    pub width: f64,
}

impl CurvatureProfile {
    pub fn curvature(&self, r: f64) -> f64 {
        let w = r / self.width;
        self.at_infinity + (self.at_pole - self.at_infinity) * (-w * w).exp()
    }
}

/// Warp obtained by integrating the Jacobi equation `f'' = −κ(r) f` on a table.
#[derive(Debug, Clone)]
pub struct Tabulated {
    profile: CurvatureProfile,
    step: f64,
    f: Vec<f64>,
    f1: Vec<f64>,
}

impl Tabulated {
    pub fn new(profile: CurvatureProfile, r_max: f64, step: f64) -> Result<Self> {
        if !(profile.width > 0.0 && r_max > 0.0 && step > 0.0 && step < r_max) {
            return Err(Error::Config(format!(
                "tabulated warp needs width > 0 and 0 < step < r_max (width {}, step {step}, r_max {r_max})",
                profile.width
            )));
        }
        let nodes = (r_max / step).ceil() as usize;
        let step = r_max / nodes as f64;
        let mut f = Vec::with_capacity(nodes + 1);
        let mut f1 = Vec::with_capacity(nodes + 1);
        let (mut y, mut dy) = (0.0_f64, 1.0_f64);
        f.push(y);
        f1.push(dy);
        let rhs = |r: f64, y: f64| -profile.curvature(r) * y;
        for k in 0..nodes {
            let r = k as f64 * step;
            let k1 = (dy, rhs(r, y));
            let k2 = (dy + 0.5 * step * k1.1, rhs(r + 0.5 * step, y + 0.5 * step * k1.0));
            let k3 = (dy + 0.5 * step * k2.1, rhs(r + 0.5 * step, y + 0.5 * step * k2.0));
            let k4 = (dy + step * k3.1, rhs(r + step, y + step * k3.0));
            y += step / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            dy += step / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            if !(y > 0.0 && y.is_finite()) {
                return Err(Error::Config(format!(
                    "curvature profile does not define a pole: f vanishes or overflows near r = {:.4}",
                    r + step
                )));
            }
            f.push(y);
            f1.push(dy);
        }
        Ok(Tabulated { profile, step, f, f1 })
    }

    fn locate(&self, r: f64) -> (usize, f64) {
        let last = self.f.len() - 2;
        let k = ((r / self.step).floor() as usize).min(last);
        (k, r / self.step - k as f64)
    }

    /// Cubic Hermite interpolation of `(y, y')` tables.
    fn hermite(&self, y: &[f64], dy: impl Fn(usize) -> f64, r: f64) -> (f64, f64) {
        let (k, s) = self.locate(r);
        let h = self.step;
        let (y0, y1, d0, d1) = (y[k], y[k + 1], dy(k) * h, dy(k + 1) * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let value =
            (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1;
        let slope = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * d0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * d1)
            / h;
        (value, slope)
    }
}

impl Warp for Tabulated {
    fn name(&self) -> &str {
        "custom"
    }
    fn f(&self, r: f64) -> f64 {
        self.hermite(&self.f, |k| self.f1[k], r).0
    }
    fn f1(&self, r: f64) -> f64 {
        let grid = self.step;
        self.hermite(&self.f1, |k| -self.profile.curvature(k as f64 * grid) * self.f[k], r).0
    }
    fn f2(&self, r: f64) -> f64 {
        -self.profile.curvature(r) * self.f(r)
    }
    fn pole_cubic(&self) -> f64 {
        -self.profile.at_pole / 6.0
    }
    fn r_max(&self) -> f64 {
        self.step * (self.f.len() - 1) as f64
    }
}
