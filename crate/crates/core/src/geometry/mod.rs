//! Rotationally symmetric manifolds `dr² + f(r)² dθ²` with a pole at `r = 0`.

mod drift;
mod field;
mod warp;

use std::fmt;
use std::sync::Arc;

pub use drift::RadialDrift;
pub use field::{Constant, GaussianBump, Quadratic, RadialField, Tabulated as TabulatedField, Zero};
pub use warp::{CurvatureProfile, Euclidean, Hyperbolic, Spherical, Tabulated as TabulatedWarp, Warp, WarpValues};

use crate::error::{domain, Error, Result};

/// Radius up to which curvature-dependent suprema are scanned when not given.
pub const SCAN_RADIUS: f64 = 300.0;

/// A diagonal tensor in the adapted frame `(∂_r, e_2, …, e_n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptedDiagonal {
    pub dim: usize,
    pub radial: f64,
    pub tangential: f64,
}

impl AdaptedDiagonal {
    /// Dense row-major `n × n` matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        m[0] = self.radial;
        for i in 1..n {
            m[i * n + i] = self.tangential;
        }
        m
    }

    pub fn min_entry(&self) -> f64 {
        if self.dim > 1 {
            self.radial.min(self.tangential)
        } else {
            self.radial
        }
    }
}

/// Everything the path simulators need at one radius, pole-safe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSample {
    pub r: f64,
    pub warp: WarpValues,
    /// `(log J)'(r)`
    pub grad_log_j: f64,
    /// `Φ^h(r)`
    pub phi_h: f64,
    /// `h'(r)`
    pub h1: f64,
    /// Eigenvalues of `−½ Ric + Hess h` in the adapted frame.
    pub damping: AdaptedDiagonal,
}

#[derive(Clone)]
pub struct ModelGeometry {
    dim: usize,
    warp: Arc<dyn Warp>,
    weight: Arc<dyn RadialField>,
    rho_h_lower: Option<f64>,
    r_eps: f64,
}

impl fmt::Debug for ModelGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelGeometry")
            .field("dim", &self.dim)
            .field("warp", &self.warp)
            .field("weight", &self.weight)
            .field("rho_h_lower", &self.rho_h_lower)
            .field("r_eps", &self.r_eps)
            .finish()
    }
}

impl ModelGeometry {
    pub fn new(dim: usize, warp: Arc<dyn Warp>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Config(format!("dimension must be at least 2, got {dim}")));
        }
        let g = ModelGeometry { dim, warp, weight: Arc::new(Zero), rho_h_lower: None, r_eps: 1e-4 };
        g.check_pole_regularity()?;
        Ok(g)
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(dim, Arc::new(Euclidean))
    }

    pub fn hyperbolic(dim: usize, radius: f64) -> Result<Self> {
        Self::new(dim, Arc::new(Hyperbolic::new(radius)?))
    }

    pub fn with_weight(mut self, h: Arc<dyn RadialField>) -> Self {
        self.weight = h;
        self
    }

    /// Overrides the scanned lower bound `K` of `Ric − 2 Hess h`.
    pub fn with_rho_lower(mut self, k: f64) -> Self {
        self.rho_h_lower = Some(k);
        self
    }

    pub fn with_r_eps(mut self, r_eps: f64) -> Result<Self> {
        if !(r_eps > 0.0 && r_eps < 0.1) {
            return Err(Error::Config(format!("r_eps must lie in (0, 0.1), got {r_eps}")));
        }
        self.r_eps = r_eps;
        self.check_pole_regularity()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn warp(&self) -> &dyn Warp {
        self.warp.as_ref()
    }

    pub fn weight(&self) -> &dyn RadialField {
        self.weight.as_ref()
    }

    pub fn r_eps(&self) -> f64 {
        self.r_eps
    }

    pub fn r_max(&self) -> f64 {
        self.warp.r_max()
    }

    fn dims(&self) -> f64 {
        (self.dim - 1) as f64
    }

    /// Verifies `f(r)/r → 1` and `f'(r) → 1` near the pole.
    pub fn check_pole_regularity(&self) -> Result<()> {
        let e = self.r_eps;
        let v = self.warp.values(e);
        // f''(r_eps)/r_eps approximates f'''(0), which sets the size of both deviations.
        let tol = 10.0 * e * v.f2.abs() / 2.0 + 1e-10;
        let ratio = (v.f / e - 1.0).abs();
        let slope = (v.f1 - 1.0).abs();
        if ratio > tol || slope > 10.0 * e * v.f2.abs() + tol {
            return Err(Error::Config(format!(
                "warp '{}' is not regular at the pole: |f(r)/r - 1| = {ratio:.3e}, |f'(r) - 1| = {slope:.3e} at r = {e:e}",
                self.warp.name()
            )));
        }
        Ok(())
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        if !(r >= 0.0) {
            return Err(domain(format!("radius must be non-negative, got {r}")));
        }
        if r > self.r_max() {
            return Err(domain(format!("radius {r} exceeds the warp range {}", self.r_max())));
        }
        Ok(())
    }

    fn check_positive_radius(&self, r: f64) -> Result<()> {
        self.check_radius(r)?;
        if r == 0.0 {
            return Err(domain("quantity is singular at the pole (r = 0)"));
        }
        Ok(())
    }

    /// `q = f'/f − 1/r` and `q'`, by series below `r_eps`.
    fn q_pair(&self, r: f64, v: &WarpValues) -> (f64, f64) {
        let a = self.warp.pole_cubic();
        if r < self.r_eps {
            (2.0 * a * r, 2.0 * a)
        } else {
            let q = v.f1 / v.f - 1.0 / r;
            (q, v.f2 / v.f - q * (q + 2.0 / r))
        }
    }

    pub fn log_jacobian(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(self.log_jacobian_unchecked(r))
    }

    pub(crate) fn log_jacobian_unchecked(&self, r: f64) -> f64 {
        if r < self.r_eps {
            self.dims() * self.warp.pole_cubic() * r * r
        } else {
            self.dims() * (self.warp.f(r) / r).ln()
        }
    }

    /// Radial component of `∇ log J`.
    pub fn grad_log_jacobian(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        let v = self.warp.values(r);
        Ok(self.dims() * self.q_pair(r, &v).0)
    }

    /// `Δr = (n − 1) f'/f`.
    pub fn laplacian_r(&self, r: f64) -> Result<f64> {
        self.check_positive_radius(r)?;
        let v = self.warp.values(r);
        Ok(self.dims() * v.f1 / v.f)
    }

    /// `Φ = ½ J^{½} Δ J^{-½}`.
    pub fn phi(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(self.phi_unchecked(r, &self.warp.values(r)))
    }

    fn phi_unchecked(&self, r: f64, v: &WarpValues) -> f64 {
        match self.warp.phi_closed_form(self.dim, r) {
            Some(phi) => phi,
            None => self.phi_from_warp_values(r, v),
        }
    }

    /// `Φ` assembled from `f, f', f''` alone, ignoring any closed form the warp provides.
    pub fn phi_from_warp(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(self.phi_from_warp_values(r, &self.warp.values(r)))
    }

    fn phi_from_warp_values(&self, r: f64, v: &WarpValues) -> f64 {
        let m = self.dims();
        if r < self.r_eps {
            return -(self.dim as f64) * m * self.warp.pole_cubic() / 2.0;
        }
        let (q, dq) = self.q_pair(r, v);
        -m / 8.0 * (m * q * q + 2.0 * m * q / r + 2.0 * dq)
    }

    /// `Δh` for the radial weight, with `Δh(0) = n h''(0)`.
    fn laplacian_weight(&self, r: f64, v: &WarpValues) -> f64 {
        let h = self.weight.as_ref();
        if r < self.r_eps {
            h.d2(r) + self.dims() * h.d2(r)
        } else {
            h.d2(r) + self.dims() * v.f1 / v.f * h.d1(r)
        }
    }

    /// `Φ^h = Φ − ½Δh − ½|∇h|²`.
    pub fn phi_h(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        let v = self.warp.values(r);
        Ok(self.phi_h_unchecked(r, &v))
    }

    fn phi_h_unchecked(&self, r: f64, v: &WarpValues) -> f64 {
        let phi = self.phi_unchecked(r, v);
        if self.weight.is_zero() {
            return phi;
        }
        let h1 = self.weight.d1(r);
        phi - 0.5 * self.laplacian_weight(r, v) - 0.5 * h1 * h1
    }

    /// `k_t = (2πt)^{-n/2} e^{-r²/2t} J^{-½}(r)`.
    pub fn gauss_kernel_k(&self, r: f64, t: f64) -> Result<f64> {
        Ok(self.log_gauss_kernel_k(r, t)?.exp())
    }

    pub fn log_gauss_kernel_k(&self, r: f64, t: f64) -> Result<f64> {
        self.check_radius(r)?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(domain(format!("time must be positive, got {t}")));
        }
        Ok(self.log_gauss_kernel_unchecked(r, t))
    }

    pub(crate) fn log_gauss_kernel_unchecked(&self, r: f64, t: f64) -> f64 {
        -0.5 * self.dim as f64 * (2.0 * std::f64::consts::PI * t).ln()
            - r * r / (2.0 * t)
            - 0.5 * self.log_jacobian_unchecked(r)
    }

    pub fn ricci_in_adapted_frame(&self, r: f64) -> Result<AdaptedDiagonal> {
        self.check_positive_radius(r)?;
        Ok(self.ricci_unchecked(r, &self.warp.values(r)))
    }

    fn ricci_unchecked(&self, r: f64, v: &WarpValues) -> AdaptedDiagonal {
        let m = self.dims();
        if r < self.r_eps {
            let k = -6.0 * self.warp.pole_cubic() * m;
            return AdaptedDiagonal { dim: self.dim, radial: k, tangential: k };
        }
        let radial = -m * v.f2 / v.f;
        let tangential = -v.f2 / v.f + (m - 1.0) * (1.0 - v.f1 * v.f1) / (v.f * v.f);
        AdaptedDiagonal { dim: self.dim, radial, tangential }
    }

    pub fn hess_h_in_adapted_frame(&self, r: f64) -> Result<AdaptedDiagonal> {
        self.check_positive_radius(r)?;
        Ok(self.hess_weight_unchecked(r, &self.warp.values(r)))
    }

    fn hess_weight_unchecked(&self, r: f64, v: &WarpValues) -> AdaptedDiagonal {
        let h = self.weight.as_ref();
        let radial = h.d2(r);
        let tangential = if r < self.r_eps { radial } else { h.d1(r) * v.f1 / v.f };
        AdaptedDiagonal { dim: self.dim, radial, tangential }
    }

    /// `ρ^h = Ric − 2 Hess h` at one radius, as its smallest eigenvalue.
    pub fn rho_h(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        let v = self.warp.values(r);
        let ric = self.ricci_unchecked(r, &v);
        let hess = self.hess_weight_unchecked(r, &v);
        Ok(AdaptedDiagonal {
            dim: self.dim,
            radial: ric.radial - 2.0 * hess.radial,
            tangential: ric.tangential - 2.0 * hess.tangential,
        }
        .min_entry())
    }

    /// Lower bound `K` on `ρ^h`: the configured value or a dense scan over radii.
    pub fn rho_h_lower(&self) -> f64 {
        if let Some(k) = self.rho_h_lower {
            return k;
        }
        scan_radii(self.scan_limit()).filter_map(|r| self.rho_h(r).ok()).fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn scan_limit(&self) -> f64 {
        let r_max = self.r_max();
        if r_max.is_finite() {
            r_max * (1.0 - 1e-9)
        } else {
            SCAN_RADIUS
        }
    }

    /// Radial data for the simulators; `r` must lie in the warp range.
    pub fn sample(&self, r: f64) -> RadialSample {
        let v = self.warp.values(r);
        let (q, _) = self.q_pair(r, &v);
        let ric = self.ricci_unchecked(r, &v);
        let hess = self.hess_weight_unchecked(r, &v);
        RadialSample {
            r,
            warp: v,
            grad_log_j: self.dims() * q,
            phi_h: self.phi_h_unchecked(r, &v),
            h1: self.weight.d1(r),
            damping: AdaptedDiagonal {
                dim: self.dim,
                radial: -0.5 * ric.radial + hess.radial,
                tangential: -0.5 * ric.tangential + hess.tangential,
            },
        }
    }

    /// `S(r) = −∫_0^r Z^r`, the geodesic average of the drift towards the pole.
    pub fn s_field(&self, z: &RadialDrift, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        z.potential(r)
    }

    /// `Ψ = ½|∇S|² + ½ΔS + ⟨Z, ∇S − ∇h⟩`.
    pub fn psi_field(&self, z: &RadialDrift, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(self.psi_unchecked(z, r))
    }

    pub(crate) fn psi_unchecked(&self, z: &RadialDrift, r: f64) -> f64 {
        if z.is_zero() {
            return 0.0;
        }
        let zr = z.radial(r);
        let laplacian_s = if r < self.r_eps {
            -(self.dim as f64) * z.radial_d1(r)
        } else {
            let v = self.warp.values(r);
            -(z.radial_d1(r) + self.dims() * v.f1 / v.f * zr)
        };
        -0.5 * zr * zr + 0.5 * laplacian_s - zr * self.weight.d1(r)
    }
}

/// Radii on `[0, limit]`, dense near the pole and geometric further out.
pub fn scan_radii(limit: f64) -> impl Iterator<Item = f64> {
    let linear = (0..=2000).map(move |k| (k as f64 * 5e-3).min(limit));
    let outer = (1..=2000).map(move |k| (10.0 * (limit / 10.0).max(1.0).powf(k as f64 / 2000.0)).min(limit));
    linear.chain(outer)
}
