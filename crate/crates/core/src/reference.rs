//! Closed-form and quadrature reference kernels for the generator `½Δ`.

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use crate::error::{domain, Error, Result};
use crate::geometry::{Hyperbolic, ModelGeometry, Warp};
use crate::quadrature::{integrate, Tolerance};

/// Heat kernel `p_t(x, y)` of `½Δ` as a function of `r = d(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceKernel {
    Euclidean {
        dim: usize,
    },
    /// Three-dimensional hyperbolic space of curvature `−1/R²`.
    Hyperbolic3 {
        radius: f64,
    },
    /// Hyperbolic plane of curvature `−1/R²`.
    Hyperbolic2 {
        radius: f64,
    },
}

impl ReferenceKernel {
    /// The reference kernel of a geometry with `h ≡ 0`, if one exists.
    pub fn for_geometry(g: &ModelGeometry) -> Option<Self> {
        if !g.weight().is_zero() {
            return None;
        }
        let warp = g.warp();
        match warp.name() {
            "euclidean" => Some(ReferenceKernel::Euclidean { dim: g.dim() }),
            "hyperbolic" => {
                let radius = hyperbolic_radius(warp)?;
                match g.dim() {
                    3 => Some(ReferenceKernel::Hyperbolic3 { radius }),
                    2 => Some(ReferenceKernel::Hyperbolic2 { radius }),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ReferenceKernel::Euclidean { .. } => "euclidean-gaussian",
            ReferenceKernel::Hyperbolic3 { .. } => "hyperbolic-3-closed-form",
            ReferenceKernel::Hyperbolic2 { .. } => "hyperbolic-2-quadrature",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ReferenceKernel::Euclidean { dim } => *dim,
            ReferenceKernel::Hyperbolic3 { .. } => 3,
            ReferenceKernel::Hyperbolic2 { .. } => 2,
        }
    }

    pub fn value(&self, r: f64, t: f64) -> Result<f64> {
        check(r, t)?;
        match *self {
            ReferenceKernel::Euclidean { dim } => euclidean_kernel(dim, r, t),
            ReferenceKernel::Hyperbolic3 { radius } => {
                Ok(radius.powi(-3) * h3_kernel(r / radius, t / (radius * radius))?)
            }
            ReferenceKernel::Hyperbolic2 { radius } => {
                Ok(radius.powi(-2) * h2_kernel(r / radius, t / (radius * radius))?)
            }
        }
    }

    /// `∂_r p_t`.
    pub fn d_r(&self, r: f64, t: f64) -> Result<f64> {
        check(r, t)?;
        match *self {
            ReferenceKernel::Euclidean { dim } => euclidean_kernel_dr(dim, r, t),
            ReferenceKernel::Hyperbolic3 { radius } => {
                Ok(radius.powi(-4) * h3_kernel_dr(r / radius, t / (radius * radius))?)
            }
            ReferenceKernel::Hyperbolic2 { radius } => {
                Ok(radius.powi(-3) * h2_kernel_dr(r / radius, t / (radius * radius))?)
            }
        }
    }

    /// `∂_r log p_t`.
    pub fn d_log_r(&self, r: f64, t: f64) -> Result<f64> {
        match *self {
            ReferenceKernel::Hyperbolic3 { radius } => {
                check(r, t)?;
                let (x, s) = (r / radius, t / (radius * radius));
                Ok(h3_log_slope(x, s) / radius)
            }
            ReferenceKernel::Euclidean { .. } => {
                check(r, t)?;
                Ok(-r / t)
            }
            _ => Ok(self.d_r(r, t)? / self.value(r, t)?),
        }
    }

    /// Volume density `ω_{n−1} f(r)^{n−1}` of geodesic spheres.
    fn sphere_area(&self, r: f64) -> f64 {
        match *self {
            ReferenceKernel::Euclidean { dim } => unit_sphere_area(dim) * r.powi(dim as i32 - 1),
            ReferenceKernel::Hyperbolic3 { radius } => 4.0 * PI * (radius * (r / radius).sinh()).powi(2),
            ReferenceKernel::Hyperbolic2 { radius } => 2.0 * PI * radius * (r / radius).sinh(),
        }
    }
}

fn hyperbolic_radius(warp: &dyn Warp) -> Option<f64> {
    // R from f(1) = R sinh(1/R): recover through f''/f = 1/R².
    let ratio = warp.f2(1.0) / warp.f(1.0);
    let radius = 1.0 / ratio.sqrt();
    let candidate = Hyperbolic::new(radius).ok()?;
    ((candidate.f(1.0) - warp.f(1.0)).abs() <= 1e-12 * warp.f(1.0)).then_some(radius)
}

fn check(r: f64, t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(format!("time must be positive, got {t}")));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(domain(format!("radius must be non-negative, got {r}")));
    }
    Ok(())
}

/// Area of the unit sphere `S^{n−1} ⊂ ℝⁿ`.
pub fn unit_sphere_area(n: usize) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n - 2) as f64 * unit_sphere_area(n - 2),
    }
}

pub fn euclidean_kernel(n: usize, r: f64, t: f64) -> Result<f64> {
    check(r, t)?;
    Ok((2.0 * PI * t).powf(-(n as f64) / 2.0) * (-r * r / (2.0 * t)).exp())
}

pub fn euclidean_kernel_dr(n: usize, r: f64, t: f64) -> Result<f64> {
    Ok(-r / t * euclidean_kernel(n, r, t)?)
}

/// Re-expresses a kernel of the generator `Δ` for the generator `½Δ`: `p^{½Δ}_t = p^{Δ}_{t/2}`.
pub fn convert_generator(kernel_for_laplacian: impl Fn(f64) -> f64, t: f64) -> f64 {
    kernel_for_laplacian(t / 2.0)
}

/// `log sinh x` without overflow.
fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else if x < 1e-8 {
        x.ln() + x * x / 6.0
    } else {
        x.sinh().ln()
    }
}

/// `log(r / sinh r)`, zero at the pole.
fn ln_r_over_sinh(r: f64) -> f64 {
    if r < 1e-4 {
        -r * r / 6.0
    } else {
        r.ln() - ln_sinh(r)
    }
}

/// Unnormalized `H³` kernel: the odd-dimension formula with `m = 1`, after `t ↦ t/2`.
fn h3_raw(r: f64, t: f64) -> f64 {
    (-1.5 * t.ln() + ln_r_over_sinh(r) - t / 2.0 - r * r / (2.0 * t)).exp()
}

fn h3_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let t = 1.0;
        let upper = 40.0;
        let mass = integrate(|r| h3_raw(r, t) * 4.0 * PI * r.sinh().powi(2), 0.0, upper, Tolerance::new(0.0, 1e-13))
            .expect("normalization of the H3 kernel converges")
            .value;
        1.0 / mass
    })
}

/// Heat kernel of `½Δ` on `H³` with curvature `−1`.
pub fn h3_kernel(r: f64, t: f64) -> Result<f64> {
    check(r, t)?;
    Ok(h3_constant() * h3_raw(r, t))
}

fn h3_log_slope(r: f64, t: f64) -> f64 {
    let gap = if r < 1e-4 { -r / 3.0 } else { 1.0 / r - 1.0 / r.tanh() };
    gap - r / t
}

/// `∂_r` of [`h3_kernel`]: `p·(1/r − coth r − r/t)`.
pub fn h3_kernel_dr(r: f64, t: f64) -> Result<f64> {
    Ok(h3_kernel(r, t)? * h3_log_slope(r, t))
}

/// Integrand of the `H²` kernel after `s = r + u²`, in log form; `None` for a zero value.
fn h2_integrand(u: f64, r: f64, t: f64) -> f64 {
    let s = r + u * u;
    let gauss = -s * s / (2.0 * t);
    if u < 1e-100 {
        // Limit u → 0: 2u s / (u √sinh r); zero at the pole where the root behaves like u².
        return if r > 0.0 { (LN_2 + r.ln() - 0.5 * ln_sinh(r) + gauss).exp() } else { 0.0 };
    }
    let denom = 0.5 * (LN_2 + ln_sinh(r + 0.5 * u * u) + ln_sinh(0.5 * u * u));
    ((2.0 * u * s).ln() + gauss - denom).exp()
}

fn h2_upper(r: f64, t: f64) -> f64 {
    let s_max = (r * r + 120.0 * t).sqrt() + 1.0;
    (s_max - r).sqrt()
}

fn h2_integral(r: f64, t: f64, slope: bool) -> Result<f64> {
    let f = |u: f64| {
        let base = h2_integrand(u, r, t);
        if !slope {
            return base;
        }
        let s = r + u * u;
        let coth = 1.0 / (r + 0.5 * u * u).tanh();
        base * (1.0 / s - s / t - 0.5 * coth)
    };
    let upper = h2_upper(r, t);
    let q = integrate(f, 0.0, upper, Tolerance { abs: 1e-300, rel: 1e-11, max_intervals: 4000 })
        .map_err(|e| Error::Numerical(format!("H2 kernel at r = {r}, t = {t}: {e}")))?;
    Ok(q.value)
}

/// Unnormalized `H²` kernel: the even-dimension formula with `m = 0`, after `t ↦ t/2`.
fn h2_raw(r: f64, t: f64) -> Result<f64> {
    Ok(t.powf(-1.5) * (-t / 8.0).exp() * h2_integral(r, t, false)?)
}

fn h2_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let t = 1.0;
        let upper = 30.0;
        let mass = integrate(
            |r| h2_raw(r, t).unwrap_or(f64::NAN) * 2.0 * PI * r.sinh(),
            0.0,
            upper,
            Tolerance::new(0.0, 1e-11),
        )
        .expect("normalization of the H2 kernel converges")
        .value;
        1.0 / mass
    })
}

/// Heat kernel of `½Δ` on `H²` with curvature `−1`, by quadrature.
pub fn h2_kernel(r: f64, t: f64) -> Result<f64> {
    check(r, t)?;
    Ok(h2_constant() * h2_raw(r, t)?)
}

/// `∂_r` of [`h2_kernel`], differentiating under the integral.
pub fn h2_kernel_dr(r: f64, t: f64) -> Result<f64> {
    check(r, t)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    Ok(h2_constant() * t.powf(-1.5) * (-t / 8.0).exp() * h2_integral(r, t, true)?)
}

/// `∫_0^∞ p_t(r) ω_{n−1} f(r)^{n−1} dr`, which is 1 for a correctly normalized kernel.
pub fn normalization(kernel: &ReferenceKernel, t: f64) -> Result<f64> {
    let shift = match kernel {
        ReferenceKernel::Euclidean { .. } => 0.0,
        ReferenceKernel::Hyperbolic3 { radius } => t / radius,
        ReferenceKernel::Hyperbolic2 { radius } => 0.5 * t / radius,
    };
    let upper = shift + (120.0 * t).sqrt() + 5.0;
    let q = integrate(
        |r| kernel.value(r, t).unwrap_or(f64::NAN) * kernel.sphere_area(r),
        0.0,
        upper,
        Tolerance::new(0.0, 1e-10),
    )?;
    Ok(q.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn euclidean_values() {
        assert_relative_eq!(euclidean_kernel(1, 0.0, 1.0).unwrap(), 0.398942, epsilon = 5e-7);
        assert_relative_eq!(euclidean_kernel_dr(2, 1.0, 1.0).unwrap(), -0.096532, epsilon = 5e-7);
        for n in 1..=4 {
            let k = ReferenceKernel::Euclidean { dim: n };
            assert_relative_eq!(normalization(&k, 0.7).unwrap(), 1.0, max_relative = 1e-10);
        }
        assert!(euclidean_kernel(2, 1.0, 0.0).is_err());
    }

    #[test]
    fn generator_conversion_round_trips() {
        for n in 1..=3 {
            let laplacian = |s: f64| euclidean_kernel(n, 0.8, 2.0 * s).unwrap();
            let back = convert_generator(laplacian, 1.3);
            assert_relative_eq!(back, euclidean_kernel(n, 0.8, 1.3).unwrap(), max_relative = 1e-15);
        }
    }

    #[test]
    fn h3_matches_normalized_closed_form() {
        let c = (2.0 * PI).powf(-1.5);
        assert_relative_eq!(h3_constant(), c, max_relative = 1e-10);
        assert_relative_eq!(h3_kernel(1.0, 1.0).unwrap(), 0.019876, epsilon = 5e-7);
        let k = ReferenceKernel::Hyperbolic3 { radius: 1.0 };
        for t in [0.3, 1.0, 2.5] {
            assert_relative_eq!(normalization(&k, t).unwrap(), 1.0, max_relative = 1e-6);
        }
        assert_relative_eq!(h3_kernel(0.0, 1.0).unwrap(), c * (-0.5f64 - 0.5).exp().powf(0.5), max_relative = 1e-10);
    }

    #[test]
    fn h3_solves_the_radial_heat_equation() {
        let d = 1e-3;
        for &r in &[0.5, 1.0, 2.0] {
            for &t in &[0.5, 1.0, 2.0] {
                let p = |r: f64, t: f64| h3_kernel(r, t).unwrap();
                let dt = (p(r, t + d) - p(r, t - d)) / (2.0 * d);
                let drr = (p(r + d, t) - 2.0 * p(r, t) + p(r - d, t)) / (d * d);
                let dr = (p(r + d, t) - p(r - d, t)) / (2.0 * d);
                let rhs = 0.5 * (drr + 2.0 / r.tanh() * dr);
                assert!((dt - rhs).abs() < 1e-4 * dt.abs().max(p(r, t)), "r={r} t={t}: {dt} vs {rhs}");
            }
        }
    }

    #[test]
    fn h3_derivative_matches_differences() {
        let d = 1e-5;
        for &r in &[0.2, 1.0, 3.0] {
            let fd = (h3_kernel(r + d, 1.0).unwrap() - h3_kernel(r - d, 1.0).unwrap()) / (2.0 * d);
            assert_relative_eq!(h3_kernel_dr(r, 1.0).unwrap(), fd, max_relative = 1e-7);
        }
        let k = ReferenceKernel::Hyperbolic3 { radius: 1.0 };
        assert_relative_eq!(k.d_log_r(1.0, 1.0).unwrap(), -1.0 / 1f64.tanh(), max_relative = 1e-14);
    }

    #[test]
    fn h2_constant_and_normalization() {
        assert_relative_eq!(h2_constant(), 2f64.sqrt() / (2.0 * PI).powf(1.5), max_relative = 1e-8);
        let k = ReferenceKernel::Hyperbolic2 { radius: 1.0 };
        for t in [0.5, 1.0, 2.0] {
            assert_relative_eq!(normalization(&k, t).unwrap(), 1.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn h2_small_time_limit() {
        let (r, t): (f64, f64) = (0.5, 1e-3);
        let ratio = h2_kernel(r, t).unwrap() / euclidean_kernel(2, r, t).unwrap();
        assert_relative_eq!(ratio, (r / r.sinh()).sqrt(), max_relative = 1e-2);
    }

    #[test]
    fn h2_is_positive_and_decreasing() {
        for &t in &[0.3, 1.0, 3.0] {
            let values: Vec<f64> = (0..40).map(|k| h2_kernel(0.25 * k as f64, t).unwrap()).collect();
            assert!(values.iter().all(|&v| v > 0.0));
            assert!(values.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn h2_derivative_matches_differences() {
        let d = 1e-5;
        for &r in &[0.3, 1.0, 2.5] {
            let fd = (h2_kernel(r + d, 1.0).unwrap() - h2_kernel(r - d, 1.0).unwrap()) / (2.0 * d);
            assert_relative_eq!(h2_kernel_dr(r, 1.0).unwrap(), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn geometry_lookup() {
        let g = ModelGeometry::hyperbolic(3, 2.0).unwrap();
        assert_eq!(ReferenceKernel::for_geometry(&g), Some(ReferenceKernel::Hyperbolic3 { radius: 2.0 }));
        let g = ModelGeometry::hyperbolic(4, 1.0).unwrap();
        assert_eq!(ReferenceKernel::for_geometry(&g), None);
        let k = ReferenceKernel::Hyperbolic3 { radius: 2.0 };
        assert_relative_eq!(normalization(&k, 1.0).unwrap(), 1.0, max_relative = 1e-6);
    }
}
