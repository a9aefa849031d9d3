//! Radial drift fields `Z = Z^r(r) ∂_r`.

use std::sync::Arc;

use super::field::RadialField;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};

/// A radial vector field, stored through its radial component `Z^r`.
///
/// Smoothness at the pole requires `Z^r(0) = 0`.
#[derive(Debug, Clone, Default)]
pub struct RadialDrift {
    component: Option<Arc<dyn RadialField>>,
}

impl RadialDrift {
    pub fn zero() -> Self {
        RadialDrift { component: None }
    }

    pub fn from_component(component: Arc<dyn RadialField>) -> Result<Self> {
        let at_pole = component.value(0.0);
        if at_pole.abs() > 1e-12 {
            return Err(Error::Config(format!("radial drift must vanish at the pole, got Z^r(0) = {at_pole}")));
        }
        Ok(RadialDrift { component: if component.is_zero() { None } else { Some(component) } })
    }

    pub fn is_zero(&self) -> bool {
        self.component.is_none()
    }

    pub fn component(&self) -> Option<&dyn RadialField> {
        self.component.as_deref()
    }

    pub(crate) fn radial(&self, r: f64) -> f64 {
        self.component.as_ref().map_or(0.0, |z| z.value(r))
    }

    pub(crate) fn radial_d1(&self, r: f64) -> f64 {
        self.component.as_ref().map_or(0.0, |z| z.d1(r))
    }

    /// `S(r) = −∫_0^r Z^r(ρ) dρ` by adaptive quadrature.
    pub(crate) fn potential(&self, r: f64) -> Result<f64> {
        match &self.component {
            None => Ok(0.0),
            Some(_) if r == 0.0 => Ok(0.0),
            Some(z) => {
                let q = integrate(|x| z.value(x), 0.0, r, Tolerance::default()).map_err(|e| match e {
                    Error::Numerical(msg) => Error::Numerical(format!("drift potential S({r}): {msg}")),
                    other => other,
                })?;
                Ok(-q.value)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GaussianBump, ModelGeometry, Quadratic};
    use approx::assert_relative_eq;

    #[test]
    fn zero_drift_has_trivial_potential() {
        let g = ModelGeometry::hyperbolic(3, 1.0).unwrap();
        let z = RadialDrift::zero();
        assert_eq!(g.s_field(&z, 2.0).unwrap(), 0.0);
        assert_eq!(g.psi_field(&z, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn gradient_drift_potential_is_difference_of_values() {
        // Z = ∇u with u = exp(−r²), so Z^r = −2r exp(−r²).
        let u = GaussianBump::new(0.0, 1.0, 1.0).unwrap();
        let grad = Arc::new(GradientOf(u));
        let z = RadialDrift::from_component(grad).unwrap();
        let g = ModelGeometry::euclidean(2).unwrap();
        for &r in &[0.0, 0.4, 1.7] {
            assert_relative_eq!(g.s_field(&z, r).unwrap(), u.value(0.0) - u.value(r), epsilon = 1e-13);
            // ∇S + Z has no radial part
            assert!((-z.radial(r) + z.radial(r)).abs() < 1e-15);
        }
    }

    #[test]
    fn psi_matches_definition_away_from_pole() {
        let g = ModelGeometry::hyperbolic(3, 1.0).unwrap();
        let z = RadialDrift::from_component(Arc::new(Quadratic { offset: 0.0, coefficient: 0.0 })).unwrap();
        assert!(z.is_zero());
        let comp = GradientOf(GaussianBump::new(0.0, 0.5, 1.0).unwrap());
        let z = RadialDrift::from_component(Arc::new(comp)).unwrap();
        let r: f64 = 0.9;
        let zr = z.radial(r);
        let lap_s = -(z.radial_d1(r) + 2.0 / r.tanh() * zr);
        assert_relative_eq!(g.psi_field(&z, r).unwrap(), 0.5 * zr * zr + 0.5 * lap_s - zr * zr, max_relative = 1e-14);
    }

    #[test]
    fn nonvanishing_drift_at_pole_is_rejected() {
        assert!(RadialDrift::from_component(Arc::new(crate::geometry::Constant(1.0))).is_err());
    }

    #[derive(Debug)]
    struct GradientOf(GaussianBump);

    impl RadialField for GradientOf {
        fn name(&self) -> &str {
            "gradient"
        }
        fn value(&self, r: f64) -> f64 {
            self.0.d1(r)
        }
        fn d1(&self, r: f64) -> f64 {
            self.0.d2(r)
        }
        fn d2(&self, _r: f64) -> f64 {
            f64::NAN
        }
        fn sup(&self) -> f64 {
            self.0.grad_bound()
        }
        fn inf(&self) -> f64 {
            -self.0.grad_bound()
        }
        fn grad_bound(&self) -> f64 {
            f64::INFINITY
        }
    }
}
