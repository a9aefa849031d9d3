//! Path functionals: the weight `β^h`, the Girsanov density `M_t` and their ingredients.

use crate::error::{domain, Error, Result};
use crate::geometry::{scan_radii, ModelGeometry, RadialDrift, RadialField};
use crate::stochastic::{BridgePath, PathKind};

/// Scalars accumulated along one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFunctionals {
    /// `exp ∫_0^T (Φ^h + Ψ − V)`
    pub beta_h: f64,
    /// `M_t` at the requested node, bridge paths only.
    pub girsanov_m: Option<f64>,
    pub int_phi_h: f64,
    pub int_psi: f64,
    pub int_v: f64,
    /// `exp(−∫_{t_k}^T V)` at every node.
    pub suffix_v: Vec<f64>,
}

/// Certified range of `Φ^h + Ψ − V` over all radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightCertificate {
    pub sup: f64,
    pub inf: f64,
    /// Largest radius covered by the scan.
    pub radius: f64,
}

/// Scans `Φ^h + Ψ − V` and refuses when it cannot be shown bounded above.
///
/// The scan is dense near the pole and geometric out to the warp range; the supremum is
/// accepted only if the integrand is not still increasing at the far end.
pub fn certify(g: &ModelGeometry, z: &RadialDrift, v: &dyn RadialField) -> Result<WeightCertificate> {
    let limit = g.scan_limit();
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    let mut tail = Vec::new();
    for r in scan_radii(limit) {
        let value = g.phi_h(r)? + g.psi_field(z, r)? - v.value(r);
        if !value.is_finite() {
            return Err(Error::Numerical(format!("Φ^h + Ψ − V is not finite at r = {r}")));
        }
        sup = sup.max(value);
        inf = inf.min(value);
        if r >= 0.9 * limit {
            tail.push(value);
        }
    }
    // An integrand that still gains more than a relative 1e-6 over the last tenth of the
    // scan is treated as unbounded; slower approach to an asymptote is accepted.
    let gain = match (tail.first(), tail.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    let rising = gain > 1e-6 * (1.0 + sup.abs());
    if rising && tail.last().copied() == Some(sup) {
        return Err(Error::Precondition(format!(
            "cannot certify that Φ^h + Ψ − V is bounded above: it still increases at r = {limit}"
        )));
    }
    // If the integrand still decreases at the end of the scan it may be unbounded below.
    let falling = -gain > 1e-6 * (1.0 + inf.abs());
    if falling && tail.last().copied() == Some(inf) {
        inf = f64::NEG_INFINITY;
    }
    Ok(WeightCertificate { sup, inf, radius: limit })
}

/// Composite trapezoid rule on the path grid.
pub fn trapezoid(values: &[f64], steps: &[f64]) -> f64 {
    values.windows(2).zip(steps).map(|(w, dt)| 0.5 * (w[0] + w[1]) * dt).sum()
}

/// Running trapezoid integrals from the first node, one per node.
pub fn cumulative_trapezoid(values: &[f64], steps: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(acc);
    for (w, dt) in values.windows(2).zip(steps) {
        acc += 0.5 * (w[0] + w[1]) * dt;
        out.push(acc);
    }
    out
}

/// `V(r_k) − c` along the path, where `c` is the field's constant offset.
///
/// Values are spot-checked against the field's declared bounds.
pub fn reduced_potential(path: &BridgePath, v: &dyn RadialField) -> Result<Vec<f64>> {
    let (lo, hi) = (v.inf(), v.sup());
    let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()).min(1e300));
    let c = v.offset();
    path.radii
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let value = v.value(r);
            if !value.is_finite() || value < lo - slack || value > hi + slack {
                return Err(Error::Numerical(format!(
                    "potential '{}' = {value} at node {k} (r = {r}) lies outside its declared range [{lo}, {hi}]",
                    v.name()
                )));
            }
            Ok(value - c)
        })
        .collect()
}

/// `β_t = exp ∫_0^t (Φ^h + Ψ − V)` up to node `upto`, including the constant part of `V`.
pub fn beta_weight(path: &BridgePath, v: &dyn RadialField, upto: usize) -> Result<f64> {
    if upto >= path.radii.len() {
        return Err(domain(format!("node {upto} is beyond the path end")));
    }
    let reduced = reduced_potential(path, v)?;
    let rate: Vec<f64> = path.weight_rate[..=upto].iter().zip(&reduced).map(|(w, v)| w - v).collect();
    if let Some(k) = rate.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!("non-finite weight integrand at node {k} (r = {})", path.radii[k])));
    }
    let t = path.grid.nodes()[upto];
    let offset = v.offset();
    Ok((trapezoid(&rate, &path.grid.steps()[..upto]) - offset * t).exp())
}

/// `M_t` of the bridge at node `at`, with `V ≡ 0`.
pub fn girsanov_density(path: &BridgePath, g: &ModelGeometry, z: &RadialDrift, at: usize) -> Result<f64> {
    if path.kind != PathKind::Bridge {
        return Err(domain("the Girsanov density is defined on bridge paths"));
    }
    let m = path.steps();
    if at >= m {
        return Err(domain(format!("M_t needs t < T; node {at} is the terminal node")));
    }
    let horizon = path.grid.horizon();
    let t_left = path.grid.remaining()[at];
    let (r0, rt) = (path.radii[0], path.radii[at]);
    let h = g.weight();
    let log_start = g.log_gauss_kernel_k(r0, horizon)? + g.s_field(z, r0)? - h.value(r0);
    let log_now = g.log_gauss_kernel_k(rt, t_left)? + g.s_field(z, rt)? - h.value(rt);
    let integral = trapezoid(&path.weight_rate[..=at], &path.grid.steps()[..at]);
    let value = (log_start - log_now + integral).exp();
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::Numerical(format!("Girsanov density is {value} at node {at}")));
    }
    Ok(value)
}

impl PathFunctionals {
    /// All functionals of one path; `girsanov_at` selects the node for `M_t`.
    pub fn evaluate(
        path: &BridgePath,
        g: &ModelGeometry,
        z: &RadialDrift,
        v: &dyn RadialField,
        girsanov_at: Option<usize>,
    ) -> Result<Self> {
        let steps = path.grid.steps();
        let psi: Vec<f64> = path.radii.iter().map(|&r| g.psi_field(z, r)).collect::<Result<_>>()?;
        let phi_h: Vec<f64> = path.weight_rate.iter().zip(&psi).map(|(w, p)| w - p).collect();
        let reduced = reduced_potential(path, v)?;
        let horizon = path.grid.horizon();
        let offset = v.offset();
        let int_v = trapezoid(&reduced, steps) + offset * horizon;
        let int_phi_h = trapezoid(&phi_h, steps);
        let int_psi = trapezoid(&psi, steps);
        let prefix = cumulative_trapezoid(&reduced, steps);
        let total = prefix[prefix.len() - 1];
        let nodes = path.grid.nodes();
        let suffix_v = prefix.iter().zip(nodes).map(|(p, t)| (-(total - p) - offset * (horizon - t)).exp()).collect();
        let beta_h = beta_weight(path, v, path.steps())?;
        let girsanov_m = match (girsanov_at, path.kind) {
            (Some(k), PathKind::Bridge) => Some(girsanov_density(path, g, z, k)?),
            (Some(_), PathKind::Forward) => return Err(domain("the Girsanov density is defined on bridge paths")),
            (None, _) => None,
        };
        Ok(PathFunctionals { beta_h, girsanov_m, int_phi_h, int_psi, int_v, suffix_v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Constant, GaussianBump, Quadratic, Zero};
    use crate::stochastic::{PathMode, PathSimulator, RngStream, TimeGrid};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn bridge(g: &ModelGeometry, steps: usize, seed: u64) -> BridgePath {
        let sim = PathSimulator::new(g.clone(), RadialDrift::zero(), TimeGrid::uniform(1.0, steps).unwrap());
        let mut x0 = vec![0.0; g.dim()];
        x0[0] = 1.0;
        sim.bridge(&x0, &[], PathMode::RadialOnly, &mut RngStream::new(seed, 0)).unwrap()
    }

    #[test]
    fn flat_weight_is_one() {
        let g = ModelGeometry::euclidean(3).unwrap();
        let p = bridge(&g, 64, 1);
        assert_eq!(beta_weight(&p, &Zero, 64).unwrap(), 1.0);
    }

    #[test]
    fn hyperbolic_weight_is_deterministic() {
        let g = ModelGeometry::hyperbolic(3, 1.0).unwrap();
        for seed in 0..5 {
            let p = bridge(&g, 64, seed);
            assert_relative_eq!(beta_weight(&p, &Zero, 64).unwrap(), (-0.5f64).exp(), max_relative = 1e-15);
        }
    }

    #[test]
    fn constant_potential_factors_out() {
        let g = ModelGeometry::hyperbolic(2, 1.0).unwrap();
        let p = bridge(&g, 64, 3);
        let b0 = beta_weight(&p, &Zero, 64).unwrap();
        let bc = beta_weight(&p, &Constant(0.7), 64).unwrap();
        assert_relative_eq!(bc, (-0.7f64).exp() * b0, max_relative = 1e-14);
    }

    #[test]
    fn weight_is_multiplicative_over_subintervals() {
        let g = ModelGeometry::hyperbolic(2, 1.0).unwrap();
        let v = GaussianBump::new(0.0, 0.3, 1.0).unwrap();
        let p = bridge(&g, 100, 4);
        let rate: Vec<f64> =
            p.weight_rate.iter().zip(&reduced_potential(&p, &v).unwrap()).map(|(a, b)| a - b).collect();
        let steps = p.grid.steps();
        let first = trapezoid(&rate[..=40], &steps[..40]).exp();
        let second = trapezoid(&rate[40..], &steps[40..]).exp();
        assert_relative_eq!(first * second, beta_weight(&p, &v, 100).unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn girsanov_density_starts_at_one() {
        let g = ModelGeometry::hyperbolic(2, 1.0).unwrap();
        let p = bridge(&g, 16, 5);
        assert_relative_eq!(girsanov_density(&p, &g, &RadialDrift::zero(), 0).unwrap(), 1.0, max_relative = 1e-14);
        assert!(girsanov_density(&p, &g, &RadialDrift::zero(), 16).is_err());
    }

    #[test]
    fn functionals_are_consistent() {
        let g = ModelGeometry::hyperbolic(2, 1.0).unwrap();
        let v = GaussianBump::new(0.1, 0.3, 1.0).unwrap();
        let p = bridge(&g, 50, 6);
        let f = PathFunctionals::evaluate(&p, &g, &RadialDrift::zero(), &v, Some(25)).unwrap();
        assert_relative_eq!(f.beta_h, (f.int_phi_h + f.int_psi - f.int_v).exp(), max_relative = 1e-13);
        assert_relative_eq!(f.suffix_v[0], (-f.int_v).exp(), max_relative = 1e-13);
        assert_eq!(f.suffix_v[50], 1.0);
        assert!(f.girsanov_m.unwrap() > 0.0);
    }

    #[test]
    fn certification() {
        let h3 = ModelGeometry::hyperbolic(3, 1.0).unwrap();
        let c = certify(&h3, &RadialDrift::zero(), &Zero).unwrap();
        assert_eq!((c.sup, c.inf), (-0.5, -0.5));
        let growing = Quadratic { offset: 0.0, coefficient: -1.0 };
        assert!(matches!(certify(&h3, &RadialDrift::zero(), &growing), Err(Error::Precondition(_))));
        let g = ModelGeometry::euclidean(2).unwrap().with_weight(Arc::new(Quadratic { offset: 0.0, coefficient: 1.0 }));
        let c = certify(&g, &RadialDrift::zero(), &Zero).unwrap();
        assert_relative_eq!(c.sup, -1.0, max_relative = 1e-12);
        assert_eq!(c.inf, f64::NEG_INFINITY);
    }

    #[test]
    fn out_of_range_potential_is_reported() {
        #[derive(Debug)]
        struct Liar;
        impl RadialField for Liar {
            fn name(&self) -> &str {
                "liar"
            }
            fn value(&self, r: f64) -> f64 {
                r
            }
            fn d1(&self, _r: f64) -> f64 {
                1.0
            }
            fn d2(&self, _r: f64) -> f64 {
                0.0
            }
            fn sup(&self) -> f64 {
                0.1
            }
            fn inf(&self) -> f64 {
                0.0
            }
            fn grad_bound(&self) -> f64 {
                1.0
            }
        }
        let g = ModelGeometry::euclidean(2).unwrap();
        let p = bridge(&g, 16, 7);
        assert!(matches!(beta_weight(&p, &Liar, 16), Err(Error::Numerical(_))));
    }
}
