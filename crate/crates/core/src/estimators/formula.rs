//! Gradient formulas, selectable by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Per-path data a gradient formula consumes, measured from the start of the path.
#[derive(Debug, Clone, Copy)]
pub struct GradientPathData<'a> {
    pub nodes: &'a [f64],
    pub steps: &'a [f64],
    /// `V(r_k) − c`, the potential without its constant part.
    pub potential: &'a [f64],
    /// `V'(r_k)`
    pub potential_slope: &'a [f64],
    /// Running stochastic integrals, one vector per direction.
    pub integrals: &'a [Vec<f64>],
    /// Radial components `⟨W_k(v), ∂_r⟩`, one vector per direction.
    pub radial: &'a [Vec<f64>],
    /// `exp(−∫_{t_k}^{t_end} (V − c))` for every node.
    pub suffix: &'a [f64],
}

/// A representation of `d(kernel or semigroup)(v)` as an expectation of `weight × bracket`.
pub trait GradientFormula: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &'static str;

    /// Whether the path weight carries `exp(−∫V)`; otherwise only the geometric part.
    fn weight_includes_potential(&self) -> bool;

    /// Whether the formula may be evaluated at an inner time `t < t_end`.
    fn supports_inner_time(&self) -> bool;

    /// Writes the bracket for each direction, using the path up to node `upto`.
    fn bracket(&self, data: &GradientPathData<'_>, upto: usize, out: &mut [f64]);
}

/// Formula for `V ∈ BC¹`: `(1/t)[∫_0^t ⟨W(v), u dB⟩ − ∫_0^t (t − s) dV(W_s(v)) ds]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Differentiable;

impl GradientFormula for Differentiable {
    fn name(&self) -> &'static str {
        "bc1"
    }
    fn weight_includes_potential(&self) -> bool {
        true
    }
    fn supports_inner_time(&self) -> bool {
        true
    }
    fn bracket(&self, d: &GradientPathData<'_>, upto: usize, out: &mut [f64]) {
        let t = d.nodes[upto];
        for (j, o) in out.iter_mut().enumerate() {
            let radial = &d.radial[j];
            let mut correction = 0.0;
            for k in 0..upto {
                let left = (t - d.nodes[k]) * d.potential_slope[k] * radial[k];
                let right = (t - d.nodes[k + 1]) * d.potential_slope[k + 1] * radial[k + 1];
                correction += 0.5 * (left + right) * d.steps[k];
            }
            *o = (d.integrals[j][upto] - correction) / t;
        }
    }
}

/// Formula for bounded `V`: `(1/t) ∫_0^t ⟨W(v), u dB⟩ − ∫_0^t V_s e^{−∫_s^t V} (1/s) ∫_0^s ⟨W(v), u dB⟩ ds`.
///
/// The inner integrand behaves like `s^{−½}` at `s = 0`. Writing it as `s^{−½} φ(s)`, the
/// rule integrates `s^{−½}` exactly against `φ` interpolated linearly between nodes and held
/// constant on the first interval.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bounded;

/// `∫_0^{t_upto} s^{−½} φ(s) ds` with `φ` given at nodes `1..=upto`.
pub(crate) fn half_power_integral(nodes: &[f64], phi: impl Fn(usize) -> f64, upto: usize) -> f64 {
    if upto == 0 {
        return 0.0;
    }
    let mut prev = phi(1);
    let mut total = 2.0 * nodes[1].sqrt() * prev;
    for k in 1..upto {
        let (a, b) = (nodes[k].sqrt(), nodes[k + 1].sqrt());
        let next = phi(k + 1);
        let a0 = 2.0 * (b - a);
        let a1 = 2.0 / 3.0 * (b - a) * (b - a) * (b + 2.0 * a);
        total += prev * a0 + (next - prev) * a1 / (nodes[k + 1] - nodes[k]);
        prev = next;
    }
    total
}

impl GradientFormula for Bounded {
    fn name(&self) -> &'static str {
        "holder"
    }
    fn weight_includes_potential(&self) -> bool {
        false
    }
    fn supports_inner_time(&self) -> bool {
        false
    }
    fn bracket(&self, d: &GradientPathData<'_>, upto: usize, out: &mut [f64]) {
        let t = d.nodes[upto];
        for (j, o) in out.iter_mut().enumerate() {
            let integral = &d.integrals[j];
            let phi = |k: usize| d.potential[k] * d.suffix[k] * integral[k] / d.nodes[k].sqrt();
            *o = integral[upto] / t - half_power_integral(d.nodes, phi, upto);
        }
    }
}

/// Named gradient formulas.
#[derive(Debug, Clone)]
pub struct FormulaRegistry {
    entries: BTreeMap<&'static str, Arc<dyn GradientFormula>>,
}

impl Default for FormulaRegistry {
    fn default() -> Self {
        let mut r = FormulaRegistry { entries: BTreeMap::new() };
        r.register(Arc::new(Differentiable));
        r.register(Arc::new(Bounded));
        r
    }
}

impl FormulaRegistry {
    pub fn register(&mut self, formula: Arc<dyn GradientFormula>) {
        self.entries.insert(formula.name(), formula);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn GradientFormula>> {
        self.entries.get(name).cloned().ok_or_else(|| {
            Error::Config(format!("unknown gradient variant '{name}'; available: {}", self.names().join(", ")))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn data<'a>(
        nodes: &'a [f64],
        steps: &'a [f64],
        potential: &'a [f64],
        slope: &'a [f64],
        integrals: &'a [Vec<f64>],
        radial: &'a [Vec<f64>],
        suffix: &'a [f64],
    ) -> GradientPathData<'a> {
        GradientPathData { nodes, steps, potential, potential_slope: slope, integrals, radial, suffix }
    }

    #[test]
    fn formulas_agree_without_potential() {
        let nodes: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let steps = vec![0.1; 10];
        let zeros = vec![0.0; 11];
        let ones = vec![1.0; 11];
        let integrals = vec![nodes.iter().map(|t| t.sqrt() * 0.3).collect::<Vec<_>>()];
        let radial = vec![ones.clone()];
        let d = data(&nodes, &steps, &zeros, &zeros, &integrals, &radial, &ones);
        let (mut a, mut b) = ([0.0], [0.0]);
        Differentiable.bracket(&d, 10, &mut a);
        Bounded.bracket(&d, 10, &mut b);
        assert_eq!(a, b);
        assert_relative_eq!(a[0], 0.3);
    }

    #[test]
    fn half_power_rule_is_exact_for_linear_profiles() {
        let nodes: Vec<f64> = (0..=7).map(|k| (k as f64 / 7.0).powf(1.3)).collect();
        // ∫_0^1 s^{−½} ds = 2 and ∫_0^1 s^{−½}·s ds = 2/3, up to the first-interval hold.
        assert_relative_eq!(half_power_integral(&nodes, |_| 1.0, 7), 2.0, max_relative = 1e-14);
        let fine: Vec<f64> = (0..=4000).map(|k| k as f64 / 4000.0).collect();
        assert_relative_eq!(half_power_integral(&fine, |k| fine[k], 4000), 2.0 / 3.0, max_relative = 1e-5);
    }

    #[test]
    fn singular_first_interval_is_exact_for_square_root_integrals() {
        // V ≡ 1 on the whole path, suffix ≡ 1 and I_s = √s: ∫_0^1 s^{−½} ds = 2.
        let m = 1000;
        let nodes: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
        let steps = vec![1.0 / m as f64; m];
        let ones = vec![1.0; m + 1];
        let integrals = vec![nodes.iter().map(|t| t.sqrt()).collect::<Vec<_>>()];
        let radial = vec![ones.clone()];
        let d = data(&nodes, &steps, &ones, &ones, &integrals, &radial, &ones);
        let mut out = [0.0];
        Bounded.bracket(&d, m, &mut out);
        assert_relative_eq!(out[0], 1.0 - 2.0, max_relative = 1e-13);
    }

    #[test]
    fn registry_lookup() {
        let r = FormulaRegistry::default();
        assert_eq!(r.names(), vec!["bc1", "holder"]);
        assert!(r.get("holder").is_ok());
        assert!(r.get("malliavin").unwrap_err().to_string().contains("bc1, holder"));
    }
}
