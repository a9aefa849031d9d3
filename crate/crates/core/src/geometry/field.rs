//! Radial scalar fields: potentials `V` and weights `h` as functions of `r`.

use std::fmt;

use crate::error::{Error, Result};

/// A smooth function of the distance to the pole.
///
/// `d1` and `d2` are the radial derivatives. Smoothness at the pole needs `d1(0) = 0`.
pub trait RadialField: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn value(&self, r: f64) -> f64;
    fn d1(&self, r: f64) -> f64;
    fn d2(&self, r: f64) -> f64;
    /// Supremum over `r ≥ 0`; may be `+∞`.
    fn sup(&self) -> f64;
    /// Infimum over `r ≥ 0`; may be `−∞`.
    fn inf(&self) -> f64;
    /// `sup |d1|`; may be `+∞`.
    fn grad_bound(&self) -> f64;
    /// Constant part `c` with `value − c → 0` somewhere, factored out of exponentials exactly.
    fn offset(&self) -> f64 {
        0.0
    }
    fn is_zero(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Zero;

impl RadialField for Zero {
    fn name(&self) -> &str {
        "zero"
    }
    fn value(&self, _r: f64) -> f64 {
        0.0
    }
    fn d1(&self, _r: f64) -> f64 {
        0.0
    }
    fn d2(&self, _r: f64) -> f64 {
        0.0
    }
    fn sup(&self) -> f64 {
        0.0
    }
    fn inf(&self) -> f64 {
        0.0
    }
    fn grad_bound(&self) -> f64 {
        0.0
    }
    fn is_zero(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl RadialField for Constant {
    fn name(&self) -> &str {
        "constant"
    }
    fn value(&self, _r: f64) -> f64 {
        self.0
    }
    fn d1(&self, _r: f64) -> f64 {
        0.0
    }
    fn d2(&self, _r: f64) -> f64 {
        0.0
    }
    fn sup(&self) -> f64 {
        self.0
    }
    fn inf(&self) -> f64 {
        self.0
    }
    fn grad_bound(&self) -> f64 {
        0.0
    }
    fn offset(&self) -> f64 {
        self.0
    }
    fn is_zero(&self) -> bool {
        self.0 == 0.0
    }
}

/// `c + a exp(−r²/w²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBump {
    pub offset: f64,
    pub amplitude: f64,
    pub width: f64,
}

impl GaussianBump {
    pub fn new(offset: f64, amplitude: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::Config(format!("gaussian bump width must be positive, got {width}")));
        }
        Ok(GaussianBump { offset, amplitude, width })
    }
}

impl RadialField for GaussianBump {
    fn name(&self) -> &str {
        "gaussian-bump"
    }
    fn value(&self, r: f64) -> f64 {
        let u = r / self.width;
        self.offset + self.amplitude * (-u * u).exp()
    }
    fn d1(&self, r: f64) -> f64 {
        let u = r / self.width;
        -2.0 * self.amplitude * r / (self.width * self.width) * (-u * u).exp()
    }
    fn d2(&self, r: f64) -> f64 {
        let w2 = self.width * self.width;
        let u2 = r * r / w2;
        self.amplitude * (-u2).exp() * (4.0 * u2 - 2.0) / w2
    }
    fn sup(&self) -> f64 {
        self.offset + self.amplitude.max(0.0)
    }
    fn inf(&self) -> f64 {
        self.offset + self.amplitude.min(0.0)
    }
    fn grad_bound(&self) -> f64 {
        // max of 2|a| u e^{-u²}/w at u = 1/√2
        self.amplitude.abs() * (2.0_f64).sqrt() * (-0.5_f64).exp() / self.width
    }
    fn offset(&self) -> f64 {
        self.offset
    }
    fn is_zero(&self) -> bool {
        self.offset == 0.0 && self.amplitude == 0.0
    }
}

/// `c + ½ k r²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub offset: f64,
    pub coefficient: f64,
}

impl RadialField for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }
    fn value(&self, r: f64) -> f64 {
        self.offset + 0.5 * self.coefficient * r * r
    }
    fn d1(&self, r: f64) -> f64 {
        self.coefficient * r
    }
    fn d2(&self, _r: f64) -> f64 {
        self.coefficient
    }
    fn sup(&self) -> f64 {
        if self.coefficient > 0.0 {
            f64::INFINITY
        } else {
            self.offset
        }
    }
    fn inf(&self) -> f64 {
        if self.coefficient < 0.0 {
            f64::NEG_INFINITY
        } else {
            self.offset
        }
    }
    fn grad_bound(&self) -> f64 {
        if self.coefficient == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn offset(&self) -> f64 {
        self.offset
    }
    fn is_zero(&self) -> bool {
        self.offset == 0.0 && self.coefficient == 0.0
    }
}

/// Cubic spline through `(r_i, v_i)` with zero slope at `r = 0`, constant past the last node.
#[derive(Debug, Clone)]
pub struct Tabulated {
    r: Vec<f64>,
    v: Vec<f64>,
    m: Vec<f64>,
    sup: f64,
    inf: f64,
    grad: f64,
}

impl Tabulated {
    pub fn new(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let n = r.len();
        if n < 2 || v.len() != n {
            return Err(Error::Config("tabulated field needs at least two (r, value) pairs of equal length".into()));
        }
        if r[0] != 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("tabulated field radii must start at 0 and increase strictly".into()));
        }
        if v.iter().chain(&r).any(|x| !x.is_finite()) {
            return Err(Error::Config("tabulated field entries must be finite".into()));
        }
        let m = spline_second_derivatives(&r, &v);
        let mut field = Tabulated { r, v, m, sup: f64::NEG_INFINITY, inf: f64::INFINITY, grad: 0.0 };
        let last = *field.r.last().unwrap_or(&0.0);
        let samples = 64 * n;
        for k in 0..=samples {
            let x = last * k as f64 / samples as f64;
            let val = field.value(x);
            field.sup = field.sup.max(val);
            field.inf = field.inf.min(val);
            field.grad = field.grad.max(field.d1(x).abs());
        }
        // Sampling can miss extrema between samples by a small margin.
        let spread = (field.sup - field.inf).max(1e-12);
        field.sup += 1e-3 * spread;
        field.inf -= 1e-3 * spread;
        field.grad *= 1.001;
        Ok(field)
    }

    fn segment(&self, x: f64) -> Option<(usize, f64, f64, f64)> {
        let last = *self.r.last()?;
        if x >= last {
            return None;
        }
        let k = self.r.partition_point(|&ri| ri <= x).saturating_sub(1);
        let h = self.r[k + 1] - self.r[k];
        let a = (self.r[k + 1] - x) / h;
        Some((k, h, a, 1.0 - a))
    }
}

/// Second derivatives of the cubic spline with clamped slope 0 at the first node and natural end.
fn spline_second_derivatives(r: &[f64], v: &[f64]) -> Vec<f64> {
    let n = r.len();
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut lower = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let h0 = r[1] - r[0];
    diag[0] = h0 / 3.0;
    upper[0] = h0 / 6.0;
    rhs[0] = (v[1] - v[0]) / h0;
    for i in 1..n - 1 {
        let hl = r[i] - r[i - 1];
        let hr = r[i + 1] - r[i];
        lower[i] = hl / 6.0;
        diag[i] = (hl + hr) / 3.0;
        upper[i] = hr / 6.0;
        rhs[i] = (v[i + 1] - v[i]) / hr - (v[i] - v[i - 1]) / hl;
    }
    diag[n - 1] = 1.0;
    rhs[n - 1] = 0.0;
    // Thomas algorithm.
    for i in 1..n {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut m = vec![0.0; n];
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
    }
    m
}

impl RadialField for Tabulated {
    fn name(&self) -> &str {
        "custom-radial"
    }
    fn value(&self, x: f64) -> f64 {
        match self.segment(x) {
            None => *self.v.last().unwrap_or(&0.0),
            Some((k, h, a, b)) => {
                a * self.v[k]
                    + b * self.v[k + 1]
                    + ((a * a * a - a) * self.m[k] + (b * b * b - b) * self.m[k + 1]) * h * h / 6.0
            }
        }
    }
    fn d1(&self, x: f64) -> f64 {
        match self.segment(x) {
            None => 0.0,
            Some((k, h, a, b)) => {
                (self.v[k + 1] - self.v[k]) / h - (3.0 * a * a - 1.0) * h / 6.0 * self.m[k]
                    + (3.0 * b * b - 1.0) * h / 6.0 * self.m[k + 1]
            }
        }
    }
    fn d2(&self, x: f64) -> f64 {
        match self.segment(x) {
            None => 0.0,
            Some((k, _, a, b)) => a * self.m[k] + b * self.m[k + 1],
        }
    }
    fn sup(&self) -> f64 {
        self.sup
    }
    fn inf(&self) -> f64 {
        self.inf
    }
    fn grad_bound(&self) -> f64 {
        self.grad
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn check_derivatives(field: &dyn RadialField, points: &[f64]) {
        let h = 1e-5;
        for &r in points {
            let d1 = (field.value(r + h) - field.value(r - h)) / (2.0 * h);
            let d2 = (field.d1(r + h) - field.d1(r - h)) / (2.0 * h);
            assert!((d1 - field.d1(r)).abs() < 1e-6, "{} d1 at {r}", field.name());
            assert!((d2 - field.d2(r)).abs() < 1e-6, "{} d2 at {r}", field.name());
        }
    }

    #[test]
    fn analytic_fields_have_consistent_derivatives() {
        check_derivatives(&GaussianBump::new(0.3, 1.5, 0.7).unwrap(), &[0.1, 0.5, 1.2, 3.0]);
        check_derivatives(&Quadratic { offset: 1.0, coefficient: -0.4 }, &[0.1, 2.0]);
    }

    #[test]
    fn gaussian_bump_bounds_are_tight() {
        let f = GaussianBump::new(0.0, 2.0, 0.5).unwrap();
        let scan = (0..20000).map(|k| f.d1(k as f64 * 1e-4).abs()).fold(0.0, f64::max);
        assert_relative_eq!(scan, f.grad_bound(), max_relative = 1e-6);
        assert_eq!(f.sup(), 2.0);
        assert_eq!(f.inf(), 0.0);
    }

    #[test]
    fn spline_reproduces_smooth_data() {
        let r: Vec<f64> = (0..=80).map(|k| k as f64 * 0.05).collect();
        let v: Vec<f64> = r.iter().map(|x| (-x * x).exp()).collect();
        let s = Tabulated::new(r, v).unwrap();
        for &x in &[0.0, 0.33, 1.0, 2.2, 3.9] {
            assert!((s.value(x) - (-x * x).exp()).abs() < 1e-5);
            assert!((s.d1(x) + 2.0 * x * (-x * x).exp()).abs() < 1e-3);
        }
        assert!(s.d1(0.0).abs() < 1e-12);
        assert!(s.sup() >= 1.0 && s.inf() <= (-16.0_f64).exp());
        check_derivatives(&s, &[0.12, 1.01, 2.5]);
    }

    #[test]
    fn spline_rejects_bad_tables() {
        assert!(Tabulated::new(vec![0.1, 1.0], vec![0.0, 1.0]).is_err());
        assert!(Tabulated::new(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(Tabulated::new(vec![0.0], vec![0.0]).is_err());
    }
}
