//! Frames and damped parallel translation in adapted components.
//!
//! Tangent vectors at `x = rθ` are stored by their components in an orthonormal frame
//! `(θ, e_2, …, e_n)` whose tangential part is identified with `θ^⊥ ⊂ ℝⁿ`. Matrices are
//! `n × n`, column-major, so column `j` is the image of the `j`-th basis vector.

use serde::{Deserialize, Serialize};

use crate::geometry::{AdaptedDiagonal, ModelGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportScheme {
    /// `W ← (1 + dt A(r_k)) W`
    Euler,
    /// `W ← (1 + dt A + ½dt² A²) W` with `A` at the mean radius of the step
    #[default]
    Midpoint,
    /// `W ← exp(dt A) W` with `A` at the mean radius of the step
    Exponential,
}

/// Orthonormal completion `(θ, b_2, …, b_n)` of a unit vector, column-major.
pub fn adapted_basis(theta: &[f64]) -> Vec<f64> {
    let n = theta.len();
    let mut basis = Vec::with_capacity(n * n);
    basis.extend_from_slice(theta);
    // Skip the coordinate axis most aligned with θ; the rest stay independent of it.
    let skip = (0..n).max_by(|&a, &b| theta[a].abs().total_cmp(&theta[b].abs())).unwrap_or(0);
    for axis in (0..n).filter(|&a| a != skip) {
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        for c in 0..basis.len() / n {
            let col = &basis[c * n..(c + 1) * n];
            let p: f64 = col.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (vi, ci) in v.iter_mut().zip(col) {
                *vi -= p * ci;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        basis.extend(v.iter().map(|x| x / norm));
    }
    basis
}

pub fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// Plane rotation taking the direction `from` towards `to`, applied to stored columns.
#[derive(Debug, Clone)]
pub(crate) struct PlaneRotation {
    e1: Vec<f64>,
    e2: Vec<f64>,
    cos: f64,
    sin: f64,
}

impl PlaneRotation {
    /// Rotation by `(1 − f'(r̄))·∠(from, to)` in the plane spanned by the two unit vectors.
    ///
    /// Returns `None` when the directions coincide or either point is the pole.
    pub(crate) fn between(from: &[f64], to: &[f64], slope: f64) -> Option<Self> {
        let c: f64 = from.iter().zip(to).map(|(a, b)| a * b).sum();
        let mut e2: Vec<f64> = to.iter().zip(from).map(|(b, a)| b - c * a).collect();
        let s = e2.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(s > 1e-300) {
            return None;
        }
        for x in &mut e2 {
            *x /= s;
        }
        let alpha = (1.0 - slope) * s.atan2(c);
        if alpha == 0.0 {
            return None;
        }
        Some(PlaneRotation { e1: from.to_vec(), e2, cos: alpha.cos(), sin: alpha.sin() })
    }

    pub(crate) fn apply(&self, columns: &mut [f64]) {
        let n = self.e1.len();
        for col in columns.chunks_exact_mut(n) {
            let p1: f64 = col.iter().zip(&self.e1).map(|(a, b)| a * b).sum();
            let p2: f64 = col.iter().zip(&self.e2).map(|(a, b)| a * b).sum();
            let (a1, a2) = ((self.cos - 1.0) * p1 - self.sin * p2, (self.cos - 1.0) * p2 + self.sin * p1);
            for ((x, u), v) in col.iter_mut().zip(&self.e1).zip(&self.e2) {
                *x += a1 * u + a2 * v;
            }
        }
    }
}

/// Multipliers `(m_r, m_t)` of one damping step with eigenvalues `a`.
pub(crate) fn damping_multipliers(a: AdaptedDiagonal, dt: f64, scheme: TransportScheme) -> (f64, f64) {
    let m = |x: f64| match scheme {
        TransportScheme::Euler => 1.0 + dt * x,
        TransportScheme::Midpoint => 1.0 + dt * x + 0.5 * dt * dt * x * x,
        TransportScheme::Exponential => (dt * x).exp(),
    };
    (m(a.radial), m(a.tangential))
}

/// `x ← m_t x + (m_r − m_t)(θ·x)θ` on every column.
pub(crate) fn apply_damping(theta: &[f64], (mr, mt): (f64, f64), columns: &mut [f64]) {
    let n = theta.len();
    if mr == 1.0 && mt == 1.0 {
        return;
    }
    for col in columns.chunks_exact_mut(n) {
        let p: f64 = col.iter().zip(theta).map(|(a, b)| a * b).sum();
        for (x, t) in col.iter_mut().zip(theta) {
            *x = mt * *x + (mr - mt) * p * t;
        }
    }
}

/// One step of `DW/dt = (−½Ric + Hess h) W`: transport from `θ_k` to `θ_{k+1}`, then damping.
///
/// `r_k`, `r_next` are the radii at both ends; `theta_k`, `theta_next` the unit directions.
#[allow(clippy::too_many_arguments)]
pub fn damped_transport_step(
    g: &ModelGeometry,
    scheme: TransportScheme,
    r_k: f64,
    r_next: f64,
    theta_k: &[f64],
    theta_next: &[f64],
    w: &mut [f64],
    dt: f64,
) {
    let mid = 0.5 * (r_k + r_next);
    let s_mid = g.sample(mid);
    if let Some(rot) = PlaneRotation::between(theta_k, theta_next, s_mid.warp.f1) {
        rot.apply(w);
    }
    let a = match scheme {
        TransportScheme::Euler => g.sample(r_k).damping,
        _ => s_mid.damping,
    };
    apply_damping(theta_next, damping_multipliers(a, dt, scheme), w);
}

/// Modified Gram–Schmidt on the columns; returns the largest Gram deviation before the sweep.
pub fn reorthonormalize(columns: &mut [f64], n: usize) -> f64 {
    let mut deviation: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let d: f64 = (0..n).map(|k| columns[i * n + k] * columns[j * n + k]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            deviation = deviation.max((d - target).abs());
        }
    }
    for i in 0..n {
        for j in 0..i {
            let p: f64 = (0..n).map(|k| columns[i * n + k] * columns[j * n + k]).sum();
            for k in 0..n {
                columns[i * n + k] -= p * columns[j * n + k];
            }
        }
        let norm = (0..n).map(|k| columns[i * n + k].powi(2)).sum::<f64>().sqrt();
        for k in 0..n {
            columns[i * n + k] /= norm;
        }
    }
    deviation
}

/// `max |ColᵀCol − I|` over entries.
pub fn gram_deviation(columns: &[f64], n: usize) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d: f64 = (0..n).map(|k| columns[i * n + k] * columns[j * n + k]).sum();
            dev = dev.max((d - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    dev
}

/// Operator norm of a column-major `n × n` matrix, by power iteration on `MᵀM`.
pub fn operator_norm(m: &[f64], n: usize) -> f64 {
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            gram[i * n + j] = (0..n).map(|k| m[i * n + k] * m[j * n + k]).sum();
        }
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| gram[i * n + j] * v[j]).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm;
        v = w.into_iter().map(|x| x / norm).collect();
        if (next - lambda).abs() <= 1e-15 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

/// `M v` for a column-major matrix.
pub fn mat_vec(m: &[f64], v: &[f64], out: &mut [f64]) {
    let n = v.len();
    out.iter_mut().for_each(|x| *x = 0.0);
    for (j, vj) in v.iter().enumerate() {
        if *vj != 0.0 {
            for (o, c) in out.iter_mut().zip(&m[j * n..(j + 1) * n]) {
                *o += vj * c;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn basis_is_orthonormal_and_starts_with_theta() {
        let theta = [0.6, 0.0, 0.8];
        let b = adapted_basis(&theta);
        assert_eq!(&b[..3], &theta);
        assert!(gram_deviation(&b, 3) < 1e-15);
    }

    #[test]
    fn euclidean_transport_is_identity() {
        let g = ModelGeometry::euclidean(3).unwrap();
        let mut w = identity(3);
        damped_transport_step(&g, TransportScheme::Midpoint, 1.0, 1.2, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &mut w, 0.1);
        assert_eq!(w, identity(3));
    }

    #[test]
    fn hyperbolic_damping_grows_exponentially() {
        let g = ModelGeometry::hyperbolic(3, 1.0).unwrap();
        let theta = [1.0, 0.0, 0.0];
        for (scheme, tol) in
            [(TransportScheme::Euler, 1e-2), (TransportScheme::Midpoint, 1e-4), (TransportScheme::Exponential, 1e-13)]
        {
            let mut w = identity(3);
            let steps = 200;
            for _ in 0..steps {
                damped_transport_step(&g, scheme, 0.7, 0.7, &theta, &theta, &mut w, 1.0 / steps as f64);
            }
            assert_relative_eq!(operator_norm(&w, 3), 1f64.exp(), max_relative = tol);
        }
    }

    #[test]
    fn operator_norm_of_diagonal() {
        let m = [2.0, 0.0, 0.0, -3.0];
        assert_relative_eq!(operator_norm(&m, 2), 3.0, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn rotation_preserves_orthonormality(
            a in prop::array::uniform3(-1.0f64..1.0),
            b in prop::array::uniform3(-1.0f64..1.0),
            slope in -3.0f64..3.0,
        ) {
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assume!(na > 1e-3 && nb > 1e-3);
            let ta: Vec<f64> = a.iter().map(|x| x / na).collect();
            let tb: Vec<f64> = b.iter().map(|x| x / nb).collect();
            let mut frame = adapted_basis(&ta);
            if let Some(rot) = PlaneRotation::between(&ta, &tb, slope) {
                rot.apply(&mut frame);
            }
            prop_assert!(gram_deviation(&frame, 3) < 1e-12);
        }

        #[test]
        fn flat_rotation_carries_theta_to_new_direction(
            a in prop::array::uniform2(-1.0f64..1.0),
            b in prop::array::uniform2(-1.0f64..1.0),
        ) {
            // slope 0 means the frame turns with the position: θ_k ↦ θ_{k+1}
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assume!(na > 1e-3 && nb > 1e-3);
            let ta: Vec<f64> = a.iter().map(|x| x / na).collect();
            let tb: Vec<f64> = b.iter().map(|x| x / nb).collect();
            let mut v = ta.clone();
            if let Some(rot) = PlaneRotation::between(&ta, &tb, 0.0) {
                rot.apply(&mut v);
            }
            prop_assert!((v[0] - tb[0]).abs() < 1e-9 && (v[1] - tb[1]).abs() < 1e-9);
        }
    }
}
