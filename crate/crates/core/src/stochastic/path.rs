//! Path simulation in Cartesian normal coordinates `x = rθ ∈ ℝⁿ` centred at the pole.
//!
//! Normal coordinates are global on a manifold with a pole and smooth through it, so
//! angular charts never degenerate. A tangent vector with adapted components `ξ` moves
//! the coordinates by `σ_x(ξ) = (θ·ξ)θ + (r/f)(ξ − (θ·ξ)θ)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::TimeGrid;
use super::rng::RngStream;
use super::transport::{
    adapted_basis, apply_damping, damping_multipliers, identity, mat_vec, reorthonormalize, PlaneRotation,
    TransportScheme,
};
use crate::error::{Error, Result};
use crate::geometry::{ModelGeometry, RadialDrift, RadialSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathMode {
    /// Only radii, sampled exactly; no frames or stochastic integrals.
    RadialOnly,
    /// Full state with frame and damped transport.
    FullPolar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Forward,
    Bridge,
}

/// Per-direction traces along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionTrace {
    /// Itô increments `⟨W_k(v), u_k ΔB_k⟩` (forward) or `⟨W̃_k(v), ũ_k ΔB̃_k⟩` (bridge), one per step.
    pub increments: Vec<f64>,
    /// `⟨W_k(v), ∂_r⟩` at every node.
    pub radial: Vec<f64>,
}

/// One sampled trajectory.
#[derive(Debug, Clone)]
pub struct BridgePath {
    pub kind: PathKind,
    pub mode: PathMode,
    pub dim: usize,
    pub grid: Arc<TimeGrid>,
    pub radii: Vec<f64>,
    /// Node positions in normal coordinates, `dim` per node; empty in radial mode.
    pub positions: Vec<f64>,
    /// `(Φ^h + Ψ)(r_k)` at every node.
    pub weight_rate: Vec<f64>,
    pub directions: Vec<DirectionTrace>,
    /// Frames `u_k` (column-major, `dim²` per node) when recorded.
    pub frames: Vec<f64>,
    /// Damped transports `W_k` (column-major, `dim²` per node) when recorded.
    pub transports: Vec<f64>,
    /// Brownian increments `ΔB_k` when recorded.
    pub noise: Vec<f64>,
    /// Driving increments `u_k ΔB_k` or `ũ_k ΔB̃_k` in adapted components when recorded.
    pub driving: Vec<f64>,
    /// Largest frame Gram deviation seen before re-orthonormalization.
    pub gram_deviation: f64,
}

impl BridgePath {
    pub fn steps(&self) -> usize {
        self.radii.len() - 1
    }

    pub fn position(&self, k: usize) -> Option<&[f64]> {
        let n = self.dim;
        self.positions.get(k * n..(k + 1) * n)
    }

    pub fn transport(&self, k: usize) -> Option<&[f64]> {
        let n2 = self.dim * self.dim;
        self.transports.get(k * n2..(k + 1) * n2)
    }

    pub fn frame(&self, k: usize) -> Option<&[f64]> {
        let n2 = self.dim * self.dim;
        self.frames.get(k * n2..(k + 1) * n2)
    }

    /// Running stochastic integral for direction `index`, starting at 0 at the first node.
    pub fn stochastic_integral(&self, index: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.radii.len());
        let mut acc = 0.0;
        out.push(acc);
        for inc in &self.directions[index].increments {
            acc += inc;
            out.push(acc);
        }
        out
    }
}

/// Shared simulation settings; cheap to share across worker threads.
#[derive(Debug, Clone)]
pub struct PathSimulator {
    geometry: ModelGeometry,
    drift: RadialDrift,
    grid: Arc<TimeGrid>,
    scheme: TransportScheme,
    record: bool,
}

impl PathSimulator {
    pub fn new(geometry: ModelGeometry, drift: RadialDrift, grid: TimeGrid) -> Self {
        PathSimulator { geometry, drift, grid: Arc::new(grid), scheme: TransportScheme::default(), record: false }
    }

    pub fn with_scheme(mut self, scheme: TransportScheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Store frames, transports and increments on every path.
    pub fn recording(mut self, record: bool) -> Self {
        self.record = record;
        self
    }

    pub fn geometry(&self) -> &ModelGeometry {
        &self.geometry
    }

    pub fn drift(&self) -> &RadialDrift {
        &self.drift
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Forward Brownian motion with drift `∇h + Z` started at `x0` (normal coordinates).
    ///
    /// `directions` are given in the adapted frame at `x0`, radial component first.
    pub fn forward(&self, x0: &[f64], directions: &[Vec<f64>], rng: &mut RngStream) -> Result<BridgePath> {
        self.simulate(PathKind::Forward, x0, directions, rng)
    }

    /// Semi-classical bridge from `x0` to the pole.
    pub fn bridge(
        &self,
        x0: &[f64],
        directions: &[Vec<f64>],
        mode: PathMode,
        rng: &mut RngStream,
    ) -> Result<BridgePath> {
        match mode {
            PathMode::FullPolar => self.simulate(PathKind::Bridge, x0, directions, rng),
            PathMode::RadialOnly => {
                if !directions.is_empty() {
                    return Err(Error::Config(
                        "radial-only paths carry no stochastic integrals; use full_polar".into(),
                    ));
                }
                let r0 = norm(x0);
                let radii = sample_bessel_bridge_radial(self.geometry.dim(), r0, &self.grid, rng);
                let weight_rate = radii.iter().map(|&r| self.weight_rate(&self.geometry.sample(r))).collect();
                Ok(BridgePath {
                    kind: PathKind::Bridge,
                    mode,
                    dim: self.geometry.dim(),
                    grid: self.grid.clone(),
                    radii,
                    positions: Vec::new(),
                    weight_rate,
                    directions: Vec::new(),
                    frames: Vec::new(),
                    transports: Vec::new(),
                    noise: Vec::new(),
                    driving: Vec::new(),
                    gram_deviation: 0.0,
                })
            }
        }
    }

    fn weight_rate(&self, s: &RadialSample) -> f64 {
        s.phi_h + self.geometry.psi_unchecked(&self.drift, s.r)
    }

    fn simulate(&self, kind: PathKind, x0: &[f64], directions: &[Vec<f64>], rng: &mut RngStream) -> Result<BridgePath> {
        let g = &self.geometry;
        let n = g.dim();
        if x0.len() != n {
            return Err(Error::Config(format!("start point has {} coordinates, expected {n}", x0.len())));
        }
        if let Some(d) = directions.iter().find(|d| d.len() != n) {
            return Err(Error::Config(format!("direction has {} components, expected {n}", d.len())));
        }
        let grid = &self.grid;
        let m = grid.len();
        let a3 = g.warp().pole_cubic();
        let r_eps = g.r_eps();
        let dims = (n - 1) as f64;
        let r_max = g.r_max();

        let mut x = x0.to_vec();
        let mut r = norm(&x);
        let mut theta = unit_or_axis(&x, r);
        let basis = adapted_basis(&theta);
        let embedded: Vec<Vec<f64>> = directions
            .iter()
            .map(|d| {
                let mut v = vec![0.0; n];
                mat_vec(&basis, d, &mut v);
                v
            })
            .collect();
        // Transported columns: the full matrix when recording, otherwise the directions only.
        let mut w = if self.record { identity(n) } else { embedded.concat() };
        let mut frame = basis.clone();

        let mut radii = Vec::with_capacity(m + 1);
        let mut positions = Vec::with_capacity((m + 1) * n);
        let mut weight_rate = Vec::with_capacity(m + 1);
        let mut traces: Vec<DirectionTrace> = directions
            .iter()
            .map(|_| DirectionTrace { increments: Vec::with_capacity(m), radial: Vec::with_capacity(m + 1) })
            .collect();
        let (mut frames, mut transports, mut noise, mut driving) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut gram: f64 = 0.0;

        let mut db = vec![0.0; n];
        let mut xi = vec![0.0; n];
        let mut wv = vec![0.0; n];
        let mut next_x = vec![0.0; n];

        let mut sample = g.sample(r);
        for k in 0..=m {
            radii.push(r);
            positions.extend_from_slice(&x);
            weight_rate.push(self.weight_rate(&sample));
            if self.record {
                frames.extend_from_slice(&frame);
                transports.extend_from_slice(&w);
            }
            for (j, trace) in traces.iter_mut().enumerate() {
                let v = self.transported(&w, &embedded[j], j, n, &mut wv);
                trace.radial.push(dot(v, &theta));
            }
            if k == m {
                break;
            }

            let (dt, shrink, tau) = match kind {
                PathKind::Forward => (grid.steps()[k], 1.0, 0.0),
                PathKind::Bridge => {
                    let (t0, t1) = (grid.remaining()[k], grid.remaining()[k + 1]);
                    (t0 - t1, t1 / t0, t0)
                }
            };
            let sd = dt.sqrt();
            for b in db.iter_mut() {
                *b = sd * rng.normal();
            }
            mat_vec(&frame, &db, &mut xi);

            let v = sample.warp;
            let ratio = if r < r_eps { 1.0 - a3 * r * r } else { r / v.f };
            // Radial drift of x: Itô correction of the normal chart plus the model drift.
            let radial_drift = match kind {
                PathKind::Forward => {
                    let chart =
                        if r < r_eps { 2.0 * dims * a3 * r } else { 0.5 * dims * (v.f1 / v.f - r / (v.f * v.f)) };
                    chart + sample.h1 + self.drift.radial(r)
                }
                PathKind::Bridge => {
                    if r < r_eps {
                        dims * a3 * r
                    } else {
                        0.5 * dims * (1.0 / r - r / (v.f * v.f))
                    }
                }
            };
            let scale = shrink.sqrt();
            let xi_r = dot(&xi, &theta);
            for i in 0..n {
                let noise_i = scale * (xi_r * theta[i] + ratio * (xi[i] - xi_r * theta[i]));
                next_x[i] = shrink * x[i] + radial_drift * theta[i] * dt + noise_i;
            }
            // Driving increment in adapted components.
            let pull = match kind {
                PathKind::Forward => 0.0,
                PathKind::Bridge => -r / tau - 0.5 * sample.grad_log_j - sample.h1,
            };
            for (j, trace) in traces.iter_mut().enumerate() {
                let v = self.transported(&w, &embedded[j], j, n, &mut wv);
                trace.increments.push(scale * dot(v, &xi) + pull * dt * dot(v, &theta));
            }
            if self.record {
                noise.extend_from_slice(&db);
                driving.extend(xi.iter().zip(&theta).map(|(e, t)| scale * e + pull * dt * t));
            }

            if kind == PathKind::Bridge && k + 1 == m {
                next_x.iter_mut().for_each(|c| *c = 0.0);
            }
            let r_next = norm(&next_x);
            if !r_next.is_finite() || r_next > r_max {
                return Err(Error::Simulation(format!(
                    "path left the geometry range at t = {:.6}: r = {r_next:e} (limit {r_max})",
                    grid.nodes()[k + 1]
                )));
            }
            let theta_next = if r_next > 0.0 { unit_or_axis(&next_x, r_next) } else { theta.clone() };

            let next_sample = g.sample(r_next);
            let mid = 0.5 * (r + r_next);
            let mid_sample = if self.scheme == TransportScheme::Euler { sample } else { g.sample(mid) };
            if r > 0.0 && r_next > 0.0 {
                if let Some(rot) = PlaneRotation::between(&theta, &theta_next, mid_sample.warp.f1) {
                    rot.apply(&mut w);
                    rot.apply(&mut frame);
                }
            }
            let damping = damping_multipliers(mid_sample.damping, dt, self.scheme);
            apply_damping(&theta_next, damping, &mut w);
            gram = gram.max(reorthonormalize(&mut frame, n));

            std::mem::swap(&mut x, &mut next_x);
            r = r_next;
            theta = theta_next;
            sample = next_sample;
        }

        Ok(BridgePath {
            kind,
            mode: PathMode::FullPolar,
            dim: n,
            grid: grid.clone(),
            radii,
            positions,
            weight_rate,
            directions: traces,
            frames,
            transports,
            noise,
            driving,
            gram_deviation: gram,
        })
    }

    fn transported<'a>(&self, w: &'a [f64], v: &[f64], j: usize, n: usize, scratch: &'a mut [f64]) -> &'a [f64] {
        if self.record {
            mat_vec(w, v, scratch);
            scratch
        } else {
            &w[j * n..(j + 1) * n]
        }
    }
}

/// Radii of an `n`-dimensional Brownian bridge from a point at distance `r0` to the origin.
///
/// Exact in law at the grid nodes; the last radius is exactly 0.
pub fn sample_bessel_bridge_radial(n: usize, r0: f64, grid: &TimeGrid, rng: &mut RngStream) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[0] = r0;
    let m = grid.len();
    let mut radii = Vec::with_capacity(m + 1);
    radii.push(r0);
    let rem = grid.remaining();
    for k in 0..m {
        if k + 1 == m {
            radii.push(0.0);
            break;
        }
        let lambda = rem[k + 1] / rem[k];
        let sd = (lambda * (rem[k] - rem[k + 1])).sqrt();
        for c in x.iter_mut() {
            *c = lambda * *c + sd * rng.normal();
        }
        radii.push(norm(&x));
    }
    radii
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit_or_axis(x: &[f64], r: f64) -> Vec<f64> {
    if r > 0.0 {
        x.iter().map(|c| c / r).collect()
    } else {
        let mut e = vec![0.0; x.len()];
        e[0] = 1.0;
        e
    }
}
