use std::sync::Arc;

use fkbridge::estimators::{estimate_semigroup, map_paths, Problem};
use fkbridge::geometry::{GaussianBump, ModelGeometry, Quadratic, RadialDrift};
use fkbridge::stats::mean_error;
use fkbridge::stochastic::{PathMode, PathSimulator, Refinement, RngStream, TimeGrid};

fn forward_endpoints(g: ModelGeometry, x0: Vec<f64>, horizon: f64, paths: usize) -> Vec<Vec<f64>> {
    let grid = TimeGrid::uniform(horizon, 128).unwrap();
    let sim = PathSimulator::new(g, RadialDrift::zero(), grid);
    map_paths(paths, None, |i| {
        let mut rng = RngStream::new(17, i as u64);
        let path = sim.forward(&x0, &[], &mut rng)?;
        Ok(path.position(path.steps()).unwrap().to_vec())
    })
    .unwrap()
}

fn assert_close(label: &str, estimate: f64, stderr: f64, exact: f64) {
    assert!((estimate - exact).abs() <= 4.0 * stderr, "{label}: {estimate} ± {stderr} vs {exact}");
}

#[test]
fn flat_forward_motion_has_brownian_moments() {
    let x0 = vec![0.7, -0.2, 0.1];
    let ends = forward_endpoints(ModelGeometry::euclidean(3).unwrap(), x0.clone(), 0.8, 20_000);
    for j in 0..3 {
        let coord: Vec<f64> = ends.iter().map(|x| x[j]).collect();
        let m = mean_error(&coord);
        assert_close("mean", m.mean, m.stderr, x0[j]);
        let sq: Vec<f64> = coord.iter().map(|c| (c - x0[j]).powi(2)).collect();
        let v = mean_error(&sq);
        assert_close("variance", v.mean, v.stderr, 0.8);
    }
    let cross: Vec<f64> = ends.iter().map(|x| (x[0] - x0[0]) * (x[1] - x0[1])).collect();
    let c = mean_error(&cross);
    assert_close("covariance", c.mean, c.stderr, 0.0);
}

#[test]
fn weighted_forward_motion_is_ornstein_uhlenbeck() {
    // h = −c r²/2 gives the drift −c x.
    let c = 0.8;
    let g = ModelGeometry::euclidean(2).unwrap().with_weight(Arc::new(Quadratic { offset: 0.0, coefficient: -c }));
    let x0 = vec![1.0, 0.0];
    let t: f64 = 1.0;
    let ends = forward_endpoints(g, x0, t, 20_000);
    let sq: Vec<f64> = ends.iter().map(|x| x[0] * x[0] + x[1] * x[1]).collect();
    let m = mean_error(&sq);
    let decay = (-2.0 * c * t).exp();
    let exact = 2.0 * (1.0 - decay) / (2.0 * c) + decay;
    // Euler bias at 128 steps is far below the Monte Carlo error here.
    assert_close("second moment", m.mean, m.stderr, exact);
}

#[test]
fn stochastic_integrals_are_centred() {
    let g = ModelGeometry::hyperbolic(3, 1.0).unwrap();
    let grid = TimeGrid::uniform(1.0, 64).unwrap();
    let sim = PathSimulator::new(g, RadialDrift::zero(), grid);
    let x0 = vec![1.0, 0.0, 0.0];
    let directions = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
    let ends = map_paths(10_000, None, |i| {
        let mut rng = RngStream::new(5, i as u64);
        let path = sim.forward(&x0, &directions, &mut rng)?;
        Ok((path.stochastic_integral(0)[64], path.stochastic_integral(1)[64], path.gram_deviation))
    })
    .unwrap();
    for j in 0..2 {
        let values: Vec<f64> = ends.iter().map(|e| if j == 0 { e.0 } else { e.1 }).collect();
        let m = mean_error(&values);
        assert_close("Itô integral", m.mean, m.stderr, 0.0);
    }
    assert!(ends.iter().all(|e| e.2 < 1e-10));
}

#[test]
fn bridges_end_at_the_pole() {
    let g = ModelGeometry::hyperbolic(2, 1.0).unwrap();
    let grid = TimeGrid::geometric(1.0, 64, 0.5).unwrap();
    let sim = PathSimulator::new(g, RadialDrift::zero(), grid);
    for mode in [PathMode::RadialOnly, PathMode::FullPolar] {
        let mut rng = RngStream::new(1, 0);
        let path = sim.bridge(&[0.0, 2.0], &[], mode, &mut rng).unwrap();
        assert_eq!(path.radii[64], 0.0);
        assert_eq!(path.radii[0], 2.0);
    }
}

#[test]
fn flat_semigroup_of_a_gaussian() {
    let w = 1.2;
    let f = Arc::new(GaussianBump::new(0.0, 1.0, w).unwrap());
    let p = Problem::new(ModelGeometry::euclidean(2).unwrap(), 0.8, 0.5)
        .unwrap()
        .with_grid(32, Refinement::None)
        .unwrap()
        .with_paths(20_000)
        .with_test_function(f);
    let r = estimate_semigroup(&p).unwrap();
    let s = w * w + 2.0 * 0.5;
    let exact = (w * w / s) * (-0.64 / s).exp();
    assert_close("semigroup", r.scalar(), r.scalar_stderr(), exact);
}
