//! Deterministic reductions and small statistical helpers.

/// Pairwise (tree) summation; the tree shape depends only on the length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanError {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

pub fn mean_error(values: &[f64]) -> MeanError {
    let count = values.len();
    if count == 0 {
        return MeanError { mean: f64::NAN, stderr: f64::NAN, count };
    }
    if values.iter().all(|&x| x == values[0]) {
        let stderr = if count < 2 { f64::NAN } else { 0.0 };
        return MeanError { mean: values[0], stderr, count };
    }
    let mean = pairwise_sum(values) / count as f64;
    if count < 2 {
        return MeanError { mean, stderr: f64::NAN, count };
    }
    let squares: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&squares) / (count - 1) as f64;
    MeanError { mean, stderr: (var / count as f64).sqrt(), count }
}

/// Ratio `mean(y) / mean(x)` of paired samples with a delta-method standard error.
pub fn ratio_error(y: &[f64], x: &[f64]) -> MeanError {
    let my = mean_error(y);
    let mx = mean_error(x);
    let ratio = my.mean / mx.mean;
    let count = y.len();
    let residuals: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - ratio * b).collect();
    let spread = mean_error(&residuals);
    MeanError { mean: ratio, stderr: spread.stderr / mx.mean.abs(), count }
}

/// Effective sample size `(Σw)² / Σw²` of non-negative weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let sum = pairwise_sum(weights);
    let squares: Vec<f64> = weights.iter().map(|w| w * w).collect();
    sum * sum / pairwise_sum(&squares)
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    (d, kolmogorov_survival(lambda))
}

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²)`.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u32 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pairwise_sum_of_integers_is_exact() {
        let v: Vec<f64> = (1..=1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
    }

    #[test]
    fn mean_error_of_known_sample() {
        let m = mean_error(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert_relative_eq!(m.stderr, (5.0f64 / 3.0 / 4.0).sqrt(), max_relative = 1e-15);
        let constant = mean_error(&[0.1; 1000]);
        assert_eq!((constant.mean, constant.stderr), (0.1, 0.0));
    }

    #[test]
    fn ratio_of_proportional_samples_has_no_error() {
        let x = [1.0, 2.0, 4.0, 0.5];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let r = ratio_error(&y, &x);
        assert_eq!(r.mean, 3.0);
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn ks_statistic_and_survival() {
        let a: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let (d, p) = ks_two_sample(&a, &a);
        assert_eq!(d, 0.0);
        assert_eq!(p, 1.0);
        let b: Vec<f64> = (0..100).map(|k| k as f64 + 1000.0).collect();
        let (d, p) = ks_two_sample(&a, &b);
        assert_eq!(d, 1.0);
        assert!(p < 1e-20);
        // Q(1) tabulated value
        assert_relative_eq!(kolmogorov_survival(1.0), 0.26999967, max_relative = 1e-6);
    }

    #[test]
    fn effective_sample_size_of_equal_weights() {
        assert_relative_eq!(effective_sample_size(&[2.0; 50]), 50.0, max_relative = 1e-14);
    }
}
