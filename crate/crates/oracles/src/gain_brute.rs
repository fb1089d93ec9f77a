//! Brute-force Bayesian gain for small layouts.
//!
//! Every copy's even/odd outcome is enumerated separately, the posterior mean is
//! a midpoint sum over a uniform grid on [-pi, pi], and the mean squared error
//! is integrated over the prior with the same grid. No binomial grouping.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteLayout {
    pub sizes: Vec<usize>,
    pub copies: Vec<usize>,
    /// Copies of each size read in X; the rest are read in Y.
    pub x_copies: Vec<usize>,
    /// Parity contrast of each size.
    pub contrasts: Vec<f64>,
}

/// One readout: (size, contrast, read in Y).
fn probes(l: &BruteLayout) -> Vec<(usize, f64, bool)> {
    let mut v = Vec::new();
    for j in 0..l.sizes.len() {
        for c in 0..l.copies[j] {
            v.push((l.sizes[j], l.contrasts[j], c >= l.x_copies[j]));
        }
    }
    v
}

fn p_even(k: usize, c: f64, y: bool, phi: f64) -> f64 {
    let a = k as f64 * phi;
    0.5 * (1.0 + c * if y { a.sin() } else { a.cos() })
}

/// Bayesian MSE of the posterior-mean estimator for a Gaussian prior of width
/// `sigma` truncated to [-pi, pi].
pub fn brute_mse(probes: &[(usize, f64, bool)], sigma: f64, grid: usize) -> f64 {
    let h = 2.0 * PI / grid as f64;
    let phi: Vec<f64> = (0..grid).map(|i| -PI + (i as f64 + 0.5) * h).collect();
    let raw: Vec<f64> = phi.iter().map(|p| (-p * p / (2.0 * sigma * sigma)).exp()).collect();
    let z: f64 = raw.iter().sum();
    let prior: Vec<f64> = raw.iter().map(|w| w / z).collect();
    let mut mse = 0.0;
    for outcome in 0u64..(1u64 << probes.len()) {
        let like: Vec<f64> = phi
            .iter()
            .map(|&p| {
                probes
                    .iter()
                    .enumerate()
                    .map(|(i, &(k, c, y))| {
                        let e = p_even(k, c, y, p);
                        if (outcome >> i) & 1 == 1 {
                            e
                        } else {
                            1.0 - e
                        }
                    })
                    .product()
            })
            .collect();
        let norm: f64 = like.iter().zip(&prior).map(|(l, w)| l * w).sum();
        if norm <= 0.0 {
            continue;
        }
        let est = like.iter().zip(&prior).zip(&phi).map(|((l, w), p)| l * w * p).sum::<f64>() / norm;
        mse += like.iter().zip(&prior).zip(&phi).map(|((l, w), p)| l * w * (est - p).powi(2)).sum::<f64>();
    }
    mse
}

/// Gain of the cascade over the same number of unentangled atoms at contrast
/// `baseline_contrast`, split evenly between X and Y with the extra atom in X.
pub fn brute_gain(l: &BruteLayout, baseline_contrast: f64, sigma: f64, grid: usize) -> f64 {
    let n: usize = l.sizes.iter().zip(&l.copies).map(|(s, c)| s * c).sum();
    let base: Vec<(usize, f64, bool)> = (0..n).map(|i| (1, baseline_contrast, i >= n.div_ceil(2))).collect();
    brute_mse(&base, sigma, grid) / brute_mse(&probes(l), sigma, grid)
}
