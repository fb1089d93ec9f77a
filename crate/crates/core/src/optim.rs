//! Thin wrappers over argmin and finitediff for the fits and pulse searches.

use crate::error::{Error, Result};
use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::DMatrix;

struct Objective<'a> {
    f: &'a (dyn Fn(&[f64]) -> f64 + Sync),
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let v = (self.f)(p);
        Ok(if v.is_finite() { v } else { f64::MAX })
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: u64,
}

/// Nelder-Mead from `x0` with an axis-aligned initial simplex of size `step`.
pub fn nelder_mead(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    x0: &[f64],
    step: &[f64],
    max_iters: u64,
    sd_tol: f64,
) -> Result<Minimum> {
    let mut simplex = vec![x0.to_vec()];
    for (i, s) in step.iter().enumerate() {
        let mut v = x0.to_vec();
        v[i] += s;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(sd_tol)
        .map_err(|e| Error::FitFailed(e.to_string()))?;
    let res = Executor::new(Objective { f }, solver)
        .configure(|s| s.max_iters(max_iters))
        .run()
        .map_err(|e| Error::FitFailed(e.to_string()))?;
    let state = res.state();
    let x = state.get_best_param().cloned().ok_or_else(|| Error::FitFailed("no parameters".into()))?;
    Ok(Minimum { value: state.get_best_cost(), x, iterations: state.get_iter() })
}

/// Restarted Nelder-Mead: rebuild the simplex at the incumbent until the value stalls.
pub fn nelder_mead_restarts(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    x0: &[f64],
    step: &[f64],
    max_iters: u64,
    restarts: usize,
) -> Result<Minimum> {
    let mut best = nelder_mead(f, x0, step, max_iters, 1e-14)?;
    for _ in 0..restarts {
        let next = nelder_mead(f, &best.x, step, max_iters, 1e-14)?;
        let improved = next.value < best.value - 1e-15 * best.value.abs().max(1e-300);
        if next.value <= best.value {
            best = next;
        }
        if !improved {
            break;
        }
    }
    Ok(best)
}

/// Central-difference Hessian of `f` at `x`.
pub fn hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let cost = |p: &Vec<f64>| -> anyhow::Result<f64> { Ok(f(p)) };
    let grad = finitediff::vec::central_diff(&cost);
    let grad_fn = |p: &Vec<f64>| grad(p);
    let h = finitediff::vec::central_hessian(&grad_fn);
    h(&x.to_vec()).map_err(|e| Error::FitFailed(e.to_string()))
}

pub fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let dm = DMatrix::from_fn(n, n, |r, c| m[r][c]);
    let inv = dm.try_inverse()?;
    Some((0..n).map(|r| (0..n).map(|c| inv[(r, c)]).collect()).collect())
}

/// Ordinary least squares for y = X b; returns coefficients.
pub fn least_squares(design: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let rows = design.len();
    let cols = design.first()?.len();
    let x = DMatrix::from_fn(rows, cols, |r, c| design[r][c]);
    let yv = nalgebra::DVector::from_column_slice(y);
    let sol = x.svd(true, true).solve(&yv, 1e-14).ok()?;
    Some(sol.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead_restarts(&f, &[-1.2, 1.0], &[0.5, 0.5], 5000, 3).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn quadratic_hessian() {
        let f = |x: &[f64]| 3.0 * x[0] * x[0] + 2.0 * x[0] * x[1] + 5.0 * x[1] * x[1];
        let h = hessian(&f, &[0.3, -0.2]).unwrap();
        assert!((h[0][0] - 6.0).abs() < 1e-5 && (h[0][1] - 2.0).abs() < 1e-5 && (h[1][1] - 10.0).abs() < 1e-5);
        let inv = invert(&h).unwrap();
        assert!((inv[0][0] - 10.0 / 56.0).abs() < 1e-6);
    }
}
