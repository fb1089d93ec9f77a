//! Bayesian phase estimation with cascades of GHZ states read out in two
//! quadratures, compared against the same number of uncorrelated atoms.

use crate::error::{Error, Result};
use crate::rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Rounded `16/pi^2 ln N`, at least 1.
pub fn copies_required(n_atoms: usize) -> Result<usize> {
    if n_atoms == 0 {
        return Err(Error::InvalidParameter("need at least one atom".into()));
    }
    let n0 = (16.0 / (PI * PI) * (n_atoms as f64).ln()).round();
    Ok((n0 as usize).max(1))
}

/// Large-N approximation `pi^2 N / (64 ln N)`, for reporting.
pub fn asymptotic_gain(n_atoms: usize) -> f64 {
    let n = n_atoms as f64;
    PI * PI * n / (64.0 * n.ln())
}

/// GHZ sizes with copies per size and the number read out in the cosine quadrature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CascadeLayout {
    pub sizes: Vec<usize>,
    pub copies: Vec<usize>,
    pub x_copies: Vec<usize>,
}

impl CascadeLayout {
    /// Sizes `1, 2, .., 2^(m-1)` with `n0` copies each.
    pub fn uniform(m: usize, n0: usize) -> Result<Self> {
        Self::new((0..m).map(|j| 1 << j).collect(), vec![n0; m])
    }

    /// Copies split as evenly as possible, the extra one read in X.
    pub fn new(sizes: Vec<usize>, copies: Vec<usize>) -> Result<Self> {
        let x = copies.iter().map(|&n| n.div_ceil(2)).collect();
        Self::with_split(sizes, copies, x)
    }

    pub fn with_split(sizes: Vec<usize>, copies: Vec<usize>, x_copies: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.len() != copies.len() || sizes.len() != x_copies.len() {
            return Err(Error::InvalidParameter("layout lists must be non-empty and of equal length".into()));
        }
        if sizes.iter().any(|&k| k == 0) || copies.iter().all(|&n| n == 0) {
            return Err(Error::InvalidParameter("empty layout".into()));
        }
        if x_copies.iter().zip(&copies).any(|(x, n)| x > n) {
            return Err(Error::InvalidParameter("more X copies than copies".into()));
        }
        Ok(CascadeLayout { sizes, copies, x_copies })
    }

    pub fn total_atoms(&self) -> usize {
        self.sizes.iter().zip(&self.copies).map(|(k, n)| k * n).sum()
    }

    pub fn max_size(&self) -> usize {
        *self.sizes.iter().max().expect("non-empty")
    }

    pub fn y_copies(&self, j: usize) -> usize {
        self.copies[j] - self.x_copies[j]
    }

    /// Exchange the X and Y assignments.
    pub fn swapped(&self) -> Self {
        let x = (0..self.sizes.len()).map(|j| self.y_copies(j)).collect();
        CascadeLayout { x_copies: x, ..self.clone() }
    }

    /// `N` uncorrelated atoms with the same even split.
    pub fn uncorrelated(&self) -> Self {
        CascadeLayout::new(vec![1], vec![self.total_atoms()]).expect("non-empty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContrastModel {
    Perfect,
    /// One contrast per entry of `CascadeLayout::sizes`.
    PerSize { values: Vec<f64> },
    /// `C(K) = F0^K`.
    PerQubitFidelity { f0: f64 },
}

impl ContrastModel {
    pub fn contrast(&self, j: usize, k: usize) -> f64 {
        match self {
            ContrastModel::Perfect => 1.0,
            ContrastModel::PerSize { values } => values[j],
            ContrastModel::PerQubitFidelity { f0 } => f0.powi(k as i32),
        }
    }

    fn validate(&self, layout: &CascadeLayout) -> Result<()> {
        let ok = match self {
            ContrastModel::Perfect => true,
            ContrastModel::PerSize { values } => {
                values.len() == layout.sizes.len() && values.iter().all(|c| (0.0..=1.0).contains(c))
            }
            ContrastModel::PerQubitFidelity { f0 } => (0.0..=1.0).contains(f0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid contrast model {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    /// Gaussian truncated to [-pi, pi] and renormalized.
    #[default]
    Truncated,
    /// Gaussian wrapped onto [-pi, pi).
    Wrapped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainProblem {
    pub layout: CascadeLayout,
    pub contrast: ContrastModel,
    pub prior_width: f64,
    #[serde(default)]
    pub prior_mode: PriorMode,
    /// Grid points; chosen from the largest size when absent.
    #[serde(default)]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainResult {
    pub n_atoms: usize,
    pub mse_correlated: f64,
    pub mse_uncorrelated: f64,
    pub gain: f64,
    pub gain_db: f64,
    /// Posterior RMS over prior width.
    pub figure_of_merit: f64,
    pub grid: usize,
    pub asymptotic_gain: f64,
}

/// Binomial readout of one (size, quadrature) group, tabulated on the grid.
struct Factor {
    /// `pmf[k][g]`: probability of `k` even outcomes at grid point `g`.
    pmf: Vec<Vec<f64>>,
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for i in 1..=n {
        t[i] = t[i - 1] + (i as f64).ln();
    }
    t
}

fn binomial_pmf(m: usize, p: f64, lf: &[f64]) -> Vec<f64> {
    (0..=m)
        .map(|k| {
            let (a, b) = (k as f64, (m - k) as f64);
            if (p == 0.0 && k > 0) || (p == 1.0 && k < m) {
                return 0.0;
            }
            let lp = if k == 0 { 0.0 } else { a * p.ln() };
            let lq = if k == m { 0.0 } else { b * (1.0 - p).ln() };
            (lf[m] - lf[k] - lf[m - k] + lp + lq).exp()
        })
        .collect()
}

/// Probability of an even outcome for a size-`k` copy read out in X or Y.
pub fn even_probability(k: usize, contrast: f64, phi: f64, y: bool) -> f64 {
    let s = if y { (k as f64 * phi).sin() } else { (k as f64 * phi).cos() };
    ((1.0 + contrast * s) / 2.0).clamp(0.0, 1.0)
}

struct Grid {
    phi: Vec<f64>,
    /// Prior times quadrature weight, normalized.
    prior: Vec<f64>,
}

impl GainProblem {
    pub fn new(layout: CascadeLayout, contrast: ContrastModel, prior_width: f64) -> Self {
        GainProblem { layout, contrast, prior_width, prior_mode: PriorMode::Truncated, grid: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prior_width > 0.0) {
            return Err(Error::InvalidParameter("prior width must be positive".into()));
        }
        self.contrast.validate(&self.layout)
    }

    fn half_span(&self) -> f64 {
        // the truncated prior carries no mass beyond ten widths
        match self.prior_mode {
            PriorMode::Truncated => (10.0 * self.prior_width).min(PI),
            PriorMode::Wrapped => PI,
        }
    }

    fn default_grid(&self) -> usize {
        let span = 2.0 * self.half_span();
        let per_period = 64.0 * span * self.layout.max_size() as f64 / (2.0 * PI);
        (per_period.ceil() as usize).max(256)
    }

    fn grid(&self, n: usize) -> Result<Grid> {
        let h = self.half_span();
        let periods = 2.0 * h * self.layout.max_size() as f64 / (2.0 * PI);
        if (n as f64) < 40.0 * periods {
            return Err(Error::InvalidParameter(format!("{n} grid points resolve fewer than 40 per fringe period")));
        }
        let d = 2.0 * h / n as f64;
        let phi: Vec<f64> = (0..n).map(|i| -h + (i as f64 + 0.5) * d).collect();
        let s2 = 2.0 * self.prior_width * self.prior_width;
        let mut prior: Vec<f64> = phi
            .iter()
            .map(|&p| match self.prior_mode {
                PriorMode::Truncated => (-p * p / s2).exp(),
                PriorMode::Wrapped => (-12..=12).map(|w| (-(p + 2.0 * PI * w as f64).powi(2) / s2).exp()).sum(),
            })
            .collect();
        let z: f64 = prior.iter().sum();
        prior.iter_mut().for_each(|p| *p /= z);
        Ok(Grid { phi, prior })
    }

    fn factors(&self, layout: &CascadeLayout, contrast: &dyn Fn(usize, usize) -> f64, g: &Grid) -> Vec<Factor> {
        let max = layout.copies.iter().max().copied().unwrap_or(0);
        let lf = ln_factorials(max);
        let mut out = Vec::new();
        for j in 0..layout.sizes.len() {
            let k = layout.sizes[j];
            let c = contrast(j, k);
            for (m, y) in [(layout.x_copies[j], false), (layout.y_copies(j), true)] {
                if m == 0 {
                    continue;
                }
                let cols: Vec<Vec<f64>> = g.phi.iter().map(|&p| binomial_pmf(m, even_probability(k, c, p, y), &lf)).collect();
                let pmf = (0..=m).map(|o| cols.iter().map(|col| col[o]).collect()).collect();
                out.push(Factor { pmf });
            }
        }
        out
    }

    /// Likelihood of a joint outcome: even counts per (size, quadrature) group in
    /// layout order, skipping empty groups.
    pub fn outcome_likelihood(&self, outcome: &[usize], phi: f64) -> Result<f64> {
        let l = &self.layout;
        let lf = ln_factorials(l.copies.iter().max().copied().unwrap_or(0));
        let mut idx = 0;
        let mut p = 1.0;
        for j in 0..l.sizes.len() {
            let c = self.contrast.contrast(j, l.sizes[j]);
            for (m, y) in [(l.x_copies[j], false), (l.y_copies(j), true)] {
                if m == 0 {
                    continue;
                }
                let k = *outcome.get(idx).ok_or_else(|| Error::InvalidParameter("outcome too short".into()))?;
                if k > m {
                    return Err(Error::InvalidParameter(format!("{k} even outcomes from {m} copies")));
                }
                p *= binomial_pmf(m, even_probability(l.sizes[j], c, phi, y), &lf)[k];
                idx += 1;
            }
        }
        if idx != outcome.len() {
            return Err(Error::InvalidParameter("outcome too long".into()));
        }
        Ok(p)
    }

    /// Posterior mean and variance for one joint outcome.
    pub fn posterior_stats(&self, outcome: &[usize]) -> Result<(f64, f64)> {
        self.validate()?;
        let g = self.grid(self.grid.unwrap_or_else(|| self.default_grid()))?;
        let mut z = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (&p, &w0) in g.phi.iter().zip(&g.prior) {
            let w = w0 * self.outcome_likelihood(outcome, p)?;
            z += w;
            m1 += w * p;
            m2 += w * p * p;
        }
        if z <= 0.0 {
            return Err(Error::InvalidParameter("outcome has zero probability".into()));
        }
        let mean = m1 / z;
        Ok((mean, m2 / z - mean * mean))
    }

    /// Bayesian mean-square error of the posterior-mean estimator, by exact
    /// enumeration of all outcomes.
    fn mse_on(&self, layout: &CascadeLayout, contrast: &(dyn Fn(usize, usize) -> f64 + Sync), n: usize) -> Result<f64> {
        let g = self.grid(n)?;
        let factors = self.factors(layout, contrast, &g);
        let second: f64 = g.phi.iter().zip(&g.prior).map(|(p, w)| w * p * p).sum();
        if factors.is_empty() {
            let m1: f64 = g.phi.iter().zip(&g.prior).map(|(p, w)| w * p).sum();
            return Ok(second - m1 * m1);
        }
        let first = &factors[0];
        let rest = &factors[1..];
        let parts = rng::par_map(first.pmf.len(), |k| {
            let w: Vec<f64> = g.prior.iter().zip(&first.pmf[k]).map(|(a, b)| a * b).collect();
            let mut acc = 0.0;
            explained(rest, &g.phi, &w, &mut acc);
            acc
        });
        Ok(second - parts.iter().sum::<f64>())
    }

    fn contrast_fn(&self) -> impl Fn(usize, usize) -> f64 + Sync + '_ {
        move |j, k| self.contrast.contrast(j, k)
    }

    fn baseline_contrast(&self) -> f64 {
        match &self.contrast {
            ContrastModel::PerSize { values } => self.layout.sizes.iter().position(|&k| k == 1).map_or(1.0, |j| values[j]),
            c => c.contrast(0, 1),
        }
    }

    fn evaluate(&self, n: usize) -> Result<(f64, f64)> {
        let c = self.mse_on(&self.layout, &self.contrast_fn(), n)?;
        let c1 = self.baseline_contrast();
        let u = self.mse_on(&self.layout.uncorrelated(), &move |_, _| c1, n)?;
        Ok((c, u))
    }

    /// Posterior-variance ratio of uncorrelated atoms over the cascade.
    ///
    /// The result is checked against a doubled grid.
    pub fn estimate_gain(&self) -> Result<GainResult> {
        self.validate()?;
        let n = self.grid.unwrap_or_else(|| self.default_grid());
        let (c, u) = self.evaluate(n)?;
        let (c2, u2) = self.evaluate(2 * n)?;
        let (g1, g2) = (u / c, u2 / c2);
        if ((g2 - g1) / g2).abs() > 5e-3 {
            return Err(Error::GridTooCoarse(g1, g2));
        }
        let n_atoms = self.layout.total_atoms();
        Ok(GainResult {
            n_atoms,
            mse_correlated: c2,
            mse_uncorrelated: u2,
            gain: g2,
            gain_db: 10.0 * g2.log10(),
            figure_of_merit: c2.sqrt() / self.prior_width,
            grid: 2 * n,
            asymptotic_gain: asymptotic_gain(n_atoms),
        })
    }

    /// Single-grid gain without the doubling check, for inner loops.
    pub fn gain_fast(&self) -> Result<f64> {
        self.validate()?;
        let (c, u) = self.evaluate(self.grid.unwrap_or_else(|| self.default_grid()))?;
        Ok(u / c)
    }

    /// Monte Carlo estimate of the cascade's Bayesian MSE with its standard error.
    pub fn monte_carlo_mse(&self, samples: usize, seed: u64) -> Result<(f64, f64)> {
        self.validate()?;
        let g = self.grid(self.grid.unwrap_or_else(|| self.default_grid()))?;
        let cf = self.contrast_fn();
        let factors = self.factors(&self.layout, &cf, &g);
        let groups: Vec<(usize, f64, usize, bool)> = (0..self.layout.sizes.len())
            .flat_map(|j| {
                let k = self.layout.sizes[j];
                let c = self.contrast.contrast(j, k);
                [(k, c, self.layout.x_copies[j], false), (k, c, self.layout.y_copies(j), true)]
            })
            .filter(|t| t.2 > 0)
            .collect();
        let normal = Normal::new(0.0, self.prior_width).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let errs = rng::par_map(samples, |i| {
            let mut r = rng::stream(seed, i as u64);
            let phi = match self.prior_mode {
                PriorMode::Truncated => loop {
                    let x: f64 = normal.sample(&mut r);
                    if x.abs() <= PI {
                        break x;
                    }
                },
                PriorMode::Wrapped => {
                    let x: f64 = normal.sample(&mut r);
                    (x + PI).rem_euclid(2.0 * PI) - PI
                }
            };
            let mut w = g.prior.clone();
            for (f, &(k, c, m, y)) in factors.iter().zip(&groups) {
                let p = even_probability(k, c, phi, y);
                let o = if p <= 0.0 {
                    0
                } else if p >= 1.0 {
                    m
                } else {
                    Binomial::new(m as u64, p).expect("valid binomial").sample(&mut r) as usize
                };
                w.iter_mut().zip(&f.pmf[o]).for_each(|(a, b)| *a *= b);
            }
            let z: f64 = w.iter().sum();
            let est = w.iter().zip(&g.phi).map(|(a, b)| a * b).sum::<f64>() / z;
            (est - phi).powi(2)
        });
        let n = errs.len() as f64;
        let mean = errs.iter().sum::<f64>() / n;
        let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok((mean, (var / n).sqrt()))
    }

    /// Cascade MSE by exact enumeration on the problem grid.
    pub fn exact_mse(&self) -> Result<f64> {
        self.validate()?;
        self.mse_on(&self.layout, &self.contrast_fn(), self.grid.unwrap_or_else(|| self.default_grid()))
    }
}

/// Accumulate `sum over outcomes of (int w phi)^2 / int w`.
fn explained(rest: &[Factor], phi: &[f64], w: &[f64], acc: &mut f64) {
    match rest.split_first() {
        None => {
            let z: f64 = w.iter().sum();
            if z > 1e-300 {
                let m1: f64 = w.iter().zip(phi).map(|(a, b)| a * b).sum();
                *acc += m1 * m1 / z;
            }
        }
        Some((f, tail)) => {
            let mut next = vec![0.0; w.len()];
            for row in &f.pmf {
                let mut any = false;
                for ((n, a), b) in next.iter_mut().zip(w).zip(row) {
                    *n = a * b;
                    any |= *n > 0.0;
                }
                if any {
                    explained(tail, phi, &next, acc);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Knob {
    /// Contrast of the size at this layout index, others unchanged.
    Contrast { index: usize },
    /// Per-qubit fidelity with `C(K) = F0^K`.
    Fidelity,
}

fn with_knob(problem: &GainProblem, knob: Knob, x: f64) -> Result<GainProblem> {
    let mut p = problem.clone();
    p.contrast = match knob {
        Knob::Fidelity => ContrastModel::PerQubitFidelity { f0: x },
        Knob::Contrast { index } => {
            let mut v: Vec<f64> =
                (0..p.layout.sizes.len()).map(|j| problem.contrast.contrast(j, p.layout.sizes[j])).collect();
            *v.get_mut(index).ok_or_else(|| Error::InvalidParameter(format!("no size at index {index}")))? = x;
            ContrastModel::PerSize { values: v }
        }
    };
    Ok(p)
}

/// Gain at a knob value.
pub fn gain_at(problem: &GainProblem, knob: Knob, x: f64) -> Result<f64> {
    with_knob(problem, knob, x)?.gain_fast()
}

/// Knob value where the gain crosses 1, by bisection to within `1e-3`.
pub fn threshold_search(problem: &GainProblem, knob: Knob, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::InvalidParameter("empty bracket".into()));
    }
    let probe: Vec<f64> = (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect();
    let g: Vec<f64> = probe.iter().map(|&x| gain_at(problem, knob, x)).collect::<Result<_>>()?;
    let monotone = g.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    if !monotone || g[0] > 1.0 || g[4] < 1.0 {
        return Err(Error::NonMonotone(g[0], g[4]));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > 2e-4 {
        let m = (a + b) / 2.0;
        if gain_at(problem, knob, m)? < 1.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((a + b) / 2.0)
}

/// Gain against per-qubit fidelity for cascades up to `2^(m-1)` atoms.
pub fn gain_vs_fidelity(m: usize, n0: usize, prior_width: f64, f0: &[f64]) -> Result<Vec<(f64, f64)>> {
    let layout = CascadeLayout::uniform(m, n0)?;
    f0.iter()
        .map(|&f| {
            let p = GainProblem::new(layout.clone(), ContrastModel::PerQubitFidelity { f0: f }, prior_width);
            Ok((f, p.gain_fast()?))
        })
        .collect()
}
