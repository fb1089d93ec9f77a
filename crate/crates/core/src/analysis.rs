//! Parity-fringe fitting, SPAM correction and fidelity assembly.

use crate::error::{Error, Result};
use crate::optim::{hessian, invert, least_squares, nelder_mead_restarts};
use crate::shots::ShotTable;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Even-parity counts at one analysis phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityPoint {
    pub phase: f64,
    pub even: u64,
    pub total: u64,
}

impl ParityPoint {
    pub fn parity(&self) -> f64 {
        2.0 * self.even as f64 / self.total as f64 - 1.0
    }
}

/// Parity estimate with a Gaussian error bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPoint {
    pub phase: f64,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    MleBeta,
    WlsGaussian,
}

/// Parity model `offset + contrast * sin(frequency * phi + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityFit {
    pub offset: f64,
    pub contrast: f64,
    pub phase: f64,
    pub frequency: f64,
    pub offset_err: f64,
    pub contrast_err: f64,
    pub phase_err: f64,
    pub frequency_err: f64,
    pub method: FitMethod,
    /// Reduced chi-square for WLS fits, deviance per degree of freedom for MLE fits.
    pub fit_quality: f64,
}

impl ParityFit {
    pub fn eval(&self, phi: f64) -> f64 {
        parity_model(&[self.offset, self.contrast, self.phase, self.frequency], phi)
    }
}

fn parity_model(p: &[f64], phi: f64) -> f64 {
    p[0] + p[1] * (p[3] * phi + p[2]).sin()
}

fn wrap(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Linear least squares at a fixed frequency: offset, contrast and phase.
fn linear_start(phases: &[f64], values: &[f64], weights: &[f64], freq: f64) -> Result<[f64; 4]> {
    let design: Vec<Vec<f64>> = phases
        .iter()
        .zip(weights)
        .map(|(&x, &w)| vec![w, w * (freq * x).sin(), w * (freq * x).cos()])
        .collect();
    let y: Vec<f64> = values.iter().zip(weights).map(|(v, w)| v * w).collect();
    let b = least_squares(&design, &y).ok_or_else(|| Error::FitFailed("singular design".into()))?;
    Ok([b[0], b[1].hypot(b[2]), b[2].atan2(b[1]), freq])
}

fn finish(
    cost: &(dyn Fn(&[f64]) -> f64 + Sync),
    start: [f64; 4],
    method: FitMethod,
    dof: usize,
    quality: impl Fn(&[f64]) -> f64,
) -> Result<ParityFit> {
    let step = [0.05, 0.05, 0.2, 0.01 * start[3].abs().max(1e-3)];
    let m = nelder_mead_restarts(cost, &start, &step, 4000, 4)?;
    let mut x = m.x.clone();
    if x[1] < 0.0 {
        x[1] = -x[1];
        x[2] += PI;
    }
    x[2] = wrap(x[2]);
    let h = hessian(&|p: &[f64]| cost(p), &x)?;
    let cov = invert(&h).ok_or_else(|| Error::FitFailed(format!("singular information matrix at {:?}", x)))?;
    let err = |i: usize| cov[i][i].max(0.0).sqrt();
    Ok(ParityFit {
        offset: x[0],
        contrast: x[1],
        phase: x[2],
        frequency: x[3],
        offset_err: err(0),
        contrast_err: err(1),
        phase_err: err(2),
        frequency_err: err(3),
        method,
        fit_quality: quality(&x) / dof.max(1) as f64,
    })
}

/// Maximum-likelihood fit of binomial even-parity counts.
///
/// The even-parity probability is `(1 + parity(phi)) / 2`, clipped to the open unit interval.
/// Errors come from the inverse observed information. `freq_guess` is the scan design frequency.
pub fn mle_parity_fit(data: &[ParityPoint], freq_guess: f64) -> Result<ParityFit> {
    if data.len() < 8 {
        return Err(Error::InvalidParameter(format!("MLE fit needs at least 8 phase points, got {}", data.len())));
    }
    if data.iter().any(|d| d.total < 10 || d.even > d.total) {
        return Err(Error::InvalidParameter("each point needs at least 10 shots".into()));
    }
    let phases: Vec<f64> = data.iter().map(|d| d.phase).collect();
    let values: Vec<f64> = data.iter().map(|d| d.parity()).collect();
    let start = linear_start(&phases, &values, &vec![1.0; data.len()], freq_guess)?;
    let nll = |p: &[f64]| -> f64 {
        data.iter()
            .map(|d| {
                let q = ((1.0 + parity_model(p, d.phase)) / 2.0).clamp(1e-12, 1.0 - 1e-12);
                -(d.even as f64 * q.ln() + (d.total - d.even) as f64 * (1.0 - q).ln())
            })
            .sum()
    };
    // deviance against the saturated model
    let deviance = |p: &[f64]| -> f64 {
        2.0 * data
            .iter()
            .map(|d| {
                let q = ((1.0 + parity_model(p, d.phase)) / 2.0).clamp(1e-12, 1.0 - 1e-12);
                let f = d.even as f64 / d.total as f64;
                let n = d.total as f64;
                let term = |obs: f64, model: f64| if obs > 0.0 { obs * (obs / model).ln() } else { 0.0 };
                n * (term(f, q) + term(1.0 - f, 1.0 - q))
            })
            .sum::<f64>()
    };
    finish(&nll, start, FitMethod::MleBeta, data.len().saturating_sub(4), deviance)
}

/// Weighted least-squares fit with Gaussian errors.
pub fn wls_fit(points: &[GaussianPoint], freq_guess: f64) -> Result<ParityFit> {
    if points.len() < 5 {
        return Err(Error::InvalidParameter("WLS fit needs at least 5 points".into()));
    }
    if points.iter().any(|p| !(p.sigma > 0.0)) {
        return Err(Error::InvalidParameter("WLS sigmas must be positive".into()));
    }
    let phases: Vec<f64> = points.iter().map(|d| d.phase).collect();
    let values: Vec<f64> = points.iter().map(|d| d.value).collect();
    let w: Vec<f64> = points.iter().map(|d| 1.0 / d.sigma).collect();
    let start = linear_start(&phases, &values, &w, freq_guess)?;
    let half_chi2 =
        |p: &[f64]| -> f64 { points.iter().map(|d| ((d.value - parity_model(p, d.phase)) / d.sigma).powi(2)).sum::<f64>() / 2.0 };
    finish(&half_chi2, start, FitMethod::WlsGaussian, points.len().saturating_sub(4), |p| 2.0 * half_chi2(p))
}

/// Gaussian view of binomial parity data: value `2k/n - 1` with the binomial
/// standard error at the observed frequency, kept at least half a count from 0 and 1.
pub fn gaussian_points(data: &[ParityPoint]) -> Vec<GaussianPoint> {
    data.iter()
        .map(|d| {
            let n = d.total as f64;
            let q = (d.even as f64 / n).clamp(0.5 / n, 1.0 - 0.5 / n);
            GaussianPoint { phase: d.phase, value: d.parity(), sigma: 2.0 * (q * (1.0 - q) / n).sqrt() }
        })
        .collect()
}

/// Even-parity counts of `atoms` for each (phase, table) pair, optionally after a row mask.
pub fn parity_points(scan: &[(f64, ShotTable)], atoms: &[usize]) -> Vec<ParityPoint> {
    scan.iter()
        .map(|(phase, tab)| {
            let (even, total) = tab.even_parity_counts(atoms);
            ParityPoint { phase: *phase, even: even as u64, total: total as u64 }
        })
        .collect()
}

/// Collective phase from a cosine/sine quadrature pair.
pub fn phase_from_quadratures(x: f64, y: f64) -> f64 {
    y.atan2(x)
}

/// Imaging and push-out parameters of the readout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpamModel {
    pub f0: f64,
    pub f1: f64,
    pub b: f64,
    pub eps_l: f64,
    pub eps_d: f64,
}

impl SpamModel {
    pub fn ideal() -> Self {
        SpamModel { f0: 1.0, f1: 1.0, b: 1.0, eps_l: 0.0, eps_d: 0.0 }
    }

    /// Values reported for the apparatus.
    pub fn apparatus() -> Self {
        SpamModel { f0: 0.99997, f1: 0.99995, b: 0.9989, eps_l: 0.0027, eps_d: 0.0037 }
    }

    pub fn validate(&self) -> Result<()> {
        for (n, v) in [("f0", self.f0), ("f1", self.f1), ("b", self.b), ("eps_l", self.eps_l), ("eps_d", self.eps_d)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{n} = {v} outside [0, 1]")));
            }
        }
        if self.f0 + self.f1 <= 1.0 || self.b == 0.0 {
            return Err(Error::SingularSpam);
        }
        Ok(())
    }

    pub fn a(&self) -> f64 {
        1.0 / (self.b * (self.f0 + self.f1 - 1.0))
    }

    pub fn c(&self) -> f64 {
        1.0 - self.f1 * self.a()
    }

    /// Per-atom correction matrix mapping raw to corrected populations of (|0>, |1>).
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let (a, c) = (self.a(), self.c());
        [[1.0 - c, 1.0 - a - c], [c, a + c]]
    }

    /// Inverse of [`matrix`](Self::matrix): the readout confusion from true to raw populations.
    pub fn confusion(&self) -> [[f64; 2]; 2] {
        let m = self.matrix();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
    }
}

/// Apply a 2x2 matrix to every atom of a bitstring distribution (atom 0 most significant).
fn apply_kron(m: &[[f64; 2]; 2], p: &[f64]) -> Result<Vec<f64>> {
    let n = p.len().trailing_zeros() as usize;
    if p.len() != 1 << n {
        return Err(Error::DimensionMismatch { expected: 1 << n, got: p.len() });
    }
    let mut v = p.to_vec();
    for atom in 0..n {
        let s = 1 << (n - 1 - atom);
        for i in 0..v.len() {
            if i & s == 0 {
                let (x0, x1) = (v[i], v[i | s]);
                v[i] = m[0][0] * x0 + m[0][1] * x1;
                v[i | s] = m[1][0] * x0 + m[1][1] * x1;
            }
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectedProbabilities {
    pub probs: Vec<f64>,
    /// Values before clipping negatives.
    pub unclipped: Vec<f64>,
    pub clipped: bool,
}

/// Readout correction with the Kronecker power of the per-atom matrix.
pub fn measurement_correct(raw: &[f64], spam: &SpamModel) -> Result<CorrectedProbabilities> {
    spam.validate()?;
    let total: f64 = raw.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("probabilities sum to {total}")));
    }
    let unclipped = apply_kron(&spam.matrix(), raw)?;
    let clipped = unclipped.iter().any(|&x| x < 0.0);
    let mut probs: Vec<f64> = unclipped.iter().map(|&x| x.max(0.0)).collect();
    let s: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|x| *x /= s);
    Ok(CorrectedProbabilities { probs, unclipped, clipped })
}

/// Raw distribution a perfect-state distribution `true_probs` would show under `spam`.
pub fn measurement_forward(true_probs: &[f64], spam: &SpamModel) -> Result<Vec<f64>> {
    spam.validate()?;
    apply_kron(&spam.confusion(), true_probs)
}

/// Readout-corrected parity contrast of an `n`-atom parity signal.
pub fn correct_parity_contrast(contrast: f64, n: usize, spam: &SpamModel) -> f64 {
    contrast * spam.a().powi(n as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepCorrected {
    pub p00: f64,
    pub p11: f64,
    pub contrast: f64,
    /// Some corrected value fell outside [0, 1].
    pub out_of_range: bool,
}

/// First-order inversion of loss and decay during Bell-pair preparation.
pub fn state_prep_correct(p00: f64, p11: f64, contrast: f64, spam: &SpamModel) -> Result<PrepCorrected> {
    if spam.eps_l >= 0.05 || spam.eps_d >= 0.05 || spam.eps_l < 0.0 || spam.eps_d < 0.0 {
        return Err(Error::InvalidParameter("preparation errors must be below 0.05".into()));
    }
    let (el, ed) = (spam.eps_l, spam.eps_d);
    let k = 1.0 - 2.0 * el - 2.0 * ed;
    let cos2 = (PI / 8.0).cos().powi(2);
    let c00 = (p00 - 0.5 * ed - cos2 * 2.0 * el) / k;
    let c11 = (p11 - 0.5 * ed) / k;
    let cc = (contrast + ed) / k;
    let out_of_range = [c00, c11, cc].iter().any(|x| !(0.0..=1.0).contains(x));
    Ok(PrepCorrected { p00: c00, p11: c11, contrast: cc, out_of_range })
}

/// Forward first-order model of the preparation errors (inverse of [`state_prep_correct`]).
pub fn state_prep_forward(p00: f64, p11: f64, contrast: f64, spam: &SpamModel) -> (f64, f64, f64) {
    let (el, ed) = (spam.eps_l, spam.eps_d);
    let k = 1.0 - 2.0 * el - 2.0 * ed;
    let cos2 = (PI / 8.0).cos().powi(2);
    (k * p00 + 0.5 * ed + cos2 * 2.0 * el, k * p11 + 0.5 * ed, k * contrast - ed)
}

pub fn bell_fidelity(p00: f64, p11: f64, contrast: f64) -> f64 {
    (p00 + p11 + contrast) / 2.0
}

pub fn ghz_fidelity(overlap_population: f64, contrast: f64) -> f64 {
    (overlap_population + contrast) / 2.0
}

/// Population overlap implied by a GHZ fidelity and contrast.
pub fn ghz_overlap(fidelity: f64, contrast: f64) -> f64 {
    2.0 * fidelity - contrast
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spam_constants() {
        let s = SpamModel::apparatus();
        assert_eq!(format!("{:.4}", s.a()), "1.0012");
        assert_eq!(format!("{:.4}", s.c()), "-0.0011");
        let m = SpamModel::ideal().matrix();
        assert_eq!(m, [[1.0, 0.0], [0.0, 1.0]]);
        for col in 0..2 {
            let m = s.matrix();
            assert!((m[0][col] + m[1][col] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn kron_round_trip() {
        let s = SpamModel::apparatus();
        let p = [0.4, 0.1, 0.05, 0.45];
        let raw = measurement_forward(&p, &s).unwrap();
        let back = measurement_correct(&raw, &s).unwrap();
        for (a, b) in p.iter().zip(&back.probs) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(!back.clipped);
    }

    #[test]
    fn exact_sine_recovered_by_wls() {
        let pts: Vec<GaussianPoint> = (0..16)
            .map(|i| {
                let x = i as f64 * 0.4;
                GaussianPoint { phase: x, value: 0.05 + 0.8 * (2.0 * x + 0.3).sin(), sigma: 0.02 }
            })
            .collect();
        let f = wls_fit(&pts, 1.95).unwrap();
        assert!((f.contrast - 0.8).abs() < 1e-6 && (f.frequency - 2.0).abs() < 1e-6 && (f.phase - 0.3).abs() < 1e-5);
        assert!((f.offset - 0.05).abs() < 1e-6);
    }
}
