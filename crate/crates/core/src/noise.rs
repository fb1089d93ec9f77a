//! Clock-laser frequency noise: PSD model, Gaussian trajectory synthesis, and
//! the Ramsey and spin-lock experiments used to characterize it. Also the
//! static Debye-Waller model for thermal motion.

use crate::error::{Error, Result};
use crate::linalg::{su2_step, C64};
use crate::optim;
use crate::rng::{self, Stream};
use rand::Rng;
use rand_distr::{Distribution, Geometric, Normal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

const MAX_SAMPLES: u64 = 1 << 26;

/// One-sided frequency-noise PSD, `S(f) = min(H, h0 + (h_alpha / f)^alpha)` in Hz^2/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockPsd {
    pub h0: f64,
    pub h_alpha: f64,
    pub alpha: f64,
    #[serde(rename = "cap")]
    pub h_cap: f64,
    pub f_min: f64,
    pub f_max: f64,
}

impl ClockPsd {
    pub fn zero() -> Self {
        ClockPsd { h0: 0.0, h_alpha: 0.0, alpha: 1.0, h_cap: 0.0, f_min: 1.0, f_max: 1e6 }
    }

    pub fn white(h0: f64, f_min: f64, f_max: f64) -> Self {
        ClockPsd { h0, h_alpha: 0.0, alpha: 1.0, h_cap: f64::INFINITY, f_min, f_max }
    }

    /// Example parameters for a cavity-stabilized clock laser. Calibration
    /// knobs, not measured values: at 2.1 kHz Rabi frequency the random-axis
    /// pi/2 benchmark gives a per-pulse fidelity near 0.998, and the cascade's
    /// 4-atom GHZ contrast comes out near 0.5.
    pub fn example() -> Self {
        ClockPsd { h0: 3.0, h_alpha: 1414.0, alpha: 2.0, h_cap: 50.0, f_min: 1.0, f_max: 1e4 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.h0 >= 0.0
            && self.h_alpha >= 0.0
            && self.alpha.is_finite()
            && self.h_cap >= 0.0
            && self.f_min > 0.0
            && self.f_max > self.f_min;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid PSD parameters {self:?}")))
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        // (h_alpha/f)^alpha scales by k when h_alpha scales by k^(1/alpha).
        ClockPsd {
            h0: self.h0 * k,
            h_alpha: self.h_alpha * k.powf(1.0 / self.alpha),
            h_cap: self.h_cap * k,
            ..*self
        }
    }

    pub fn eval(&self, f: f64) -> Result<f64> {
        if !(self.f_min..=self.f_max).contains(&f) {
            return Err(Error::OutOfBand { f, f_min: self.f_min, f_max: self.f_max });
        }
        Ok(self.raw(f))
    }

    /// PSD value, zero outside the band.
    pub fn eval_or_zero(&self, f: f64) -> f64 {
        if (self.f_min..=self.f_max).contains(&f) {
            self.raw(f)
        } else {
            0.0
        }
    }

    fn raw(&self, f: f64) -> f64 {
        let power = if self.h_alpha == 0.0 { 0.0 } else { (self.h_alpha / f).powf(self.alpha) };
        (self.h0 + power).min(self.h_cap).max(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.h0 == 0.0 && (self.h_alpha == 0.0 || self.h_cap == 0.0)
    }
}

/// Sampled laser detuning in Hz at a fixed sample rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTrajectory {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
    pub seed: u64,
}

impl FrequencyTrajectory {
    pub fn zeros(sample_rate: f64, n: usize) -> Self {
        FrequencyTrajectory { sample_rate, samples: vec![0.0; n], seed: 0 }
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Detuning at time `t`, held constant across each sample interval.
    pub fn at(&self, t: f64) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let i = ((t * self.sample_rate).floor().max(0.0) as usize).min(self.samples.len() - 1);
        self.samples[i]
    }

    /// Running phase `2 pi * integral of detuning` at each sample boundary.
    pub fn cumulative_phase(&self) -> PhaseTrack {
        let dt = 1.0 / self.sample_rate;
        let mut acc = Vec::with_capacity(self.samples.len() + 1);
        let mut s = 0.0;
        acc.push(0.0);
        for &x in &self.samples {
            s += 2.0 * PI * x * dt;
            acc.push(s);
        }
        PhaseTrack { sample_rate: self.sample_rate, cumulative: acc }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,detuning_hz\n");
        for (i, x) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{:.9e},{:.9e}", i as f64 / self.sample_rate, x);
        }
        out
    }
}

/// Integrated phase of a trajectory with linear interpolation between samples.
#[derive(Debug, Clone)]
pub struct PhaseTrack {
    sample_rate: f64,
    cumulative: Vec<f64>,
}

impl PhaseTrack {
    pub fn zero() -> Self {
        PhaseTrack { sample_rate: 1.0, cumulative: vec![0.0] }
    }

    pub fn at(&self, t: f64) -> f64 {
        let x = (t * self.sample_rate).max(0.0);
        let i = x.floor() as usize;
        let last = self.cumulative.len() - 1;
        if i >= last {
            return self.cumulative[last];
        }
        let w = x - i as f64;
        self.cumulative[i] * (1.0 - w) + self.cumulative[i + 1] * w
    }

    /// Phase accumulated over `[t0, t1]`.
    pub fn between(&self, t0: f64, t1: f64) -> f64 {
        self.at(t1) - self.at(t0)
    }
}

/// Draw a stationary Gaussian trajectory whose ensemble PSD equals `psd`.
pub fn sample_trajectory(psd: &ClockPsd, duration: f64, sample_rate: f64, seed: u64) -> Result<FrequencyTrajectory> {
    let mut r = rng::stream(seed, 0);
    let mut t = synthesize(psd, duration, sample_rate, &mut r)?;
    t.seed = seed;
    Ok(t)
}

/// Spectral synthesis with an externally owned stream.
///
/// The series is generated on a periodic grid padded to at least
/// `sample_rate / f_min` points so the lowest in-band frequencies are
/// represented, then truncated to the requested length.
pub fn synthesize(psd: &ClockPsd, duration: f64, sample_rate: f64, rng: &mut Stream) -> Result<FrequencyTrajectory> {
    if !(duration >= 0.0) || !(sample_rate > 0.0) {
        return Err(Error::InvalidParameter("duration and sample rate must be positive".into()));
    }
    psd.validate()?;
    let n_f = (duration * sample_rate).ceil();
    if n_f > MAX_SAMPLES as f64 {
        return Err(Error::TrajectoryTooLong(n_f as u64));
    }
    let n = (n_f as usize).max(1);
    if psd.is_zero() {
        return Ok(FrequencyTrajectory::zeros(sample_rate, n));
    }
    let span = (sample_rate / psd.f_min).ceil().min(MAX_SAMPLES as f64) as usize;
    let padded = n.max(span).next_power_of_two();
    if padded as u64 > MAX_SAMPLES {
        return Err(Error::TrajectoryTooLong(padded as u64));
    }
    let df = sample_rate / padded as f64;
    let mut buf = vec![C64::new(0.0, 0.0); padded];
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    for k in 1..padded / 2 {
        let s = psd.eval_or_zero(k as f64 * df);
        if s == 0.0 {
            // keep the stream aligned across PSDs with different support
            let _ = (std.sample(rng), std.sample(rng));
            continue;
        }
        let sigma = (s * df).sqrt();
        let a = sigma * std.sample(rng);
        let b = sigma * std.sample(rng);
        buf[k] = C64::new(a / 2.0, -b / 2.0);
        buf[padded - k] = C64::new(a / 2.0, b / 2.0);
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(padded).process(&mut buf);
    let samples = buf[..n].iter().map(|c| c.re).collect();
    Ok(FrequencyTrajectory { sample_rate, samples, seed: 0 })
}

/// One-sided periodogram `2 |DFT|^2 / (N fs)` at bins `1..N/2`.
pub fn periodogram(traj: &FrequencyTrajectory) -> Vec<(f64, f64)> {
    let n = traj.samples.len();
    let mut buf: Vec<C64> = traj.samples.iter().map(|&x| C64::new(x, 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let fs = traj.sample_rate;
    (1..n / 2)
        .map(|k| (k as f64 * fs / n as f64, 2.0 * buf[k].norm_sqr() / (n as f64 * fs)))
        .collect()
}

fn ramsey_sample_rate(psd: &ClockPsd, shortest: f64) -> f64 {
    (2.0 * psd.f_max).min(100.0 / shortest.max(1e-9))
}

/// Ramsey fringe contrast `|<exp(i phi)>|` over `shots` trajectories.
pub fn simulate_ramsey(psd: &ClockPsd, dark_time: f64, shots: usize, seed: u64) -> Result<f64> {
    Ok(ramsey_curve(psd, &[dark_time], shots, seed)?[0])
}

/// Contrast at several dark times, reusing each trajectory for all of them.
pub fn ramsey_curve(psd: &ClockPsd, dark_times: &[f64], shots: usize, seed: u64) -> Result<Vec<f64>> {
    if dark_times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter("dark time must be positive".into()));
    }
    let t_max = dark_times.iter().cloned().fold(0.0, f64::max);
    let t_min = dark_times.iter().cloned().fold(f64::INFINITY, f64::min);
    let fs = ramsey_sample_rate(psd, t_min);
    let per_shot: Vec<Result<Vec<C64>>> = rng::par_map(shots, |i| {
        let mut r = rng::stream(seed, i as u64);
        let track = synthesize(psd, t_max, fs, &mut r)?.cumulative_phase();
        Ok(dark_times.iter().map(|&t| C64::from_polar(1.0, track.at(t))).collect())
    });
    let mut sums = vec![C64::new(0.0, 0.0); dark_times.len()];
    for v in per_shot {
        for (s, x) in sums.iter_mut().zip(v?) {
            *s += x;
        }
    }
    Ok(sums.iter().map(|s| s.norm() / shots.max(1) as f64).collect())
}

/// Dark time where the Ramsey contrast first falls to 1/e, by log-linear
/// interpolation on a geometric grid between `t_lo` and `t_hi`.
pub fn ramsey_coherence_time(psd: &ClockPsd, t_lo: f64, t_hi: f64, points: usize, shots: usize, seed: u64) -> Result<f64> {
    let times: Vec<f64> = (0..points)
        .map(|i| t_lo * (t_hi / t_lo).powf(i as f64 / (points - 1) as f64))
        .collect();
    let c = ramsey_curve(psd, &times, shots, seed)?;
    let target = (-1.0f64).exp();
    for i in 1..points {
        if c[i] <= target && c[i - 1] > target {
            let (l0, l1) = (c[i - 1].ln(), c[i].ln());
            let w = (target.ln() - l0) / (l1 - l0);
            return Ok((times[i - 1].ln() + w * (times[i].ln() - times[i - 1].ln())).exp());
        }
    }
    Err(Error::FitFailed("contrast did not cross 1/e inside the scanned range".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinLockResult {
    pub gamma: f64,
    pub gamma_err: f64,
    pub amplitude: f64,
    /// False when the signal never fell to 1/e inside the window.
    pub decayed: bool,
    pub times: Vec<f64>,
    pub p1: Vec<f64>,
}

/// Spin-lock: prepare +x, drive along x at `rabi` for up to `duration`, map
/// back with a pi/2 pulse and fit `P1 = 1/2 + A exp(-gamma t)` over the first 1/e.
pub fn simulate_spin_lock(psd: &ClockPsd, rabi: f64, duration: f64, shots: usize, seed: u64) -> Result<SpinLockResult> {
    spin_lock_with_rate(psd, rabi, duration, shots, 40.0 * rabi, 200, seed)
}

pub fn spin_lock_with_rate(
    psd: &ClockPsd,
    rabi: f64,
    duration: f64,
    shots: usize,
    sample_rate: f64,
    points: usize,
    seed: u64,
) -> Result<SpinLockResult> {
    if !(rabi > 0.0) || !(duration > 0.0) || points < 3 {
        return Err(Error::InvalidParameter("spin lock needs positive rabi, duration and >= 3 points".into()));
    }
    let dt = 1.0 / sample_rate;
    let n = (duration * sample_rate).ceil() as usize;
    let every = (n / points).max(1);
    let record: Vec<usize> = (0..=n).step_by(every).collect();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let readout = crate::statevec::rotation_matrix(PI / 2.0, PI / 2.0);
    let per_shot: Vec<Result<Vec<f64>>> = rng::par_map(shots, |i| {
        let mut r = rng::stream(seed, i as u64);
        let traj = synthesize(psd, duration, sample_rate, &mut r)?;
        let mut c = [C64::new(h, 0.0), C64::new(h, 0.0)];
        let mut out = Vec::with_capacity(record.len());
        let mut next = 0;
        for step in 0..=n {
            if next < record.len() && record[next] == step {
                let a1 = readout[1][0] * c[0] + readout[1][1] * c[1];
                out.push(a1.norm_sqr());
                next += 1;
            }
            if step == n {
                break;
            }
            let m = su2_step(PI * rabi, 0.0, -PI * traj.samples[step.min(traj.samples.len() - 1)], dt);
            c = [m[0][0] * c[0] + m[0][1] * c[1], m[1][0] * c[0] + m[1][1] * c[1]];
        }
        Ok(out)
    });
    let mut p1 = vec![0.0; record.len()];
    for v in per_shot {
        for (s, x) in p1.iter_mut().zip(v?) {
            *s += x;
        }
    }
    for s in &mut p1 {
        *s /= shots.max(1) as f64;
    }
    let times: Vec<f64> = record.iter().map(|&k| k as f64 * dt).collect();
    let (gamma, gamma_err, amplitude, decayed) = fit_exponential_first_efold(&times, &p1)?;
    Ok(SpinLockResult { gamma, gamma_err, amplitude, decayed, times, p1 })
}

/// Unweighted fit of `1/2 + A exp(-g t)` over points before the signal first drops to 1/e.
pub fn fit_exponential_first_efold(times: &[f64], p: &[f64]) -> Result<(f64, f64, f64, bool)> {
    let y0 = p[0] - 0.5;
    let cut = p.iter().position(|&v| (v - 0.5) < y0 / std::f64::consts::E);
    let end = cut.unwrap_or(p.len()).max(3).min(p.len());
    let (t, y): (Vec<f64>, Vec<f64>) = times[..end].iter().zip(&p[..end]).map(|(&t, &v)| (t, v - 0.5)).unzip();
    let t_last = t[end - 1].max(1e-300);
    let g0 = if y[end - 1] > 0.0 && y0 > 0.0 { ((y0 / y[end - 1]).ln() / t_last).max(0.0) } else { 1.0 / t_last };
    // Fit in units of the window so both parameters are O(1).
    let sse = |x: &[f64]| -> f64 {
        t.iter().zip(&y).map(|(&ti, &yi)| (yi - x[0] * (-x[1] * ti / t_last).exp()).powi(2)).sum()
    };
    let m = optim::nelder_mead_restarts(&sse, &[y0, g0 * t_last], &[0.05, 0.1 + 0.1 * g0 * t_last], 4000, 3)?;
    let dof = (end as f64 - 2.0).max(1.0);
    let sigma2 = m.value / dof;
    let h = optim::hessian(&sse, &m.x)?;
    let err = optim::invert(&h).map(|inv| (2.0 * sigma2 * inv[1][1]).max(0.0).sqrt()).unwrap_or(f64::NAN);
    Ok((m.x[1] / t_last, err / t_last, m.x[0], cut.is_some()))
}

/// Thermal occupation and Lamb-Dicke parameter of the clock transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalMotion {
    pub nbar: f64,
    pub eta: f64,
}

impl ThermalMotion {
    pub fn none() -> Self {
        ThermalMotion { nbar: 0.0, eta: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nbar >= 0.0 && (0.0..1.0).contains(&self.eta) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid thermal motion {self:?}")))
        }
    }

    pub fn mean_factor(&self) -> f64 {
        1.0 - self.eta.powi(2) * (self.nbar + 0.5)
    }

    pub fn factor_variance(&self) -> f64 {
        self.eta.powi(4) * self.nbar * (self.nbar + 1.0)
    }

    pub fn sample_occupation<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.nbar <= 0.0 {
            return 0;
        }
        Geometric::new(1.0 / (1.0 + self.nbar)).expect("valid geometric").sample(rng)
    }
}

/// Per-shot effective Rabi frequency `rabi (1 - eta^2 (n + 1/2))`.
pub fn sample_thermal_rabi<R: Rng + ?Sized>(motion: &ThermalMotion, nominal_rabi: f64, rng: &mut R) -> f64 {
    if motion.eta == 0.0 {
        return nominal_rabi;
    }
    let n = motion.sample_occupation(rng) as f64;
    nominal_rabi * (1.0 - motion.eta.powi(2) * (n + 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_shape() {
        let p = ClockPsd { h0: 1.0, h_alpha: 0.0, alpha: 1.0, h_cap: 10.0, f_min: 1.0, f_max: 100.0 };
        assert_eq!(p.eval(5.0).unwrap(), 1.0);
        let q = ClockPsd { h0: 0.1, h_alpha: 100.0, alpha: 2.0, h_cap: 50.0, f_min: 1.0, f_max: 1e3 };
        assert_eq!(q.eval(2.0).unwrap(), 50.0);
        assert!(q.eval(0.5).is_err());
        assert!(q.eval(20.0).unwrap() < q.eval(10.0).unwrap());
    }

    #[test]
    fn zero_psd_gives_zero_trajectory() {
        let t = sample_trajectory(&ClockPsd::zero(), 0.01, 1e4, 3).unwrap();
        assert!(t.samples.iter().all(|&x| x == 0.0));
        assert_eq!(t.samples.len(), 100);
    }

    #[test]
    fn overflow_guard() {
        assert!(matches!(
            sample_trajectory(&ClockPsd::example(), 1e4, 1e6, 0),
            Err(Error::TrajectoryTooLong(_))
        ));
    }

    #[test]
    fn deterministic_per_seed() {
        let p = ClockPsd::example();
        let a = sample_trajectory(&p, 0.01, 2e4, 11).unwrap();
        let b = sample_trajectory(&p, 0.01, 2e4, 11).unwrap();
        let c = sample_trajectory(&p, 0.01, 2e4, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn thermal_limits() {
        let mut r = rng::stream(0, 0);
        assert_eq!(sample_thermal_rabi(&ThermalMotion::none(), 2100.0, &mut r), 2100.0);
        let m = ThermalMotion { nbar: 0.24, eta: 0.2 };
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| sample_thermal_rabi(&m, 1.0, &mut r)).sum::<f64>() / n as f64;
        assert!((mean - m.mean_factor()).abs() < 3e-4, "{mean}");
    }

    #[test]
    fn phase_track_interpolates() {
        let t = FrequencyTrajectory { sample_rate: 10.0, samples: vec![1.0; 10], seed: 0 };
        let p = t.cumulative_phase();
        assert!((p.between(0.0, 0.55) - 2.0 * PI * 0.55).abs() < 1e-12);
    }
}
