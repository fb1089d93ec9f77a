//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Each export returns a JSON string; the page parses it and draws on a canvas.
//! The `*_json` functions are the same computations without the JS wrapper, so
//! they can be tested natively.

use serde_json::json;
use std::f64::consts::PI;
use tweezer_clock::analysis::{mle_parity_fit, parity_points};
use tweezer_clock::circuit::{bell, ClockNoise, NoiseContext, Timing};
use tweezer_clock::experiments::{fringe_scan, phase_grid};
use tweezer_clock::gain::{CascadeLayout, ContrastModel, GainProblem};
use tweezer_clock::noise::{periodogram, sample_trajectory, ClockPsd};
use wasm_bindgen::prelude::*;

type Out = Result<String, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Bell-pair parity fringe under the example clock noise scaled by `noise_scale`.
pub fn parity_fringe_json(points: usize, shots: usize, noise_scale: f64, seed: u64) -> Out {
    if points < 8 || shots < 10 {
        return Err("need at least 8 phases and 10 shots".into());
    }
    if !(noise_scale >= 0.0) {
        return Err("noise scale must be non-negative".into());
    }
    let ctx = NoiseContext {
        clock: ClockNoise::Psd { psd: ClockPsd::example().scaled(noise_scale), sample_rate: 2e4 },
        ..NoiseContext::ideal()
    };
    let phases = phase_grid(points, PI);
    let data = fringe_scan(&bell(&Timing::default(), Some(0.0)), &ctx, &phases, shots, seed).map_err(err)?;
    let pts = parity_points(&data, &[0, 1]);
    let fit = mle_parity_fit(&pts, 2.0).map_err(err)?;
    let curve: Vec<f64> = (0..=100).map(|i| PI * i as f64 / 100.0).collect();
    Ok(json!({
        "phase": phases,
        "parity": pts.iter().map(|p| p.parity()).collect::<Vec<_>>(),
        "fit_phase": curve,
        "fit": curve.iter().map(|&x| fit.eval(x)).collect::<Vec<_>>(),
        "contrast": fit.contrast,
        "contrast_err": fit.contrast_err,
    })
    .to_string())
}

/// Gain of a `levels`-level cascade with `copies` copies per size, against the
/// per-qubit fidelity F0 on `[f0_lo, 1]`.
pub fn gain_curve_json(levels: usize, copies: usize, prior_width: f64, f0_lo: f64, points: usize) -> Out {
    if !(1..=4).contains(&levels) || !(1..=8).contains(&copies) {
        return Err("levels must be 1..=4 and copies 1..=8".into());
    }
    if !(0.5..1.0).contains(&f0_lo) || points < 2 {
        return Err("need 0.5 <= f0_lo < 1 and at least 2 points".into());
    }
    let layout = CascadeLayout::uniform(levels, copies).map_err(err)?;
    let f0: Vec<f64> = (0..points).map(|i| f0_lo + (1.0 - f0_lo) * i as f64 / (points - 1) as f64).collect();
    let gain = f0
        .iter()
        .map(|&f0| GainProblem::new(layout.clone(), ContrastModel::PerQubitFidelity { f0 }, prior_width).gain_fast())
        .collect::<tweezer_clock::Result<Vec<f64>>>()
        .map_err(err)?;
    Ok(json!({ "f0": f0, "gain": gain, "atoms": layout.total_atoms() }).to_string())
}

/// One sampled detuning trajectory and its periodogram next to the target PSD.
pub fn psd_trajectory_json(h0: f64, h_alpha: f64, cap: f64, duration: f64, seed: u64) -> Out {
    let psd = ClockPsd { h0, h_alpha, alpha: 2.0, h_cap: cap, f_min: 1.0, f_max: 1e4 };
    let sample_rate = 2e4;
    if !(duration > 0.0 && duration * sample_rate <= 2e5) {
        return Err("duration must be positive and at most 10 s".into());
    }
    let traj = sample_trajectory(&psd, duration, sample_rate, seed).map_err(err)?;
    let pg: Vec<(f64, f64)> = periodogram(&traj).into_iter().filter(|&(f, s)| f > 0.0 && s > 0.0).collect();
    // keep the page responsive: at most ~2000 trajectory points
    let stride = (traj.samples.len() / 2000).max(1);
    let t: Vec<f64> = (0..traj.samples.len()).step_by(stride).map(|i| i as f64 / sample_rate).collect();
    let d: Vec<f64> = traj.samples.iter().step_by(stride).copied().collect();
    Ok(json!({
        "time": t,
        "detuning": d,
        "freq": pg.iter().map(|p| p.0).collect::<Vec<_>>(),
        "periodogram": pg.iter().map(|p| p.1).collect::<Vec<_>>(),
        "target": pg.iter().map(|p| psd.eval_or_zero(p.0)).collect::<Vec<_>>(),
    })
    .to_string())
}

fn js(r: Out) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn parity_fringe(points: usize, shots: usize, noise_scale: f64, seed: u32) -> Result<String, JsError> {
    js(parity_fringe_json(points, shots, noise_scale, seed as u64))
}

#[wasm_bindgen]
pub fn gain_curve(levels: usize, copies: usize, prior_width: f64, f0_lo: f64, points: usize) -> Result<String, JsError> {
    js(gain_curve_json(levels, copies, prior_width, f0_lo, points))
}

#[wasm_bindgen]
pub fn psd_trajectory(h0: f64, h_alpha: f64, cap: f64, duration: f64, seed: u32) -> Result<String, JsError> {
    js(psd_trajectory_json(h0, h_alpha, cap, duration, seed as u64))
}
