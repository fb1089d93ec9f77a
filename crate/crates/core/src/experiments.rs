//! Scans and sweeps shared by the command-line runner and the tests.

use crate::analysis::{mle_parity_fit, parity_points, ParityFit};
use crate::circuit::{execute, ghz_cascade, CascadeOptions, Circuit, NoiseContext, Timing, CASCADE_GROUPS};
use crate::error::Result;
use crate::rng;
use crate::shots::ShotTable;
use serde::{Deserialize, Serialize};

/// `n` analysis phases evenly spaced over `[0, span)`.
pub fn phase_grid(n: usize, span: f64) -> Vec<f64> {
    (0..n).map(|i| span * i as f64 / n as f64).collect()
}

/// Run `circuit` once per analysis phase. Point `i` uses seed `derive(seed, i)`.
pub fn fringe_scan(circuit: &Circuit, ctx: &NoiseContext, phases: &[f64], shots: usize, seed: u64) -> Result<Vec<(f64, ShotTable)>> {
    phases
        .iter()
        .enumerate()
        .map(|(i, &phi)| Ok((phi, execute(&circuit.with_analysis_phase(phi), ctx, shots, rng::derive(seed, i as u64))?)))
        .collect()
}

/// Single-qubit or two-qubit average fidelity from a benchmark decay constant.
pub fn average_fidelity(p: f64, dim: usize) -> f64 {
    p + (1.0 - p) / dim as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdleSweepPoint {
    pub idle_time: f64,
    pub fit: ParityFit,
    /// Population of 0000 plus 1111 on the 4-atom group.
    pub target_population: f64,
    /// Error bitstrings of the 4-atom group with their frequencies, most frequent first.
    pub errors: Vec<(String, f64)>,
}

/// Parity contrast and bitstring populations of the cascade's 4-atom GHZ state
/// against the reconfiguration idle time.
pub fn ghz_idle_sweep(
    t: &Timing,
    ctx: &NoiseContext,
    idle_times: &[f64],
    echo: bool,
    phases: usize,
    shots: usize,
    seed: u64,
) -> Result<Vec<IdleSweepPoint>> {
    let group = CASCADE_GROUPS[2];
    let span = 2.0 * std::f64::consts::PI / group.len() as f64;
    idle_times
        .iter()
        .enumerate()
        .map(|(k, &idle)| {
            let s = rng::derive(seed, k as u64);
            let c = ghz_cascade(t, &CascadeOptions { idle_time: idle, echo, ..Default::default() })?;
            let pop = execute(&c.without_analysis(), ctx, shots, rng::derive(s, 0))?;
            let scan = fringe_scan(&c, ctx, &phase_grid(phases, span), shots, rng::derive(s, 1))?;
            let fit = mle_parity_fit(&parity_points(&scan, group), group.len() as f64)?;
            let n = pop.len() as f64;
            let counts = pop.counts(group);
            let target = ["0000", "1111"].iter().map(|b| counts.get(*b).copied().unwrap_or(0)).sum::<usize>() as f64 / n;
            let mut errors: Vec<(String, f64)> = counts
                .into_iter()
                .filter(|(b, _)| b != "0000" && b != "1111")
                .map(|(b, c)| (b, c as f64 / n))
                .collect();
            errors.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            Ok(IdleSweepPoint { idle_time: idle, fit, target_population: target, errors })
        })
        .collect()
}
