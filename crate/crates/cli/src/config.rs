//! Experiment configuration files.

use serde::Deserialize;
use std::path::PathBuf;
use tweezer_clock::circuit::{ClockNoise, CzModel, NoiseContext, ShelvingModel, Timing};
use tweezer_clock::noise::{ClockPsd, ThermalMotion};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub seed: u64,
    pub shots: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub noise: NoiseBlock,
    pub timing: Option<Timing>,
    pub scan: Option<Scan>,
    #[serde(default)]
    pub params: toml::Table,
}

/// Noise settings shared by the circuit experiments. Everything defaults to off.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseBlock {
    /// Clock laser frequency-noise PSD, one trajectory per shot.
    pub psd: Option<ClockPsd>,
    pub sample_rate: f64,
    /// Quasi-static clock detuning in Hz; ignored when `psd` is set.
    pub quasi_static_sigma: Option<f64>,
    pub static_detuning: f64,
    pub rabi_error_rms: f64,
    pub thermal: Option<ThermalMotion>,
    pub cz_error: f64,
    pub cz_leak: f64,
    pub shelving: Option<ShelvingModel>,
}

impl Default for NoiseBlock {
    fn default() -> Self {
        NoiseBlock {
            psd: None,
            sample_rate: 2e4,
            quasi_static_sigma: None,
            static_detuning: 0.0,
            rabi_error_rms: 0.0,
            thermal: None,
            cz_error: 0.0,
            cz_leak: 0.0,
            shelving: None,
        }
    }
}

impl NoiseBlock {
    pub fn context(&self) -> NoiseContext {
        let clock = match (self.psd, self.quasi_static_sigma) {
            (Some(psd), _) => ClockNoise::Psd { psd, sample_rate: self.sample_rate },
            (None, Some(sigma)) => ClockNoise::QuasiStatic { sigma },
            (None, None) => ClockNoise::None,
        };
        let cz = if self.cz_error == 0.0 && self.cz_leak == 0.0 {
            CzModel::Ideal
        } else {
            CzModel::Fast { error: self.cz_error, leak: self.cz_leak }
        };
        NoiseContext {
            clock,
            static_detuning: self.static_detuning,
            thermal: self.thermal.unwrap_or_else(ThermalMotion::none),
            rabi_error_rms: self.rabi_error_rms,
            cz,
            shelving: self.shelving.unwrap_or_default(),
        }
    }

    fn diagnostics(&self, out: &mut Vec<String>) {
        if let Err(e) = self.context().validate() {
            out.push(format!("noise: {e}"));
        }
        for (name, p) in [("cz_error", self.cz_error), ("cz_leak", self.cz_leak)] {
            if !(0.0..=1.0).contains(&p) {
                out.push(format!("noise.{name} = {p} outside [0, 1]"));
            }
        }
    }
}

/// Values of the scanned variable, either listed or as an evenly spaced range.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scan {
    pub variable: String,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    /// Exclude `stop` from the range, for periodic variables.
    #[serde(default)]
    pub periodic: bool,
}

impl Scan {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        if let Some(v) = &self.values {
            if v.is_empty() {
                return Err("scan.values is empty".into());
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err("scan.values must be finite".into());
            }
            if self.start.is_some() || self.stop.is_some() || self.points.is_some() {
                return Err("give either scan.values or scan.start/stop/points, not both".into());
            }
            return Ok(v.clone());
        }
        let (Some(a), Some(b), Some(n)) = (self.start, self.stop, self.points) else {
            return Err("scan needs values or start, stop and points".into());
        };
        if n == 0 || !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(format!("empty scan range [{a}, {b}] with {n} points"));
        }
        Ok(if self.periodic || n == 1 {
            let step = (b - a) / n as f64;
            (0..n).map(|i| a + step * i as f64).collect()
        } else {
            (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
        })
    }
}

pub fn parse(text: &str) -> Result<ExperimentConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

impl ExperimentConfig {
    pub fn timing(&self) -> Timing {
        self.timing.clone().unwrap_or_default()
    }

    /// Experiment-independent checks.
    pub fn common_diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.noise.diagnostics(&mut out);
        if let Some(t) = &self.timing {
            if !(t.clock_rabi > 0.0) {
                out.push("timing.clock_rabi must be positive".into());
            }
            for (name, d) in [
                ("cz_duration", t.cz_duration),
                ("local_overhead", t.local_overhead),
                ("shelve_duration", t.shelve_duration),
                ("mcr_dead_time", t.mcr_dead_time),
                ("reuse_dead_time", t.reuse_dead_time),
            ] {
                if !(d >= 0.0) {
                    out.push(format!("timing.{name} must be non-negative"));
                }
            }
        }
        if let Some(s) = &self.scan {
            if let Err(e) = s.values() {
                out.push(e);
            }
        }
        out
    }

    pub fn params<T: for<'de> Deserialize<'de>>(&self) -> Result<T, String> {
        toml::Value::Table(self.params.clone()).try_into().map_err(|e: toml::de::Error| format!("params: {}", e.message()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan(start: f64, stop: f64, points: usize, periodic: bool) -> Scan {
        Scan { variable: "x".into(), values: None, start: Some(start), stop: Some(stop), points: Some(points), periodic }
    }

    #[test]
    fn ranges_include_or_exclude_the_end() {
        assert_eq!(scan(0.0, 1.0, 5, false).values().unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(scan(0.0, 1.0, 4, true).values().unwrap(), vec![0.0, 0.25, 0.5, 0.75]);
        assert!(scan(1.0, 1.0, 4, false).values().is_err());
        let mixed = Scan { values: Some(vec![1.0]), ..scan(0.0, 1.0, 2, false) };
        assert!(mixed.values().is_err());
    }

    #[test]
    fn noise_block_defaults_to_ideal() {
        let c: ExperimentConfig = parse("experiment = \"ssb\"").unwrap();
        assert_eq!(c.noise.context(), NoiseContext::ideal());
        assert!(parse("experiment = \"ssb\"\nshotz = 3").is_err());
    }
}
