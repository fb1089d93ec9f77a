//! Named experiments: parameter parsing, execution and artifacts.

use crate::config::ExperimentConfig;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::f64::consts::{E, PI};
use std::fmt::Write as _;
use tweezer_clock::analysis::{mle_parity_fit, parity_points, wls_fit, GaussianPoint, ParityFit, ParityPoint};
use tweezer_clock::benchmarking::{enumerate_symmetric_stabilizers, fit_decay, run_benchmark, Family, RunPlan};
use tweezer_clock::circuit::{
    bell, dual_quadrature, execute, ghz_cascade, weight2_parity, CascadeOptions, ParityReadout, QuadratureShift, CASCADE_GROUPS,
};
use tweezer_clock::experiments::{average_fidelity, fringe_scan, ghz_idle_sweep};
use tweezer_clock::gain::{gain_vs_fidelity, CascadeLayout, ContrastModel, GainProblem, PriorMode};
use tweezer_clock::noise::{periodogram, ramsey_curve, sample_trajectory, simulate_spin_lock, ClockPsd};
use tweezer_clock::rydberg::{
    calibrate_pulse, cz_fidelities, leakage_probability, mcwf_gate_fidelity, reduced_amplitudes, Blockade, CalibrationBudget,
    RydbergNoise,
};
use tweezer_clock::svg::{Plot, Series};
use tweezer_clock::{rng, ShotTable};

pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Output of one run: files plus a short JSON summary for the manifest.
pub struct Bundle {
    pub files: Vec<Artifact>,
    pub summary: serde_json::Value,
}

impl Bundle {
    fn new() -> Self {
        Bundle { files: Vec::new(), summary: json!({}) }
    }

    fn text(&mut self, name: &str, s: String) {
        self.files.push(Artifact { name: name.into(), bytes: s.into_bytes() });
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) {
        let mut s = serde_json::to_string_pretty(v).expect("serializable");
        s.push('\n');
        self.text(name, s);
    }

    fn plot(&mut self, name: &str, p: Plot, stamp: Option<&str>) {
        let mut s = p.to_svg();
        if let Some(t) = stamp {
            s.push_str(&format!("<!-- generated {t} -->\n"));
        }
        self.text(name, s);
    }
}

pub struct RunOptions {
    /// Timestamp comment added to plots; `None` in deterministic mode.
    pub stamp: Option<String>,
}

type Check = fn(&ExperimentConfig) -> Vec<String>;
type Run = fn(&ExperimentConfig, &RunOptions) -> tweezer_clock::Result<Bundle>;

pub struct Experiment {
    pub id: &'static str,
    pub description: &'static str,
    /// Name of the scanned variable, if the experiment takes a scan.
    pub scan: Option<&'static str>,
    pub needs_shots: bool,
    check: Check,
    run: Run,
}

impl Experiment {
    pub fn diagnostics(&self, cfg: &ExperimentConfig) -> Vec<String> {
        let mut out = cfg.common_diagnostics();
        if self.needs_shots {
            match cfg.shots {
                None => out.push("shots is required".into()),
                Some(0) => out.push("shots must be positive".into()),
                _ => {}
            }
        }
        match (self.scan, &cfg.scan) {
            (Some(v), None) => out.push(format!("scan over {v} is required")),
            (Some(v), Some(s)) if s.variable != v => out.push(format!("scan.variable must be {v}, got {}", s.variable)),
            (None, Some(_)) => out.push(format!("{} takes no scan", self.id)),
            _ => {}
        }
        out.extend((self.check)(cfg));
        out
    }

    pub fn run(&self, cfg: &ExperimentConfig, o: &RunOptions) -> tweezer_clock::Result<Bundle> {
        (self.run)(cfg, o)
    }
}

pub fn registry() -> &'static [Experiment] {
    &REGISTRY
}

pub fn find(id: &str) -> Option<&'static Experiment> {
    REGISTRY.iter().find(|e| e.id == id)
}

static REGISTRY: [Experiment; 14] = [
    Experiment {
        id: "bell-parity",
        description: "Bell pair parity fringe with MLE fit",
        scan: Some("phase"),
        needs_shots: true,
        check: check_params::<NoParams>,
        run: run_bell,
    },
    Experiment {
        id: "ghz-cascade",
        description: "simultaneous 1-, 2- and 4-atom GHZ fringes from the cascade",
        scan: Some("phase"),
        needs_shots: true,
        check: check_params::<CascadeParams>,
        run: run_cascade,
    },
    Experiment {
        id: "dual-quadrature",
        description: "GHZ copies read in two quadratures",
        scan: Some("phase"),
        needs_shots: true,
        check: check_dual,
        run: run_dual,
    },
    Experiment {
        id: "ssb",
        description: "symmetric stabilizer benchmarking of the CZ gate",
        scan: Some("n_gates"),
        needs_shots: true,
        check: check_benchmark,
        run: run_ssb,
    },
    Experiment {
        id: "echo",
        description: "echo benchmarking of the CZ gate",
        scan: Some("n_gates"),
        needs_shots: true,
        check: check_benchmark,
        run: run_echo,
    },
    Experiment {
        id: "pi2-benchmark",
        description: "global pi/2 pulse benchmarking",
        scan: Some("n_gates"),
        needs_shots: true,
        check: check_pi2,
        run: run_pi2,
    },
    Experiment {
        id: "cz-gate",
        description: "time-optimal CZ pulse calibration and trajectory fidelity",
        scan: None,
        needs_shots: true,
        check: check_params::<CzParams>,
        run: run_cz,
    },
    Experiment {
        id: "clock-noise",
        description: "clock laser frequency trajectory and averaged periodogram",
        scan: None,
        needs_shots: false,
        check: check_clock_noise,
        run: run_clock_noise,
    },
    Experiment {
        id: "ramsey",
        description: "Ramsey contrast decay under clock laser noise",
        scan: Some("dark_time"),
        needs_shots: true,
        check: check_psd_required::<NoParams>,
        run: run_ramsey,
    },
    Experiment {
        id: "spin-lock",
        description: "spin-lock decay under clock laser noise",
        scan: None,
        needs_shots: true,
        check: check_psd_required::<SpinLockParams>,
        run: run_spin_lock,
    },
    Experiment {
        id: "ghz-idle",
        description: "4-atom GHZ contrast and error populations against reconfiguration idle time",
        scan: Some("idle_time"),
        needs_shots: true,
        check: check_params::<IdleParams>,
        run: run_idle,
    },
    Experiment {
        id: "parity-check",
        description: "weight-2 parity readout against free evolution time",
        scan: Some("evolution_time"),
        needs_shots: true,
        check: check_params::<ParityCheckParams>,
        run: run_parity_check,
    },
    Experiment {
        id: "gain-vs-size",
        description: "Bayesian gain of GHZ cascades against the largest GHZ size",
        scan: Some("levels"),
        needs_shots: false,
        check: check_gain_size,
        run: run_gain_size,
    },
    Experiment {
        id: "gain-vs-fidelity",
        description: "Bayesian gain of GHZ cascades against per-qubit fidelity",
        scan: Some("f0"),
        needs_shots: false,
        check: check_gain_fidelity,
        run: run_gain_fidelity,
    },
];

fn check_params<P: for<'de> Deserialize<'de>>(cfg: &ExperimentConfig) -> Vec<String> {
    cfg.params::<P>().err().into_iter().collect()
}

fn check_psd_required<P: for<'de> Deserialize<'de>>(cfg: &ExperimentConfig) -> Vec<String> {
    let mut out = check_params::<P>(cfg);
    if cfg.noise.psd.is_none() {
        out.push("noise.psd is required".into());
    }
    out
}

fn scan(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.scan.as_ref().and_then(|s| s.values().ok()).unwrap_or_default()
}

fn shots(cfg: &ExperimentConfig) -> usize {
    cfg.shots.unwrap_or(0)
}

fn params<P: for<'de> Deserialize<'de>>(cfg: &ExperimentConfig) -> tweezer_clock::Result<P> {
    cfg.params().map_err(tweezer_clock::Error::InvalidParameter)
}

fn binomial_err(p: &ParityPoint) -> f64 {
    let q = p.even as f64 / p.total.max(1) as f64;
    2.0 * (q * (1.0 - q) / p.total.max(1) as f64).sqrt()
}

fn shots_csv(variable: &str, scan: &[(f64, ShotTable)]) -> String {
    let mut out = format!("{variable},shot,bits,herald,leaked,ancilla\n");
    for (x, table) in scan {
        for line in table.to_csv().lines().skip(1) {
            let _ = writeln!(out, "{x:.9e},{line}");
        }
    }
    out
}

fn fit_line(fit: &ParityFit, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    (0..=200).map(|i| lo + (hi - lo) * i as f64 / 200.0).map(|x| (x, fit.eval(x))).collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

fn run_bell(cfg: &ExperimentConfig, o: &RunOptions) -> tweezer_clock::Result<Bundle> {
    let circ = bell(&cfg.timing(), Some(0.0));
    let phases = scan(cfg);
    let data = fringe_scan(&circ, &cfg.noise.context(), &phases, shots(cfg), cfg.seed)?;
    let pts = parity_points(&data, &[0, 1]);
    let fit = mle_parity_fit(&pts, 2.0)?;
    let mut b = Bundle::new();
    b.text("shots.csv", shots_csv("phase", &data));
    let mut csv = String::from("phase,even,total,parity\n");
    for p in &pts {
        let _ = writeln!(csv, "{:.9e},{},{},{:.9}", p.phase, p.even, p.total, p.parity());
    }
    b.text("parity.csv", csv);
    b.json("fit.json", &fit);
    let (lo, hi) = (phases[0], phases[phases.len() - 1]);
    let plot = Plot::new("Bell pair parity", "analysis phase (rad)", "parity")
        .with(Series::markers("data", pts.iter().map(|p| (p.phase, p.parity(), binomial_err(p)))))
        .with(Series::line("MLE fit", fit_line(&fit, lo, hi)));
    b.plot("fringe.svg", plot, o.stamp.as_deref());
    b.summary = json!({ "contrast": fit.contrast, "contrast_err": fit.contrast_err });
    Ok(b)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CascadeParams {
    idle_time: f64,
    echo: bool,
    single_site_op: bool,
    single_site_duration: f64,
}

impl Default for CascadeParams {
    fn default() -> Self {
        let d = CascadeOptions::default();
        CascadeParams {
            idle_time: d.idle_time,
            echo: d.echo,
            single_site_op: d.single_site_op,
            single_site_duration: d.single_site_duration,
        }
    }
}

/// Fit each atom group of a phase scan with its size as the frequency guess.
fn group_fringes(
    b: &mut Bundle,
    title: &str,
    data: &[(f64, ShotTable)],
    groups: &[Vec<usize>],
    stamp: Option<&str>,
) -> tweezer_clock::Result<Vec<ParityFit>> {
    let pts: Vec<Vec<ParityPoint>> = groups.iter().map(|g| parity_points(data, g)).collect();
    let fits: Vec<ParityFit> = groups.iter().zip(&pts).map(|(g, p)| mle_parity_fit(p, g.len() as f64)).collect::<Result<_, _>>()?;
    let mut csv = String::from("phase");
    for (k, g) in groups.iter().enumerate() {
        let _ = write!(csv, ",group{k}_size{}", g.len());
    }
    csv.push('\n');
    for i in 0..data.len() {
        let _ = write!(csv, "{:.9e}", data[i].0);
        for p in &pts {
            let _ = write!(csv, ",{:.9}", p[i].parity());
        }
        csv.push('\n');
    }
    b.text("parity.csv", csv);
    let (lo, hi) = (data[0].0, data[data.len() - 1].0);
    let mut plot = Plot::new(title, "analysis phase (rad)", "parity");
    for (k, (p, f)) in pts.iter().zip(&fits).enumerate() {
        let name = format!("group {k} (N = {})", groups[k].len());
        plot = plot.with(Series::markers(&name, p.iter().map(|q| (q.phase, q.parity(), binomial_err(q)))));
        plot = plot.with(Series::line(&format!("fit {k}"), fit_line(f, lo, hi)));
    }
    b.plot("fringe.svg", plot, stamp);
    Ok(fits)
}

fn run_cascade(cfg: &ExperimentConfig, o: &RunOptions) -> tweezer_clock::Result<Bundle> {
    let p: CascadeParams = params(cfg)?;
    let opts = CascadeOptions {
        idle_time: p.idle_time,
        echo: p.echo,
        single_site_op: p.single_site_op,
        single_site_duration: p.single_site_duration,
        analysis_phase: 0.0,
    };
    let circ = ghz_cascade(&cfg.timing(), &opts)?;
    let data = fringe_scan(&circ, &cfg.noise.context(), &scan(cfg), shots(cfg), cfg.seed)?;
    let groups: Vec<Vec<usize>> = CASCADE_GROUPS.iter().map(|g| g.to_vec()).collect();
    let mut b = Bundle::new();
    b.text("shots.csv", shots_csv("phase", &data));
    let fits = group_fringes(&mut b, "GHZ cascade parity", &data, &groups, o.stamp.as_deref())?;
    let rows: Vec<_> = groups.iter().zip(&fits).map(|(g, f)| json!({ "size": g.len(), "fit": f })).collect();
    b.json("fits.json", &rows);
    let freq: Vec<f64> = fits.iter().map(|f| f.frequency).collect();
    b.summary = json!({
        "contrasts": fits.iter().map(|f| f.contrast).collect::<Vec<_>>(),
        "frequency_ratio": [1.0, freq[1] / freq[0], freq[2] / freq[0]],
    });
    Ok(b)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DualParams {
    copies: usize,
    size: usize,
    shift: QuadratureShift,
}

impl Default for DualParams {
    fn default() -> Self {
        DualParams { copies: 2, size: 4, shift: QuadratureShift::PerAtomPhase }
    }
}

fn check_dual(cfg: &ExperimentConfig) -> Vec<String> {
    match cfg.params::<DualParams>() {
        Err(e) => vec![e],
        Ok(p) if p.copies < 2 || p.copies * p.size > 12 || !matches!(p.size, 2 | 4 | 8) => {
            vec![format!("params: unsupported layout {} copies of size {}", p.copies, p.size)]
        }
        Ok(_) => vec![],
    }
}

fn run_dual(cfg: &ExperimentConfig, o: &RunOptions) -> tweezer_clock::Result<Bundle> {
    let p: DualParams = params(cfg)?;
    let circ = dual_quadrature(&cfg.timing(), p.copies, p.size, p.shift, 0.0)?;
    let data = fringe_scan(&circ, &cfg.noise.context(), &scan(cfg), shots(cfg), cfg.seed)?;
    let groups: Vec<Vec<usize>> = (0..p.copies).map(|k| (k * p.size..(k + 1) * p.size).collect()).collect();
    let mut b = Bundle::new();
    b.text("shots.csv", shots_csv("phase", &data));
    let fits = group_fringes(&mut b, "Dual-quadrature parity", &data, &groups, o.stamp.as_deref())?;
    let offsets: Vec<f64> = fits.iter().map(|f| (f.phase - fits[0].phase).rem_euclid(2.0 * PI)).collect();
    let rows: Vec<_> = fits
        .iter()
        .zip(&offsets)
        .enumerate()
        .map(|(k, (f, off))| json!({ "copy": k, "fit": f, "phase_offset": off }))
        .collect();
    b.json("fits.json", &rows);
    b.summary = json!({ "phase_offsets": offsets });
    Ok(b)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BenchmarkParams {
    layers: usize,
    circuits: usize,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        BenchmarkParams { layers: 20, circuits: 50 }
    }
}

fn gate_counts(cfg: &ExperimentConfig, max: Option<usize>) -> Result<Vec<usize>, String> {
    let v = scan(cfg);
    let ok = v.iter().all(|&x| x >= 0.0 && x.fract() == 0.0 && max.map_or(true, |m| x <= m as f64));
    if !ok {
        return Err(match max {
            Some(m) => format!("scan.values must be integers in [0, {m}]"),
            None => "scan.values must be non-negative integers".into(),
        });
    }
    if v.len() < 3 {
        return Err("a decay fit needs at least 3 gate counts".into());
    }
    Ok(v.iter().map(|&x| x as usize).collect())
}

fn check_benchmark(cfg: &ExperimentConfig) -> Vec<String> {
    match cfg.params::<BenchmarkParams>() {
        Err(e) => vec![e],
        Ok(p) => {
            let mut out = vec![];
            if p.circuits == 0 || p.layers == 0 {
                out.push("params: layers and circuits must be positive".into());
            }
            out.extend(gate_counts(cfg, Some(p.layers)).err());
            out
        }
    }
}

fn benchmark_bundle(
    cfg: &ExperimentConfig,
    o: &RunOptions,
    plan: RunPlan,
    dim: usize,
    title: &str,
) -> tweezer_clock::Result<Bundle> {
    let set = enumerate_symmetric_stabilizers()?;
    let run = run_benchmark(&set, &cfg.timing(), &plan, &cfg.noise.context(), cfg.seed)?;
    let fit = fit_decay(&run)?;
    let mut b = Bundle::new();
    b.text("decay.csv", run.to_csv());
    let summary = json!({
        "family": plan.family,
        "fit": fit,
        "fidelity": fit.p,
        "fidelity_err": fit.p_err,
        "average_fidelity": average_fidelity(fit.p, dim),
    });
    b.json("fidelity.json", &summary);
    let n_max = *plan.n_gates.iter().max().unwrap_or(&1) as f64;
    let model = (0..=100).map(|i| n_max * i as f64 / 100.0).map(|n| (n, fit.amplitude * fit.p.powf(n)));
    let plot = Plot::new(title, "number of gates", "return probability")
        .with(Series::markers("data", (0..run.n_gates.len()).map(|i| (run.n_gates[i] as f64, run.return_prob[i], run.errors[i]))))
        .with(Series::line("A p^N", model));
    b.plot("decay.svg", plot, o.stamp.as_deref());
    b.summary = summary;
    Ok(b)
}

fn run_two_qubit(cfg: &ExperimentConfig, o: &RunOptions, family: Family, title: &str) -> tweezer_clock::Result<Bundle> {
    let p: BenchmarkParams = params(cfg)?;
    let n_gates = gate_counts(cfg, Some(p.layers)).map_err(tweezer_clock::Error::InvalidParameter)?;
    let plan = RunPlan { family, n_gates, layers: p.layers, circuits: p.circuits, shots: shots(cfg), atoms: 2 };
    benchmark_bundle(cfg, o, plan, 4, title)
}

fn run_ssb(cfg: &ExperimentConfig, o: &RunOptions) -> tweezer_clock::Result<Bundle> {
    run_two_qubit(cfg, o, Family::Ssb, "Symmetric stabilizer benchmarking")
}

fn run_echo(cfg: &ExperimentConfig, o: &RunOptions) -> tweezer_clock::Result<Bundle> {
    run_two_qubit(cfg, o, Family::Echo, "Echo benchmarking")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Pi2Params {
    atoms: usize,
    circuits: usize,
    /// Random pulse axes instead of a fixed train.
    random: bool,
}

impl Default for Pi2Params {
    fn default() -> Self {
        Pi2Params { atoms: 1, circuits: 20, random: true }
    }
}

fn check_pi2(cfg: &ExperimentConfig) -> Vec<String> {
    match cfg.params::<Pi2Params>() {
        Err(e) => vec![e],
        Ok(p) => {
            let mut out = vec![];
            if p.atoms == 0 || p.atoms > 12 || p.circuits == 0 {
                out.push("params: atoms must be in 1..=12 and circuits positive".into());
            }
            out.extend(gate_counts(cfg, None).err());
            out
        }
    }
}

fn run_pi2(cfg: &ExperimentConfig, o: &RunOptions) -> tweezer_clock::Result<Bundle> {
    let p: Pi2Params = params(cfg)?;
    let n_gates = gate_counts(cfg, None).map_err(tweezer_clock::Error::InvalidParameter)?;
    let family = if p.random { Family::Pi2Random } else { Family::Pi2Train };
    let plan = RunPlan { family, n_gates, layers: 0, circuits: p.circuits, shots: shots(cfg), atoms: p.atoms };
    benchmark_bundle(cfg, o, plan, 2, "Global pi/2 benchmarking")
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NoiseChoice {
    Named(String),
    Custom(RydbergNoise),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CzParams {
    rabi: f64,
    /// Pair interaction in Hz; perfect blockade when absent.
    interaction: Option<f64>,
    /// "none", "example" or a full noise table.
    rydberg_noise: NoiseChoice,
    budget: CalibrationBudget,
}

impl Default for CzParams {
    fn default() -> Self {
        CzParams {
            rabi: 5.4e6,
            interaction: None,
            rydberg_noise: NoiseChoice::Named("example".into()),
            budget: CalibrationBudget::default(),
        }
    }
}

fn rydberg_noise(c: &NoiseChoice) -> tweezer_clock::Result<RydbergNoise> {
    match c {
        NoiseChoice::Named(s) if s == "none" => Ok(RydbergNoise::none()),
        NoiseChoice::Named(s) if s == "example" => Ok(RydbergNoise::example()),
        NoiseChoice::Named(s) => Err(tweezer_clock::Error::InvalidParameter(format!("unknown Rydberg noise preset {s}"))),
        NoiseChoice::Custom(n) => {
            n.validate()?;
            Ok(n.clone())
        }
    }
}

fn run_cz(cfg: &ExperimentConfig, _o: &RunOptions) -> tweezer_clock::Result<Bundle> {
    let p: CzParams = params(cfg)?;
    let noise = rydberg_noise(&p.rydberg_noise)?;
    let blockade = p.interaction.map_or(Blockade::Perfect, Blockade::Finite);
    let pulse = calibrate_pulse(p.rabi, blockade, &p.budget)?;
    let (a01, a11) = reduced_amplitudes(&pulse);
    let (bell_f, avg_f) = cz_fidelities(a01, a11);
    let (f, f_err) = mcwf_gate_fidelity(&pulse, &noise, shots(cfg), rng::derive(cfg.seed, 0))?;
    let leak = leakage_probability(&pulse, &noise, shots(cfg), rng::derive(cfg.seed, 1))?;
    let mut b = Bundle::new();
    let mut pj = pulse.to_json();
    pj.push('\n');
    b.text("pulse.json", pj);
    let summary = json!({
        "noiseless_bell_fidelity": bell_f,
        "noiseless_average_fidelity": avg_f,
        "noisy_fidelity": f,
        "noisy_fidelity_err": f_err,
        "leakage_probability": leak,
        "trajectories": shots(cfg),
    });
    b.json("fidelity.json", &summary);
    b.summary = summary;
    Ok(b)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ClockNoiseParams {
    duration: f64,
    sample_rate: f64,
    /// Trajectories averaged in the periodogram.
    averages: usize,
}

impl Default for ClockNoiseParams {
    fn default() -> Self {
        ClockNoiseParams { duration: 0.1, sample_rate: 2e4, averages: 200 }
    }
}

fn check_clock_noise(cfg: &ExperimentConfig) -> Vec<String> {
    let mut out = check_psd_required::<ClockNoiseParams>(cfg);
    if let Ok(p) = cfg.params::<ClockNoiseParams>() {
        if !(p.duration > 0.0 && p.sample_rate > 0.0) || p.averages == 0 {
            out.push("params: duration, sample_rate and averages must be positive".into());
        }
    }
    out
}

fn run_clock_noise(cfg: &ExperimentConfig, o: &RunOptions) -> tweezer_clock::Result<Bundle> {
    let p: ClockNoiseParams = params(cfg)?;
    let psd = psd_of(cfg)?;
    let first = sample_trajectory(&psd, p.duration, p.sample_rate, rng::derive(cfg.seed, 0))?;
    let spectra: Vec<tweezer_clock::Result<Vec<(f64, f64)>>> = rng::par_map(p.averages, |i| {
        Ok(periodogram(&sample_trajectory(&psd, p.duration, p.sample_rate, rng::derive(cfg.seed, 1 + i as u64))?))
    });
    let spectra: Vec<Vec<(f64, f64)>> = spectra.into_iter().collect::<Result<_, _>>()?;
    let mut csv = String::from("frequency_hz,measured_hz2_per_hz,model_hz2_per_hz\n");
    let mut measured = Vec::new();
    let mut model = Vec::new();
    for k in 0..spectra[0].len() {
        let f = spectra[0][k].0;
        let mean = spectra.iter().map(|s| s[k].1).sum::<f64>() / spectra.len() as f64;
        let s = psd.eval_or_zero(f);
        let _ = writeln!(csv, "{f:.9e},{mean:.9e},{s:.9e}");
        if f > 0.0 && mean > 0.0 && s > 0.0 {
            measured.push((f.log10(), mean.log10()));
            model.push((f.log10(), s.log10()));
        }
    }
    let mut b = Bundle::new();
    b.text("trajectory.csv", first.to_csv());
    b.text("periodogram.csv", csv);
    let plot = Plot::new("Clock laser frequency noise", "log10 frequency (Hz)", "log10 PSD (Hz^2/Hz)")
        .with(Series::line("averaged periodogram", measured))
        .with(Series::line("model", model));
    b.plot("psd.svg", plot, o.stamp.as_deref());
    let rms = (first.samples.iter().map(|x| x * x).sum::<f64>() / first.samples.len().max(1) as f64).sqrt();
    b.summary = json!({ "samples": first.samples.len(), "rms_detuning_hz": rms });
    Ok(b)
}

fn psd_of(cfg: &ExperimentConfig) -> tweezer_clock::Result<ClockPsd> {
    cfg.noise.psd.ok_or_else(|| tweezer_clock::Error::InvalidParameter("noise.psd is required".into()))
}

/// First 1/e crossing by log-linear interpolation.
fn efold_time(times: &[f64], c: &[f64]) -> Option<f64> {
    let target = 1.0 / E;
    (1..c.len()).find(|&i| c[i] <= target && c[i - 1] > target).map(|i| {
        let (l0, l1) = (c[i - 1].ln(), c[i].ln());
        let w = (target.ln() - l0) / (l1 - l0);
        times[i - 1] + w * (times[i] - times[i - 1])
    })
}

fn run_ramsey(cfg: &ExperimentConfig, o: &RunOptions) -> tweezer_clock::Result<Bundle> {
    let psd = psd_of(cfg)?;
    let mut times = scan(cfg);
    times.sort_by(f64::total_cmp);
    let c = ramsey_curve(&psd, &times, shots(cfg), cfg.seed)?;
    let mut csv = String::from("dark_time_s,contrast\n");
    for (t, x) in times.iter().zip(&c) {
        let _ = writeln!(csv, "{t:.9e},{x:.9}");
    }
    let mut b = Bundle::new();
    b.text("ramsey.csv", csv);
    let t_e = efold_time(&times, &c);
    let summary = json!({ "coherence_time_s": t_e, "trajectories": shots(cfg) });
    b.json("coherence.json", &summary);
    let err = 1.0 / (shots(cfg) as f64).sqrt();
    let plot = Plot::new("Ramsey contrast", "dark time (s)", "contrast")
        .with(Series::markers("simulation", times.iter().zip(&c).map(|(&t, &x)| (t, x, err))));
    b.plot("ramsey.svg", plot, o.stamp.as_deref());
    b.summary = summary;
    Ok(b)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SpinLockParams {
    rabi: f64,
    duration: f64,
}

impl Default for SpinLockParams {
    fn default() -> Self {
        SpinLockParams { rabi: 1e3, duration: 0.05 }
    }
}

fn run_spin_lock(cfg: &ExperimentConfig, o: &RunOptions) -> tweezer_clock::Result<Bundle> {
    let p: SpinLockParams = params(cfg)?;
    let r = simulate_spin_lock(&psd_of(cfg)?, p.rabi, p.duration, shots(cfg), cfg.seed)?;
    let mut csv = String::from("time_s,p1\n");
    for (t, x) in r.times.iter().zip(&r.p1) {
        let _ = writeln!(csv, "{t:.9e},{x:.9}");
    }
    let mut b = Bundle::new();
    b.text("spinlock.csv", csv);
    let summary = json!({ "gamma": r.gamma, "gamma_err": r.gamma_err, "amplitude": r.amplitude, "decayed": r.decayed });
    b.json("fit.json", &summary);
    let model = r.times.iter().map(|&t| (t, 0.5 + r.amplitude * (-r.gamma * t).exp()));
    let plot = Plot::new("Spin-lock decay", "lock time (s)", "P(1)")
        .with(Series::line("simulation", r.times.iter().copied().zip(r.p1.iter().copied())))
        .with(Series::line("fit", model));
    b.plot("spinlock.svg", plot, o.stamp.as_deref());
    b.summary = summary;
    Ok(b)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct IdleParams {
    echo: bool,
    phases: usize,
}

impl Default for IdleParams {
    fn default() -> Self {
        IdleParams { echo: false, phases: 12 }
    }
}

fn run_idle(cfg: &ExperimentConfig, o: &RunOptions) -> tweezer_clock::Result<Bundle> {
    let p: IdleParams = params(cfg)?;
    let idle = scan(cfg);
    let sweep = ghz_idle_sweep(&cfg.timing(), &cfg.noise.context(), &idle, p.echo, p.phases, shots(cfg), cfg.seed)?;
    let mut csv = String::from("idle_time_s,contrast,contrast_err,target_population,leading_error\n");
    for s in &sweep {
        let lead = s.errors.first().map_or("", |e| e.0.as_str());
        let _ = writeln!(csv, "{:.9e},{:.9},{:.9},{:.9},{lead}", s.idle_time, s.fit.contrast, s.fit.contrast_err, s.target_population);
    }
    let mut b = Bundle::new();
    b.text("idle.csv", csv);
    b.json("idle.json", &sweep);
    let plot = Plot::new("4-atom GHZ contrast against idle time", "idle time (s)", "parity contrast")
        .with(Series::markers("contrast", sweep.iter().map(|s| (s.idle_time, s.fit.contrast, s.fit.contrast_err))));
    b.plot("idle.svg", plot, o.stamp.as_deref());
    b.summary = json!({ "contrasts": sweep.iter().map(|s| s.fit.contrast).collect::<Vec<_>>() });
    Ok(b)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ParityCheckParams {
    readout: ParityReadout,
    /// Initial guess for the oscillation frequency; twice the frame detuning when absent.
    frequency_guess_hz: Option<f64>,
}

impl Default for ParityCheckParams {
    fn default() -> Self {
        ParityCheckParams { readout: ParityReadout::Ancilla, frequency_guess_hz: None }
    }
}

fn run_parity_check(cfg: &ExperimentConfig, o: &RunOptions) -> tweezer_clock::Result<Bundle> {
    let p: ParityCheckParams = params(cfg)?;
    let t = cfg.timing();
    let ctx = cfg.noise.context();
    let mut data = Vec::new();
    for (i, &tau) in scan(cfg).iter().enumerate() {
        let c = weight2_parity(&t, tau, p.readout, 0.0)?;
        data.push((tau, execute(&c, &ctx, shots(cfg), rng::derive(cfg.seed, i as u64))?));
    }
    let counts: Vec<ParityPoint> = data
        .iter()
        .map(|(tau, table)| {
            let even = match p.readout {
                ParityReadout::Ancilla => table.shots.iter().filter(|s| s.ancilla.first().and_then(|r| r.first()) == Some(&0)).count(),
                ParityReadout::Direct => table.even_parity_counts(&[0, 1]).0,
            };
            ParityPoint { phase: *tau, even: even as u64, total: table.len() as u64 }
        })
        .collect();
    // time in ms keeps the fitted angular frequency of order 100
    let pts: Vec<GaussianPoint> = counts
        .iter()
        .map(|c| GaussianPoint { phase: c.phase * 1e3, value: c.parity(), sigma: binomial_err(c).max(1e-3) })
        .collect();
    let guess = p.frequency_guess_hz.unwrap_or(2.0 * cfg.noise.static_detuning.abs());
    let fit = wls_fit(&pts, 2.0 * PI * guess / 1e3)?;
    let mut csv = String::from("evolution_time_s,even,total,parity\n");
    for c in &counts {
        let _ = writeln!(csv, "{:.9e},{},{},{:.9}", c.phase, c.even, c.total, c.parity());
    }
    let mut b = Bundle::new();
    b.text("shots.csv", shots_csv("evolution_time", &data));
    b.text("parity.csv", csv);
    let summary = json!({
        "frequency_hz": fit.frequency / (2.0 * PI) * 1e3,
        "frequency_err_hz": fit.frequency_err / (2.0 * PI) * 1e3,
        "contrast": fit.contrast,
        "fit_time_unit": "ms",
        "fit": fit,
    });
    b.json("fit.json", &summary);
    let hi = counts.last().map_or(0.0, |c| c.phase);
    let line = (0..=300).map(|i| hi * i as f64 / 300.0).map(|x| (x, fit.eval(x * 1e3)));
    let plot = Plot::new("Weight-2 parity", "evolution time (s)", "parity")
        .with(Series::markers("data", counts.iter().map(|c| (c.phase, c.parity(), binomial_err(c)))))
        .with(Series::line("fit", line));
    b.plot("parity.svg", plot, o.stamp.as_deref());
    b.summary = json!({ "frequency_hz": summary["frequency_hz"] });
    Ok(b)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GainSizeParams {
    copies: usize,
    prior_width: f64,
    prior_mode: PriorMode,
    /// One curve per per-qubit fidelity.
    f0: Vec<f64>,
}

impl Default for GainSizeParams {
    fn default() -> Self {
        GainSizeParams { copies: 6, prior_width: 0.7, prior_mode: PriorMode::Truncated, f0: vec![1.0, 0.996] }
    }
}

fn check_gain_size(cfg: &ExperimentConfig) -> Vec<String> {
    let mut out = match cfg.params::<GainSizeParams>() {
        Err(e) => return vec![e],
        Ok(p) => gain_checks(p.copies, p.prior_width, &p.f0),
    };
    if !scan(cfg).iter().all(|&m| (1.0..=6.0).contains(&m) && m.fract() == 0.0) {
        out.push("scan.values (cascade levels) must be integers in 1..=6".into());
    }
    out
}

fn gain_checks(copies: usize, width: f64, f0: &[f64]) -> Vec<String> {
    let mut out = vec![];
    if copies == 0 {
        out.push("params.copies must be positive".into());
    }
    if !(width > 0.0) {
        out.push("params.prior_width must be positive".into());
    }
    if f0.is_empty() || f0.iter().any(|f| !(0.0..=1.0).contains(f)) {
        out.push("fidelities must lie in [0, 1]".into());
    }
    out
}

#[derive(Serialize)]
struct GainRow {
    levels: usize,
    max_size: usize,
    n_atoms: usize,
    f0: f64,
    gain: f64,
    gain_db: f64,
    figure_of_merit: f64,
}

fn run_gain_size(cfg: &ExperimentConfig, o: &RunOptions) -> tweezer_clock::Result<Bundle> {
    let p: GainSizeParams = params(cfg)?;
    let levels: Vec<usize> = scan(cfg).iter().map(|&m| m as usize).collect();
    let mut problems = Vec::new();
    let mut rows = Vec::new();
    for &f0 in &p.f0 {
        for &m in &levels {
            let layout = CascadeLayout::uniform(m, p.copies)?;
            let problem = GainProblem {
                prior_mode: p.prior_mode,
                ..GainProblem::new(layout, ContrastModel::PerQubitFidelity { f0 }, p.prior_width)
            };
            let r = problem.estimate_gain()?;
            rows.push(GainRow {
                levels: m,
                max_size: problem.layout.max_size(),
                n_atoms: r.n_atoms,
                f0,
                gain: r.gain,
                gain_db: r.gain_db,
                figure_of_merit: r.figure_of_merit,
            });
            problems.push(problem);
        }
    }
    let mut csv = String::from("levels,max_size,n_atoms,f0,gain,gain_db,figure_of_merit\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{},{:.9},{:.9},{:.9}", r.levels, r.max_size, r.n_atoms, r.f0, r.gain, r.gain_db, r.figure_of_merit);
    }
    let mut b = Bundle::new();
    b.text("gain.csv", csv);
    b.json("problems.json", &problems);
    b.json("results.json", &rows);
    let mut plot = Plot::new("Gain against largest GHZ size", "largest GHZ size", "gain");
    for &f0 in &p.f0 {
        let pts = rows.iter().filter(|r| r.f0 == f0).map(|r| (r.max_size as f64, r.gain));
        plot = plot.with(Series::line(&format!("F0 = {f0}"), pts));
    }
    b.plot("gain.svg", plot, o.stamp.as_deref());
    b.summary = json!({ "gains": rows.iter().map(|r| r.gain).collect::<Vec<_>>() });
    Ok(b)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GainFidelityParams {
    copies: usize,
    prior_width: f64,
    /// One curve per number of cascade levels.
    levels: Vec<usize>,
}

impl Default for GainFidelityParams {
    fn default() -> Self {
        GainFidelityParams { copies: 6, prior_width: 0.7, levels: vec![2, 3, 4] }
    }
}

fn check_gain_fidelity(cfg: &ExperimentConfig) -> Vec<String> {
    match cfg.params::<GainFidelityParams>() {
        Err(e) => vec![e],
        Ok(p) => {
            let mut out = gain_checks(p.copies, p.prior_width, &scan(cfg));
            if p.levels.is_empty() || p.levels.iter().any(|m| !(1..=6).contains(m)) {
                out.push("params.levels must be integers in 1..=6".into());
            }
            out
        }
    }
}

fn run_gain_fidelity(cfg: &ExperimentConfig, o: &RunOptions) -> tweezer_clock::Result<Bundle> {
    let p: GainFidelityParams = params(cfg)?;
    let f0 = scan(cfg);
    let mut csv = String::from("levels,max_size,f0,gain\n");
    let mut curves = Vec::new();
    let mut problems = Vec::new();
    let mut plot = Plot::new("Gain against per-qubit fidelity", "F0", "gain");
    for &m in &p.levels {
        let curve = gain_vs_fidelity(m, p.copies, p.prior_width, &f0)?;
        let size = 1usize << (m - 1);
        for (f, g) in &curve {
            let _ = writeln!(csv, "{m},{size},{f},{g:.9}");
        }
        plot = plot.with(Series::line(&format!("sizes to {size}"), curve.iter().copied()));
        // the per-qubit fidelity of these problems is the scanned variable
        problems.push(json!({ "layout": CascadeLayout::uniform(m, p.copies)?, "prior_width": p.prior_width, "contrast": "per_qubit_fidelity" }));
        curves.push(json!({ "levels": m, "max_size": size, "points": curve }));
    }
    let mut b = Bundle::new();
    b.text("gain.csv", csv);
    b.json("problems.json", &problems);
    b.json("results.json", &curves);
    b.plot("gain.svg", plot, o.stamp.as_deref());
    b.summary = json!({ "curves": p.levels.len(), "points": f0.len() });
    Ok(b)
}
