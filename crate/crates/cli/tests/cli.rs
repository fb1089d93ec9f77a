use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tweezer-clock"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .args(["run", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_BELL: &str = r#"
experiment = "bell-parity"
seed = 3
shots = 60

[noise]
psd = { h0 = 3.0, h_alpha = 1414.0, alpha = 2.0, cap = 50.0, f_min = 1.0, f_max = 1e4 }
sample_rate = 2e4

[scan]
variable = "phase"
start = 0.0
stop = 3.14159
points = 8
periodic = true
"#;

#[test]
fn list_experiments_names_every_builder() {
    let o = bin().arg("list-experiments").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for id in ["bell-parity", "ghz-cascade", "ssb", "echo", "gain-vs-size", "gain-vs-fidelity", "clock-noise", "ghz-idle"] {
        assert!(text.contains(id), "{id} missing from\n{text}");
    }
}

#[test]
fn sample_configs_validate_clean() {
    let mut n = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let p = entry.unwrap().path();
        let o = bin().args(["validate", "--config"]).arg(&p).output().unwrap();
        assert!(o.status.success(), "{}: {}", p.display(), stderr(&o));
        assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "ok");
        n += 1;
    }
    assert!(n >= 10);
}

#[test]
fn missing_shots_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "c.toml", &SMALL_BELL.replace("shots = 60\n", ""));
    let o = bin().args(["validate", "--config"]).arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("shots is required"));
    let o = run(&p, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn negative_psd_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "c.toml", &SMALL_BELL.replace("h0 = 3.0", "h0 = -3.0"));
    let o = bin().args(["validate", "--config"]).arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("PSD"), "{}", stderr(&o));
}

#[test]
fn unknown_experiment_and_empty_scan_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "a.toml", &SMALL_BELL.replace("bell-parity", "bell-parrot"));
    let o = bin().args(["validate", "--config"]).arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown experiment"));
    let p = write_config(dir.path(), "b.toml", &SMALL_BELL.replace("points = 8", "points = 0"));
    let o = bin().args(["validate", "--config"]).arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let p = write_config(dir.path(), "c.toml", &format!("{SMALL_BELL}\n[params]\nbogus = 1\n"));
    let o = bin().args(["validate", "--config"]).arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn unreadable_config_is_a_config_error() {
    let o = bin().args(["validate", "--config", "/nonexistent/x.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "c.toml", SMALL_BELL);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = run(&p, &blocker.join("out"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn bell_parity_writes_csv_fit_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "c.toml", SMALL_BELL);
    let out = dir.path().join("out");
    let o = run(&p, &out, &["--deterministic"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let parity = fs::read_to_string(out.join("parity.csv")).unwrap();
    assert_eq!(parity.lines().count(), 9);
    assert!(parity.starts_with("phase,even,total,parity"));
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["method"], "mle_beta");
    assert!(fit["contrast"].as_f64().unwrap() > 0.5);
    let svg = fs::read_to_string(out.join("fringe.svg")).unwrap();
    assert!(svg.starts_with("<svg") && !svg.contains("generated"));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 3);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["files"].as_array().unwrap().len(), 4);
    assert!(m.get("created_unix").is_none());
}

#[test]
fn plots_carry_a_timestamp_outside_deterministic_mode() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "c.toml", SMALL_BELL);
    let out = dir.path().join("out");
    assert!(run(&p, &out, &[]).status.success());
    assert!(fs::read_to_string(out.join("fringe.svg")).unwrap().contains("generated"));
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "c.toml", SMALL_BELL);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert!(run(&p, &a, &["--deterministic", "--threads", "1"]).status.success());
    assert!(run(&p, &b, &["--deterministic", "--threads", "3"]).status.success());
    assert_eq!(read_all(&a), read_all(&b));
    // a different seed changes the shots
    assert!(run(&p, &c, &["--deterministic", "--seed", "4"]).status.success());
    assert_ne!(fs::read(a.join("shots.csv")).unwrap(), fs::read(c.join("shots.csv")).unwrap());
}

#[test]
fn noiseless_ssb_returns_with_certainty() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
experiment = "ssb"
seed = 9
shots = 20

[scan]
variable = "n_gates"
values = [2, 6, 12, 20]

[params]
layers = 20
circuits = 5
"#;
    let p = write_config(dir.path(), "c.toml", text);
    let out = dir.path().join("out");
    let o = run(&p, &out, &["--deterministic"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let decay = fs::read_to_string(out.join("decay.csv")).unwrap();
    let depths: Vec<&str> = decay.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(depths, ["2", "6", "12", "20"]);
    let f: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fidelity.json")).unwrap()).unwrap();
    assert!((f["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn gain_curves_rise_with_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
experiment = "gain-vs-fidelity"

[scan]
variable = "f0"
values = [0.95, 0.98, 1.0]

[params]
copies = 6
prior_width = 0.7
levels = [2, 3]
"#;
    let p = write_config(dir.path(), "c.toml", text);
    let out = dir.path().join("out");
    let o = run(&p, &out, &["--deterministic"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("gain.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 6);
    for curve in rows.chunks(3) {
        assert!(curve.windows(2).all(|w| w[1][3] > w[0][3]), "{curve:?}");
    }
    assert!(out.join("gain.svg").exists() && out.join("problems.json").exists());
}

#[test]
fn clock_noise_trajectory_has_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&configs().join("clock_noise.toml"), &out, &["--deterministic"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(t.starts_with("time_s,detuning_hz\n"));
    assert_eq!(t.lines().count(), 2001);
}
