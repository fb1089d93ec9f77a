//! Batch runner for the tweezer-clock experiments.

pub mod config;
pub mod experiments;

use config::ExperimentConfig;
use experiments::{Bundle, RunOptions};
use serde_json::json;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

/// Failure classes, mapped to exit codes 2 and 3.
#[derive(Debug)]
pub enum CliError {
    Config(Vec<String>),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(d) => write!(f, "configuration error:\n  {}", d.join("\n  ")),
            CliError::Runtime(e) => write!(f, "runtime failure: {e}"),
        }
    }
}

pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub deterministic: bool,
    pub threads: Option<usize>,
}

/// Parse and validate config text, returning the config and its diagnostics.
pub fn validate_text(text: &str) -> Result<(ExperimentConfig, Vec<String>), CliError> {
    let cfg = config::parse(text).map_err(|e| CliError::Config(vec![e]))?;
    let Some(exp) = experiments::find(&cfg.experiment) else {
        return Err(CliError::Config(vec![format!("unknown experiment {:?}; see list-experiments", cfg.experiment)]));
    };
    let d = exp.diagnostics(&cfg);
    Ok((cfg, d))
}

pub fn read_config(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(vec![format!("cannot read {}: {e}", path.display())]))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Run a validated config and write its artifacts and manifest. Returns the output directory.
pub fn run_text(text: &str, o: &Overrides) -> Result<PathBuf, CliError> {
    let (mut cfg, diagnostics) = validate_text(text)?;
    if !diagnostics.is_empty() {
        return Err(CliError::Config(diagnostics));
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    let out = o
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.experiment));
    let now = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let opts = RunOptions { stamp: (!o.deterministic).then(|| format!("unix {now}")) };
    let exp = experiments::find(&cfg.experiment).expect("validated");
    let bundle = exp.run(&cfg, &opts).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_bundle(&out, &cfg, text, &bundle, o, now).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    Ok(out)
}

fn write_bundle(out: &Path, cfg: &ExperimentConfig, text: &str, b: &Bundle, o: &Overrides, now: u64) -> std::io::Result<()> {
    fs::create_dir_all(out)?;
    for f in &b.files {
        fs::write(out.join(&f.name), &f.bytes)?;
    }
    let files: Vec<_> = b
        .files
        .iter()
        .map(|f| json!({ "name": f.name, "bytes": f.bytes.len(), "sha256": sha256_hex(&f.bytes) }))
        .collect();
    let mut m = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "library_version": tweezer_clock::VERSION,
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "config_sha256": sha256_hex(text.as_bytes()),
        "deterministic": o.deterministic,
        "files": files,
        "summary": b.summary,
    });
    if !o.deterministic {
        m["created_unix"] = json!(now);
        m["threads"] = json!(o.threads);
    }
    let mut s = serde_json::to_string_pretty(&m).expect("manifest serializes");
    s.push('\n');
    fs::write(out.join("manifest.json"), s)
}
