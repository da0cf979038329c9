//! Runs a resolved configuration and writes its artifacts to the output directory.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigErrors, ExperimentConfig, RawConfig};
use crate::experiments::{self, RunError};
use crate::output::{ensure_writable, write_atomic};

/// Identifier of the `summary.json` layout; see `schema/summary.schema.json`.
pub const SCHEMA: &str = "pharmonic-summary/1";

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Run(#[from] RunError),
}

impl Failure {
    /// Process exit code: 2 for configuration and usage errors, 3 for failed runs.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Io { .. } | Self::Run(_) => 3,
        }
    }

    /// Machine-readable description, printed on stderr by the binary.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Self::Config(e) => json!({"schema": SCHEMA, "status": "invalid-config", "errors": e.errors}),
            Self::Io { path, source } => {
                json!({"schema": SCHEMA, "status": "io-error", "path": path.display().to_string(), "message": source.to_string()})
            }
            Self::Run(e) => json!({
                "schema": SCHEMA,
                "status": "run-failed",
                "stage": e.stage,
                "message": e.source.to_string(),
            }),
        }
    }
}

/// Reads an optional config file and applies `key=value` overrides in order.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig, Failure> {
    let mut raw = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| Failure::Io { path: p.into(), source })?;
            RawConfig::from_ini_str(&text)?
        }
        None => RawConfig::default(),
    };
    let mut errors = Vec::new();
    for o in overrides {
        if let Err(e) = raw.apply_override(o) {
            errors.extend(e.errors);
        }
    }
    if !errors.is_empty() {
        return Err(ConfigErrors { errors }.into());
    }
    Ok(crate::config::validate(&raw)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub schema: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub experiment: &'static str,
    pub config: std::collections::BTreeMap<String, String>,
    pub status: &'static str,
    pub results: serde_json::Value,
    pub files: Vec<String>,
}

/// Runs the experiment and writes `summary.json`, `config.ini`,
/// `profiles.csv`, optionally `surface.csv`, and the SVG images.
pub fn run(cfg: &ExperimentConfig) -> Result<Summary, Failure> {
    let out = &cfg.out;
    ensure_writable(out).map_err(|source| Failure::Io { path: out.clone(), source })?;
    let outcome = experiments::run(cfg)?;
    let mut files = vec![("config.ini".to_string(), cfg.to_ini_string(false).into_bytes())];
    files.push(("profiles.csv".into(), outcome.profiles_csv.into_bytes()));
    if let Some(s) = outcome.surface_csv {
        files.push(("surface.csv".into(), s.into_bytes()));
    }
    for (name, svg) in outcome.images {
        files.push((name, svg.into_bytes()));
    }
    let mut names: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    names.insert(0, "summary.json".into());
    let summary = Summary {
        schema: SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        config_hash: cfg.hash(),
        experiment: cfg.experiment.name(),
        config: cfg.echo(),
        status: "ok",
        results: outcome.results,
        files: names,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    files.push(("summary.json".into(), text.into_bytes()));
    for (name, bytes) in files {
        let path = out.join(name);
        write_atomic(&path, &bytes).map_err(|source| Failure::Io { path, source })?;
    }
    Ok(summary)
}
