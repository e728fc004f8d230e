//! Command-line orchestration of the dangerous speech pipeline: config
//! loading, stage execution, artifact writing and the run manifest.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod pipeline;

use std::collections::BTreeMap;

use chrono::{SecondsFormat, Utc};

use artifacts::{sha256_file, Artifacts, RunManifest};
use config::PipelineConfig;
use error::RunError;
use pipeline::{Run, Stage};

/// Runtime overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub event: Option<String>,
    pub out: Option<std::path::PathBuf>,
    pub seed: Option<u64>,
}

/// Runs `stages` in order against the config and writes their artifacts
/// plus `manifest.json`. On failure, files already written keep their
/// `.partial` suffix.
pub fn run(
    command: &str,
    stages: &[Stage],
    mut cfg: PipelineConfig,
    overrides: &Overrides,
) -> Result<RunManifest, RunError> {
    let started_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
    if let Some(seed) = overrides.seed {
        cfg.stats.seed = seed;
    }
    cfg.validate()?;
    let out_dir = match &overrides.out {
        Some(p) => p.clone(),
        None => cfg.output_dir(),
    };
    let mut inputs = BTreeMap::new();
    for (rel, path) in cfg.inputs() {
        inputs.insert(rel, sha256_file(&path)?);
    }
    let mut art = Artifacts::new(&out_dir)?;
    let mut pipeline = Run::new(&cfg, overrides.event.as_deref())?;
    for &stage in stages {
        pipeline.execute(stage, &mut art)?;
    }
    for w in pipeline.warnings() {
        log::warn!("{w}");
    }
    let events = pipeline.event_labels()?.iter().map(ToString::to_string).collect();
    art.commit()?;
    let manifest = RunManifest {
        tool: "incite",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        config_sha256: cfg.digest(),
        seed: cfg.stats.seed,
        events,
        inputs,
        stages: art.stages().clone(),
        started_at,
        finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    let path = art.dir().join("manifest.json");
    std::fs::write(&path, text)?;
    Ok(manifest)
}
