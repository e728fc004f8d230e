use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Syntax {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub tweets: PathBuf,
    pub users: PathBuf,
    pub annotations: PathBuf,
    pub lexica: PathBuf,
    pub embeddings: PathBuf,
    pub stances: PathBuf,
    pub party_following: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Events {
    /// Events to process; empty means every event in the lexicon file.
    #[serde(default)]
    pub include: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expand {
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dab {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_classes")]
    pub classes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Polarity {
    #[serde(default = "default_polarity_alpha")]
    pub alpha: f64,
    #[serde(default = "default_total_bjp")]
    pub total_bjp: u64,
    #[serde(default = "default_total_inc")]
    pub total_inc: u64,
    #[serde(default)]
    pub stance_provenance: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stats {
    #[serde(default = "default_stats_alpha")]
    pub alpha: f64,
    #[serde(default = "default_bootstrap_n")]
    pub bootstrap_n: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Centrality {
    #[serde(default = "default_eig_tol")]
    pub tol: f64,
    #[serde(default = "default_eig_iter")]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Terms {
    #[serde(default)]
    pub pairs: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    #[serde(default)]
    pub events: Events,
    #[serde(default = "Expand::default")]
    pub expand: Expand,
    #[serde(default = "Dab::default")]
    pub dab: Dab,
    #[serde(default = "Polarity::default")]
    pub polarity: Polarity,
    #[serde(default = "Stats::default")]
    pub stats: Stats,
    #[serde(default = "Centrality::default")]
    pub centrality: Centrality,
    #[serde(default)]
    pub terms: Terms,
    /// Directory the relative paths above are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_tau() -> f64 {
    0.7
}
fn default_max_iter() -> usize {
    10
}
fn default_steps() -> usize {
    incite_core::diffusion::DEFAULT_STEPS
}
fn default_classes() -> usize {
    3
}
fn default_polarity_alpha() -> f64 {
    incite_core::polarity::DEFAULT_ALPHA
}
fn default_total_bjp() -> u64 {
    14094
}
fn default_total_inc() -> u64 {
    12341
}
fn default_stats_alpha() -> f64 {
    0.05
}
fn default_bootstrap_n() -> usize {
    2000
}
fn default_eig_tol() -> f64 {
    1e-10
}
fn default_eig_iter() -> usize {
    10_000
}

impl Default for Expand {
    fn default() -> Self {
        Expand {
            tau: default_tau(),
            max_iter: default_max_iter(),
        }
    }
}

impl Default for Dab {
    fn default() -> Self {
        Dab {
            steps: default_steps(),
            classes: default_classes(),
        }
    }
}

impl Default for Polarity {
    fn default() -> Self {
        Polarity {
            alpha: default_polarity_alpha(),
            total_bjp: default_total_bjp(),
            total_inc: default_total_inc(),
            stance_provenance: String::new(),
        }
    }
}

impl Default for Stats {
    fn default() -> Self {
        Stats {
            alpha: default_stats_alpha(),
            bootstrap_n: default_bootstrap_n(),
            seed: 0,
        }
    }
}

impl Default for Centrality {
    fn default() -> Self {
        Centrality {
            tol: default_eig_tol(),
            max_iter: default_eig_iter(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).map_err(|source| ConfigError::Syntax {
                path: path.to_path_buf(),
                source,
            })?;
        cfg.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// `(relative name, resolved path)` of every input file.
    pub fn inputs(&self) -> Vec<(String, PathBuf)> {
        let p = &self.paths;
        [
            &p.tweets,
            &p.users,
            &p.annotations,
            &p.lexica,
            &p.embeddings,
            &p.stances,
            &p.party_following,
        ]
        .into_iter()
        .map(|rel| (rel.to_string_lossy().replace('\\', "/"), self.resolve(rel)))
        .collect()
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.paths.output)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.dab.steps < 1 {
            return bad(format!("dab.steps must be >= 1, got {}", self.dab.steps));
        }
        if self.dab.classes < 2 {
            return bad(format!("dab.classes must be >= 2, got {}", self.dab.classes));
        }
        if !(self.expand.tau > 0.0 && self.expand.tau <= 1.0) {
            return bad(format!("expand.tau must lie in (0, 1], got {}", self.expand.tau));
        }
        for (name, a) in [("polarity.alpha", self.polarity.alpha), ("stats.alpha", self.stats.alpha)] {
            if !(a > 0.0 && a < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {a}"));
            }
        }
        if self.polarity.total_bjp == 0 || self.polarity.total_inc == 0 {
            return bad("polarity totals must be positive".into());
        }
        if self.stats.bootstrap_n == 0 {
            return bad("stats.bootstrap_n must be positive".into());
        }
        if !(self.centrality.tol > 0.0) || self.centrality.max_iter == 0 {
            return bad("centrality.tol and centrality.max_iter must be positive".into());
        }
        for (rel, path) in self.inputs() {
            if let Err(e) = std::fs::File::open(&path) {
                return bad(format!("input {rel} ({}) is not readable: {e}", path.display()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the parameters and input names; the output directory is
    /// excluded so relocated runs hash alike.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.paths.output = PathBuf::new();
        let text = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[paths]
tweets = "t.jsonl"
users = "u.jsonl"
annotations = "a.jsonl"
lexica = "l.jsonl"
embeddings = "e.jsonl"
stances = "s.jsonl"
party_following = "p.jsonl"
output = "out"
"#;

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg: PipelineConfig = toml::from_str(MINIMAL).unwrap();
        assert_eq!(cfg.dab.steps, 2);
        assert_eq!(cfg.dab.classes, 3);
        assert_eq!(cfg.expand.tau, 0.7);
        assert_eq!(cfg.polarity.total_bjp, 14094);
        assert_eq!(cfg.stats.bootstrap_n, 2000);
    }

    #[test]
    fn digest_ignores_output_dir() {
        let a: PipelineConfig = toml::from_str(MINIMAL).unwrap();
        let b: PipelineConfig = toml::from_str(&MINIMAL.replace("\"out\"", "\"elsewhere\"")).unwrap();
        assert_eq!(a.digest(), b.digest());
        let c: PipelineConfig = toml::from_str(&format!("{MINIMAL}\n[dab]\nsteps = 3\n")).unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<PipelineConfig>(&format!("{MINIMAL}\n[dab]\nstep = 3\n")).is_err());
    }
}
