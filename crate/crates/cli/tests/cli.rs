use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const STAGES: [&str; 13] = [
    "ingest",
    "classify-events",
    "filter",
    "kappa",
    "build-graph",
    "dab",
    "classify",
    "polarity",
    "centrality",
    "stats",
    "terms",
    "export-gexf",
    "report",
];

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic")
}

fn incite(config: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_incite"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

/// Copies the fixture config into `dir` with absolute input paths, then
/// applies `edit`.
fn config_with(dir: &Path, edit: impl FnOnce(&mut toml::Table)) -> PathBuf {
    let text = fs::read_to_string(fixture().join("config.toml")).unwrap();
    let mut cfg: toml::Table = text.parse().unwrap();
    let paths = cfg["paths"].as_table_mut().unwrap();
    for (key, value) in paths.iter_mut() {
        if key != "output" {
            let abs = fixture().join(value.as_str().unwrap());
            *value = toml::Value::String(abs.to_string_lossy().into_owned());
        }
    }
    edit(&mut cfg);
    let path = dir.join("config.toml");
    fs::write(&path, toml::to_string(&cfg).unwrap()).unwrap();
    path
}

/// Artifact contents by file name, without the run manifest.
fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .filter(|(name, _)| name != "manifest.json")
        .collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn assert_ok(out: &Output) {
    assert!(out.status.success(), "{:?}: {}", out.status, String::from_utf8_lossy(&out.stderr));
}

#[test]
fn repeated_runs_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let config = fixture().join("config.toml");
    assert_ok(&incite(&config, &a, &["all"]));
    assert_ok(&incite(&config, &b, &["all", "--threads", "2"]));
    assert_eq!(artifacts(&a), artifacts(&b));
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["stages"], mb["stages"]);
    assert_eq!(ma["inputs"], mb["inputs"]);
    assert_eq!(ma["config_sha256"], mb["config_sha256"]);
}

#[test]
fn subcommands_reproduce_all() {
    let tmp = tempfile::tempdir().unwrap();
    let (whole, parts) = (tmp.path().join("all"), tmp.path().join("parts"));
    let config = fixture().join("config.toml");
    assert_ok(&incite(&config, &whole, &["all"]));
    let all_stages = manifest(&whole)["stages"].as_object().unwrap().clone();
    for stage in STAGES {
        assert_ok(&incite(&config, &parts, &[stage]));
        let m = manifest(&parts);
        assert_eq!(m["command"], stage);
        let own = m["stages"].as_object().unwrap();
        assert_eq!(own.len(), 1, "{stage} wrote stages {:?}", own.keys());
        assert_eq!(own[stage], all_stages[stage], "{stage} artifacts differ from the full run");
    }
    assert_eq!(artifacts(&parts), artifacts(&whole));
}

#[test]
fn zero_diffusion_steps_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = config_with(tmp.path(), |cfg| {
        cfg["dab"].as_table_mut().unwrap().insert("steps".into(), toml::Value::Integer(0));
    });
    let out_dir = tmp.path().join("out");
    let out = incite(&config, &out_dir, &["dab"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dab.steps"));
    assert!(!out_dir.join("dab.csv").exists());
}

#[test]
fn malformed_configs_exit_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");

    let unknown = config_with(tmp.path(), |cfg| {
        cfg["dab"].as_table_mut().unwrap().insert("step".into(), toml::Value::Integer(2));
    });
    assert_eq!(incite(&unknown, &out_dir, &["ingest"]).status.code(), Some(2));

    let missing_input = config_with(tmp.path(), |cfg| {
        let paths = cfg["paths"].as_table_mut().unwrap();
        paths.insert("tweets".into(), toml::Value::String("/nonexistent/tweets.jsonl".into()));
    });
    assert_eq!(incite(&missing_input, &out_dir, &["ingest"]).status.code(), Some(2));

    let garbage = tmp.path().join("garbage.toml");
    fs::write(&garbage, "[paths\ntweets = ").unwrap();
    assert_eq!(incite(&garbage, &out_dir, &["ingest"]).status.code(), Some(2));

    assert_eq!(incite(&tmp.path().join("absent.toml"), &out_dir, &["ingest"]).status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn unreadable_lexicon_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let lexica = tmp.path().join("lexica.jsonl");
    fs::write(&lexica, "{\"event\": \"CAA_NRC\"\n").unwrap();
    let config = config_with(tmp.path(), |cfg| {
        let paths = cfg["paths"].as_table_mut().unwrap();
        paths.insert("lexica".into(), toml::Value::String(lexica.to_string_lossy().into_owned()));
    });
    let out = incite(&config, &tmp.path().join("out"), &["ingest"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn event_filter_restricts_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = incite(&fixture().join("config.toml"), &out_dir, &["kappa", "--event", "COVID19"]);
    assert_ok(&out);
    let kappa = fs::read_to_string(out_dir.join("kappa.csv")).unwrap();
    let events: Vec<&str> = kappa.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(events, ["COVID19"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("COVID19"));
    assert_eq!(manifest(&out_dir)["events"], serde_json::json!(["COVID19"]));
}

#[test]
fn seed_override_only_moves_bootstrap_intervals() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let config = fixture().join("config.toml");
    assert_ok(&incite(&config, &a, &["stats"]));
    assert_ok(&incite(&config, &b, &["stats", "--seed", "8"]));
    let (fa, fb) = (artifacts(&a), artifacts(&b));
    assert_eq!(fa["stats.csv"], fb["stats.csv"]);
    assert_ne!(fa["medians.csv"], fb["medians.csv"]);
    assert_eq!(manifest(&b)["seed"], 8);
}
