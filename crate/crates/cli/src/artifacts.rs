use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

const PARTIAL: &str = ".partial";

/// Formats a float with the shortest representation that round-trips.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// In-memory CSV table with a fixed header.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width for {:?}", self.header);
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn to_bytes(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct ArtifactEntry {
    pub rows: usize,
    pub sha256: String,
}

/// Output files of one run. Everything is first written with a `.partial`
/// suffix; `commit` renames them once every stage has succeeded.
pub struct Artifacts {
    dir: PathBuf,
    pending: Vec<String>,
    /// stage -> artifact name -> entry
    stages: BTreeMap<String, BTreeMap<String, ArtifactEntry>>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            pending: Vec::new(),
            stages: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_bytes(&mut self, stage: &str, name: &str, rows: usize, bytes: &[u8]) -> io::Result<()> {
        fs::write(self.dir.join(format!("{name}{PARTIAL}")), bytes)?;
        self.pending.push(name.to_string());
        self.stages.entry(stage.to_string()).or_default().insert(
            name.to_string(),
            ArtifactEntry {
                rows,
                sha256: hex::encode(Sha256::digest(bytes)),
            },
        );
        Ok(())
    }

    pub fn write_table(&mut self, stage: &str, name: &str, table: &Table) -> io::Result<()> {
        self.write_bytes(stage, name, table.len(), &table.to_bytes()?)
    }

    pub fn stages(&self) -> &BTreeMap<String, BTreeMap<String, ArtifactEntry>> {
        &self.stages
    }

    pub fn commit(&mut self) -> io::Result<()> {
        for name in self.pending.drain(..) {
            let final_path = self.dir.join(&name);
            fs::rename(self.dir.join(format!("{name}{PARTIAL}")), final_path)?;
        }
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut f = fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub events: Vec<String>,
    pub inputs: BTreeMap<String, String>,
    pub stages: BTreeMap<String, BTreeMap<String, ArtifactEntry>>,
    pub started_at: String,
    pub finished_at: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_render_shortest() {
        assert_eq!(num(0.84), "0.84");
        assert_eq!(num(2.0), "2");
        assert_eq!(num(-0.0), "0");
        assert_eq!(opt_num(None), "");
    }

    #[test]
    fn partial_files_are_renamed_on_commit() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new(dir.path()).unwrap();
        let mut t = Table::new(&["x", "y"]);
        t.push(vec!["1".into(), "a,b".into()]);
        a.write_table("s", "t.csv", &t).unwrap();
        assert!(dir.path().join("t.csv.partial").exists());
        assert!(!dir.path().join("t.csv").exists());
        a.commit().unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("t.csv")).unwrap(), "x,y\n1,\"a,b\"\n");
        assert_eq!(a.stages()["s"]["t.csv"].rows, 1);
    }
}
