//! Output artifacts. Files are staged in a hidden directory inside the
//! output directory and renamed into place only when a command succeeds.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Recorded in every artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Serialize)]
struct JsonArtifact<'a, T: Serialize> {
    seed: u64,
    config_hash: &'a str,
    content: &'a T,
}

pub struct ArtifactWriter {
    out_dir: PathBuf,
    staging: tempfile::TempDir,
    files: Vec<String>,
    provenance: Provenance,
}

/// Shortest round-trip representation, or empty for a missing value.
pub fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ArtifactWriter {
    pub fn new(out_dir: &Path, provenance: Provenance) -> std::io::Result<Self> {
        std::fs::create_dir_all(out_dir)?;
        let staging = tempfile::Builder::new().prefix(".staging-").tempdir_in(out_dir)?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            staging,
            files: Vec::new(),
            provenance,
        })
    }

    fn stage(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let mut f = std::fs::File::create(self.staging.path().join(name))?;
        f.write_all(bytes)?;
        if !self.files.iter().any(|n| n == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    /// CSV with a leading `#` comment carrying the provenance.
    pub fn csv<S: AsRef<str>>(&mut self, name: &str, header: &[&str], rows: &[Vec<S>]) -> std::io::Result<()> {
        let mut buf = format!(
            "# seed={} config_hash={}\n",
            self.provenance.seed, self.provenance.config_hash
        )
        .into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r.iter().map(AsRef::as_ref))?;
            }
            w.flush()?;
        }
        self.stage(name, &buf)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, content: &T) -> std::io::Result<()> {
        let doc = JsonArtifact {
            seed: self.provenance.seed,
            config_hash: &self.provenance.config_hash,
            content,
        };
        let mut bytes = serde_json::to_vec_pretty(&doc)?;
        bytes.push(b'\n');
        self.stage(name, &bytes)
    }

    /// Moves every staged file into the output directory.
    pub fn commit(self) -> std::io::Result<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let dest = self.out_dir.join(name);
            std::fs::rename(self.staging.path().join(name), &dest)?;
            written.push(dest);
        }
        Ok(written)
    }
}

/// Reads a CSV artifact, skipping the provenance comment.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), csv::Error> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staged_until_commit() {
        let dir = tempfile::tempdir().unwrap();
        let prov = Provenance {
            seed: 3,
            config_hash: "abc".into(),
        };
        let mut w = ArtifactWriter::new(dir.path(), prov).unwrap();
        w.csv("t.csv", &["a", "b"], &[vec!["1", "x,y"]]).unwrap();
        w.json("t.json", &vec![1, 2]).unwrap();
        assert!(!dir.path().join("t.csv").exists());
        let files = w.commit().unwrap();
        assert_eq!(files.len(), 2);
        let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(text, "# seed=3 config_hash=abc\na,b\n1,\"x,y\"\n");
        let (h, rows) = read_csv(&dir.path().join("t.csv")).unwrap();
        assert_eq!(h, ["a", "b"]);
        assert_eq!(rows, vec![vec!["1".to_string(), "x,y".to_string()]]);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
        assert_eq!(json["seed"], 3);
        assert_eq!(json["content"][1], 2);
        // staging directory is gone
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
    }

    #[test]
    fn dropped_writer_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let prov = Provenance {
            seed: 0,
            config_hash: String::new(),
        };
        let mut w = ArtifactWriter::new(dir.path(), prov).unwrap();
        w.csv::<&str>("t.csv", &["a"], &[]).unwrap();
        drop(w);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
