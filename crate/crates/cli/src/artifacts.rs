use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
struct Entry {
    file: String,
    sha256: String,
    bytes: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config_hash: String,
    config: &'a RunConfig,
    artifacts: &'a [Entry],
}

/// Output directory that remembers what was written and closes with a
/// manifest. Nothing time-dependent goes into the manifest, so re-runs are
/// byte-identical.
pub struct OutDir {
    root: PathBuf,
    command: String,
    entries: Vec<Entry>,
}

impl OutDir {
    pub fn create(root: &Path, command: &str) -> anyhow::Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            command: command.to_string(),
            entries: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> anyhow::Result<()> {
        let bytes = bytes.as_ref();
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.record(name, bytes);
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    /// Registers a file some other writer already produced.
    pub fn adopt(&mut self, name: &str) -> anyhow::Result<()> {
        let bytes =
            std::fs::read(self.path(name)).with_context(|| format!("reading back {name}"))?;
        self.record(name, &bytes);
        Ok(())
    }

    fn record(&mut self, name: &str, bytes: &[u8]) {
        self.entries.retain(|e| e.file != name);
        self.entries.push(Entry {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
    }

    pub fn finish(mut self, config: &RunConfig) -> anyhow::Result<PathBuf> {
        self.entries.sort_by(|a, b| a.file.cmp(&b.file));
        let manifest = Manifest {
            command: &self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed: config.seed(),
            config_hash: config.hash(),
            config,
            artifacts: &self.entries,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.path(MANIFEST);
        std::fs::write(&path, text)?;
        Ok(self.root)
    }
}

/// Column-aligned text rendering of a header plus rows.
pub fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header.to_vec(), &mut out);
    let total: usize = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
    let _ = writeln!(out, "{}", "-".repeat(total));
    for r in rows {
        line(r.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_sorted_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutDir::create(dir.path(), "test").unwrap();
        out.write("b.txt", "bee").unwrap();
        out.write("a.txt", "ay").unwrap();
        out.write("a.txt", "ay again").unwrap();
        out.finish(&RunConfig::default()).unwrap();
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST)).unwrap())
                .unwrap();
        let files: Vec<&str> = m["artifacts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| e["file"].as_str().unwrap())
            .collect();
        assert_eq!(files, ["a.txt", "b.txt"]);
        assert_eq!(
            m["artifacts"][0]["sha256"],
            hex::encode(Sha256::digest(b"ay again"))
        );
        assert_eq!(m["seed"], 42);
    }

    #[test]
    fn tables_align() {
        let rows = vec![
            vec!["2015".to_string(), "0.5".to_string()],
            vec!["AVG".into(), "0.25".into()],
        ];
        let t = text_table(&["cy", "f1"], &rows);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "cy      f1");
        assert_eq!(lines[2], "2015   0.5");
        assert_eq!(
            csv_table(&["cy", "f1"], &rows),
            "cy,f1\n2015,0.5\nAVG,0.25\n"
        );
    }
}
