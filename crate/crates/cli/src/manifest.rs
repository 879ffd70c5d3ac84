use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Record of one run: config echo, emitted files, phase timings and errors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Vec<(String, String)>,
    pub artifacts: Vec<Artifact>,
    pub phases: Vec<(String, f64)>,
    pub errors: Vec<String>,
    pub exit_code: i32,
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        Self {
            subcommand: subcommand.into(),
            ..Self::default()
        }
    }

    /// Registers a file already written under `out`.
    pub fn add_artifact(&mut self, out: &Path, path: &Path) -> std::io::Result<()> {
        let meta = fs::metadata(path)?;
        let rel = path.strip_prefix(out).unwrap_or(path);
        self.artifacts.push(Artifact {
            path: rel.display().to_string(),
            bytes: meta.len(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let config: serde_json::Map<String, Value> =
            self.config.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        json!({
            "subcommand": self.subcommand,
            "exit_code": self.exit_code,
            "config": config,
            "artifacts": self.artifacts.iter().map(|a| json!({
                "path": a.path,
                "bytes": a.bytes,
                "sha256": a.sha256,
            })).collect::<Vec<_>>(),
            "phases": self.phases.iter().map(|(name, s)| json!({"name": name, "seconds": s})).collect::<Vec<_>>(),
            "errors": self.errors,
        })
    }

    /// Writes `manifest.json` into `out` and returns its path.
    pub fn write(&self, out: &Path) -> std::io::Result<PathBuf> {
        fs::create_dir_all(out)?;
        let path = out.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.to_json()).expect("manifest values serialize");
        fs::write(&path, text + "\n")?;
        Ok(path)
    }

    /// Checks every listed file exists with the recorded size and checksum.
    pub fn verify(&self, out: &Path) -> std::io::Result<bool> {
        for a in &self.artifacts {
            let p = out.join(&a.path);
            if !p.exists() || fs::metadata(&p)?.len() != a.bytes || sha256_file(&p)? != a.sha256 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
