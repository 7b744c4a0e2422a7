//! Output staging. Commands collect every file in memory and the whole set
//! is written only after the command has succeeded, so a failed run leaves
//! no partial outputs behind.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::settings::Settings;

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG_ECHO: &str = "run.conf";

#[derive(Default)]
pub struct Artifacts {
    files: Vec<(PathBuf, Vec<u8>)>,
    inputs: Vec<Value>,
}

pub fn sha256_file(path: &Path) -> CliResult<(String, u64)> {
    let bytes = fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

impl Artifacts {
    /// Records an input file's digest.
    pub fn input(&mut self, role: &str, path: &Path) -> CliResult<()> {
        let (sha, bytes) = sha256_file(path)?;
        self.inputs.push(json!({
            "role": role,
            "path": path.display().to_string(),
            "sha256": sha,
            "bytes": bytes,
        }));
        Ok(())
    }

    pub fn add(&mut self, name: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    /// Adds a file produced by a writer callback.
    pub fn write_with<E>(
        &mut self,
        name: impl Into<PathBuf>,
        f: impl FnOnce(&mut Vec<u8>) -> Result<(), E>,
    ) -> CliResult<()>
    where
        E: std::fmt::Display,
    {
        let name = name.into();
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| CliError::data(format!("{}: {e}", name.display())))?;
        self.add(name, buf);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    /// Writes every staged file plus the manifest and config echo.
    pub fn commit(mut self, out: &Path, command: &str, settings: &Settings, details: Value) -> CliResult<()> {
        let seed: Option<u64> = settings.parse("seed")?;
        let manifest = json!({
            "format": "netmix-run-manifest",
            "version": 1,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "seed": seed,
            "config": settings.values(),
            "inputs": self.inputs,
            "outputs": self.files.iter().map(|(p, _)| p.display().to_string()).collect::<Vec<_>>(),
            "details": details,
        });
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        self.add(MANIFEST, text.into_bytes());
        self.add(
            CONFIG_ECHO,
            format!("# netmix {command}\n{}", settings.to_config_text()).into_bytes(),
        );
        for (name, bytes) in &self.files {
            let path = out.join(name);
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
            }
            fs::write(&path, bytes).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}
