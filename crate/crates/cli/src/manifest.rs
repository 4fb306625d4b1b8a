//! Deterministic run manifests.
//!
//! Every invocation writes its artifacts through an [`ArtifactWriter`] that
//! records a SHA-256 of each file, then closes the run with a
//! `manifest.json` naming the command, the hash of the config text, the
//! effective seed, any command-line overrides and every emitted file with
//! its content hash.  The manifest carries no timestamps and no absolute
//! paths, so identical runs produce identical manifests byte for byte.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Hex SHA-256 of a byte string.
#[must_use]
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// The closing record of one invocation.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    /// Subcommand name as invoked.
    pub command: String,
    /// SHA-256 of the raw config text.
    pub config_sha256: String,
    /// Effective seed (config value unless overridden).
    pub seed: u64,
    /// Command-line overrides applied on top of the config.
    pub overrides: BTreeMap<String, String>,
    /// Every emitted file, name to content hash.
    pub files: BTreeMap<String, String>,
}

/// Writes artifacts under one directory, filtered by the configured formats,
/// and accumulates their hashes for the manifest.
pub struct ArtifactWriter {
    directory: PathBuf,
    formats: BTreeSet<String>,
    files: BTreeMap<String, String>,
}

impl ArtifactWriter {
    /// Creates `directory` (and parents) if needed.
    pub fn new(directory: &Path, formats: &[String]) -> anyhow::Result<Self> {
        fs::create_dir_all(directory)
            .with_context(|| format!("creating output directory {}", directory.display()))?;
        Ok(Self {
            directory: directory.to_path_buf(),
            formats: formats.iter().cloned().collect(),
            files: BTreeMap::new(),
        })
    }

    /// Writes `name` when its extension is among the configured formats;
    /// silently skips it otherwise.  Returns whether the file was written.
    pub fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<bool> {
        let extension = name.rsplit('.').next().unwrap_or_default();
        if !self.formats.contains(extension) {
            return Ok(false);
        }
        let path = self.directory.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files
            .insert(name.to_string(), sha256_hex(contents.as_bytes()));
        Ok(true)
    }

    /// Names and hashes of everything written so far.
    #[must_use]
    pub fn files(&self) -> &BTreeMap<String, String> {
        &self.files
    }

    /// Writes `manifest.json` listing every artifact and closes the run.
    pub fn finish(
        self,
        command: &str,
        config_sha256: String,
        seed: u64,
        overrides: BTreeMap<String, String>,
    ) -> anyhow::Result<()> {
        let manifest = Manifest {
            command: command.to_string(),
            config_sha256,
            seed,
            overrides,
            files: self.files,
        };
        let text = memsde_core::io::to_json_pretty(&manifest)?;
        let path = self.directory.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
