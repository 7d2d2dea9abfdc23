//! Output directory handling and run manifests.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use missrate_core::manifest::RunManifest;
use serde::Serialize;

/// Collects the files a command writes and records them in `manifest.json`.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
    manifest: RunManifest,
    started: Instant,
}

impl OutputDir {
    pub fn create(root: &Path, command: &str, config: serde_json::Value, seed: u64) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
            manifest: RunManifest::new(command, config, seed),
            started: Instant::now(),
        })
    }

    /// Path for a relative output file, creating parent directories.
    pub fn path(&mut self, rel: &str) -> Result<PathBuf> {
        let p = self.root.join(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        self.written.push(rel.to_string());
        Ok(p)
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> Result<()> {
        let p = self.path(rel)?;
        std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        self.write_text(rel, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    pub fn finish(mut self) -> Result<()> {
        self.manifest.finish(self.started.elapsed(), self.written);
        self.manifest.save(self.root.join("manifest.json"))?;
        Ok(())
    }
}
