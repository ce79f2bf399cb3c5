//! Run-directory plumbing: atomic artifact writes and the metadata echo.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;

pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root)
            .with_context(|| format!("creating run directory {}", root.display()))?;
        Ok(RunDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes through a temp file and renames, so partial failures never
    /// leave a half-written artifact behind.
    pub fn write(&self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let target = self.path(name);
        let tmp = self.path(&format!("{name}.tmp"));
        let result = fs::write(&tmp, bytes)
            .with_context(|| format!("writing {}", tmp.display()))
            .and_then(|()| {
                fs::rename(&tmp, &target)
                    .with_context(|| format!("installing {}", target.display()))
            });
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result
    }

    /// Emits `run.json` last: its presence marks a complete run.
    pub fn finish(&self, command: &str, config: serde_json::Value) -> anyhow::Result<()> {
        let meta = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
        });
        self.write("run.json", serde_json::to_string_pretty(&meta)?.as_bytes())
    }
}
