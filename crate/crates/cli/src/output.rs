//! Where reports go and how they are written.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Overrides the default output directory when `--out-dir` is absent.
pub const OUT_DIR_ENV: &str = "KGSERIES_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "kgseries-out";

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    /// Flag first, then the environment, then the default.
    pub fn resolve(flag: Option<PathBuf>) -> Self {
        let root = flag
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        Self { root }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.root)?;
        let path = self.root.join(name);
        std::fs::write(&path, text)?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
        text.push('\n');
        self.write_text(name, &text)
    }
}
