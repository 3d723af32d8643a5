//! Result files: CSV series, JSON summaries and the run manifest.

use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("cannot serialize {}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
}

/// Collects the files a run writes below one directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

/// Empty string for a missing or non-finite value, so no CSV cell reads `NaN`.
pub fn cell(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => v.to_string(),
        _ => String::new(),
    }
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, OutputError> {
        fs::create_dir_all(root).map_err(|source| OutputError::Io { path: root.to_path_buf(), source })?;
        Ok(OutputDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), OutputError> {
        let path = self.path(name);
        let wrap = |source| OutputError::Csv { path: path.clone(), source };
        let mut w = csv::Writer::from_path(&path).map_err(wrap)?;
        w.write_record(header).map_err(wrap)?;
        for r in rows {
            w.write_record(r).map_err(wrap)?;
        }
        w.flush().map_err(|source| OutputError::Io { path: path.clone(), source })?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes through a caller-supplied serializer, e.g. a training log.
    pub fn write_with<F>(&mut self, name: &str, f: F) -> Result<(), OutputError>
    where
        F: FnOnce(fs::File) -> std::io::Result<()>,
    {
        let path = self.path(name);
        let file = fs::File::create(&path).map_err(|source| OutputError::Io { path: path.clone(), source })?;
        f(file).map_err(|source| OutputError::Io { path, source })?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), OutputError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|source| OutputError::Json { path: path.clone(), source })?;
        text.push('\n');
        fs::write(&path, text).map_err(|source| OutputError::Io { path, source })?;
        self.written.push(name.to_string());
        Ok(())
    }
}

/// Everything needed to rerun a result: the config echo and the seed.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub seed: u64,
    pub status: &'a str,
    pub files: &'a [String],
    pub config: &'a str,
}
