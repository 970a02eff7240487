pub mod eval;
pub mod frame;
pub mod tools;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mirror_depth::geometry::CameraIntrinsics;
use mirror_depth::Error;
use serde::{Deserialize, Serialize};

/// How a command finished when it did not hit a fatal error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Some instances or frames failed; their errors are in the outputs.
    Partial,
}

impl Status {
    pub fn from_failures(failures: usize) -> Self {
        if failures == 0 {
            Status::Ok
        } else {
            Status::Partial
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        Self {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Pretty JSON on stdout. A closed pipe (e.g. `| head`) is not an error.
pub fn print_json<T: Serialize>(value: &T) -> Result<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value)?;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

pub fn read_intrinsics(path: &Path) -> Result<CameraIntrinsics> {
    let k: CameraIntrinsics = read_json(path)?;
    k.validate()
        .with_context(|| format!("invalid intrinsics in {}", path.display()))?;
    Ok(k)
}

/// Resolve `rel` against the directory holding `file`.
pub fn resolve(file: &Path, rel: &str) -> PathBuf {
    let rel = Path::new(rel);
    if rel.is_absolute() {
        rel.to_path_buf()
    } else {
        file.parent().unwrap_or(Path::new("")).join(rel)
    }
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
