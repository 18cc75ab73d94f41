//! On-disk formats. Everything structured is JSON; per-step series are CSV.

mod catalog;
mod runlog;
mod scenario;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use catalog::{apply_catalog_file, catalog_to_string, load_catalog_file, CATALOG_FORMAT_VERSION};
pub use runlog::{load_run_log, run_log_csv, run_log_file_stem, save_run_log, step_rows, StepRow};
pub use scenario::{load_scenario, save_scenario, scenario_from_str, scenario_to_string, SCENARIO_FORMAT_VERSION};

use crate::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `contents`, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory values serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

/// Rejects files whose `format_version` is missing or not `expected`.
pub(crate) fn check_version(text: &str, expected: u32) -> std::result::Result<(), String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    match value.get("format_version") {
        None => Err("missing field `format_version`".into()),
        Some(v) if v.as_u64() == Some(u64::from(expected)) => Ok(()),
        Some(v) => Err(format!("unsupported format_version {v} (expected {expected})")),
    }
}
