//! Every command leaves a JSON manifest beside its primary output: the exact
//! argv, seeds and version needed to reproduce the files. Re-running the
//! recorded argv yields byte-identical data outputs; the manifest itself
//! carries wall time and a timestamp, so it is the one file excluded from
//! byte-level determinism.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::errors::CliResult;
use crate::formats::write_atomic;

pub const OUT_DIR_ENV: &str = "PAMM_OUT_DIR";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub wall_ms: f64,
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64, argv: Vec<String>) -> Self {
        Self {
            tool: "pamm",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.into(),
            argv,
            seed,
            outputs: Vec::new(),
            wall_ms: 0.0,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }
}

pub fn manifest_path(primary_output: &Path) -> PathBuf {
    let mut name = primary_output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    primary_output.with_file_name(name)
}

/// Serializes next to the first recorded output.
pub fn write_manifest(m: &RunManifest) -> CliResult<PathBuf> {
    let primary = m
        .outputs
        .first()
        .map(PathBuf::from)
        .ok_or_else(|| crate::errors::CliError::usage("a run must record at least one output"))?;
    let path = manifest_path(&primary);
    let mut bytes = serde_json::to_vec_pretty(m).expect("manifest serialization cannot fail");
    bytes.push(b'\n');
    write_atomic(&path, &bytes)?;
    Ok(path)
}

pub fn resolve_output(path: &Path) -> PathBuf {
    resolve_output_with(std::env::var(OUT_DIR_ENV).ok().as_deref(), path)
}

/// Relative paths land under the default output directory when one is
/// configured; absolute paths are taken as given.
pub fn resolve_output_with(base: Option<&str>, path: &Path) -> PathBuf {
    match base {
        Some(dir) if !dir.is_empty() && path.is_relative() => Path::new(dir).join(path),
        _ => path.to_path_buf(),
    }
}
