//! Output writers: deterministic report JSON, 17-significant-digit CSV,
//! and the run manifest (the one output allowed to differ between runs,
//! since it carries timestamps and wall clock).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};
use spde_stab::scenarios::TimeSeries;
use spde_stab::Result;

/// Formats a float with 17 significant digits (round-trippable f64).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(path: &Path, series: &TimeSeries) -> Result<()> {
    let mut out = String::new();
    out.push_str(&series.columns.join(","));
    out.push('\n');
    for row in &series.rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out)
        .map_err(|e| spde_stab::Error::Internal(format!("writing {}: {e}", path.display())))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| spde_stab::Error::Internal(format!("serializing JSON: {e}")))?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| spde_stab::Error::Internal(format!("writing {}: {e}", path.display())))
}

pub fn sha256_hex(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Run metadata written next to the deterministic outputs.
#[derive(Debug, serde::Serialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub command: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub scenarios: Vec<String>,
    pub outputs: Vec<String>,
    pub jobs: Option<usize>,
    pub seed_env_override: bool,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub wall_clock_secs: f64,
}

impl RunManifest {
    pub fn start(command: &str, config_text: &str, master_seed: u64) -> Self {
        RunManifest {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: sha256_hex(config_text),
            master_seed,
            scenarios: Vec::new(),
            outputs: Vec::new(),
            jobs: None,
            seed_env_override: false,
            started_unix_ms: unix_ms(),
            finished_unix_ms: 0,
            wall_clock_secs: 0.0,
        }
    }

    pub fn finish(&mut self) {
        self.finished_unix_ms = unix_ms();
        self.wall_clock_secs =
            (self.finished_unix_ms.saturating_sub(self.started_unix_ms)) as f64 / 1000.0;
    }
}

pub fn ensure_out_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)
        .map_err(|e| spde_stab::Error::Internal(format!("creating {}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}
