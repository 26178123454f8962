//! Reproducibility plumbing: every run appends a line with a stable hash of
//! its configuration, the seed, and the outcome.

use sha2::{Digest, Sha256};
use std::io::Write;

pub fn config_hash(payload: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(payload.as_bytes());
    let digest = hasher.finalize();
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

pub fn log_path() -> std::path::PathBuf {
    std::env::var_os("FRACJAC_RUNLOG")
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::path::PathBuf::from("fracjac_runs.log"))
}

pub fn append(hash: &str, command: &str, seed: Option<u64>, exit: i32) {
    let line = format!(
        "{hash} cmd={command} seed={} exit={exit}\n",
        seed.map(|s| s.to_string()).unwrap_or_else(|| "-".into())
    );
    if let Ok(mut f) = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(log_path())
    {
        let _ = f.write_all(line.as_bytes());
    }
}
