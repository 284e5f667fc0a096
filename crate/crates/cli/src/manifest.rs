//! Run manifest written next to every output: enough to reproduce the run
//! byte for byte (timing values excepted) and to tell whether the input file
//! changed.

use std::path::Path;

use serde::Serialize;

/// Key order is the struct field order; serde_json preserves it.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub flags: Vec<String>,
    pub seed: u64,
    pub version: String,
    pub wall_time_seconds: f64,
    pub input_digest: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            flags: std::env::args().skip(1).collect(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds: 0.0,
            input_digest: None,
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(dir.join("manifest.json"), body + "\n")
    }
}

/// FNV-1a 64-bit digest of a file's bytes, hex encoded.
pub fn file_digest(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    Ok(format!("fnv1a64:{hash:016x}"))
}
