//! Run manifest written next to every scenario's outputs.

use std::path::Path;

use serde::Serialize;

use crate::config::{sha256_hex, ExperimentConfig};
use crate::error::Result;
use crate::formats::{read_text, write_json};
use crate::seeds::Seeds;

/// Noise convention recorded with every run.
pub const NOISE_CONVENTION: &str =
    "per-hop noise variance sigma^2 = 10^(dB/10), relative to the channel coefficient variance channel_var";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    /// Path relative to the output directory.
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: String,
    /// Hash of the configuration with output locations removed.
    pub config_sha256: String,
    pub seeds: Seeds,
    pub noise_convention: &'static str,
    pub outputs: Vec<OutputFile>,
}

impl Manifest {
    pub fn new(scenario: &str, config: &ExperimentConfig, seeds: Seeds) -> Result<Self> {
        Ok(Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            scenario: scenario.into(),
            config_sha256: location_free_hash(config)?,
            seeds,
            noise_convention: NOISE_CONVENTION,
            outputs: Vec::new(),
        })
    }

    /// Records `file` (relative to `out_dir`) with the hash of its contents.
    pub fn record(&mut self, out_dir: &Path, file: &str) -> Result<()> {
        let text = read_text(&out_dir.join(file))?;
        self.outputs.push(OutputFile { file: file.into(), sha256: sha256_hex(text.as_bytes()) });
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        write_json(&out_dir.join("manifest.json"), self)
    }
}

/// Config hash that ignores where outputs go and replaces artifact paths by
/// the hash of their contents, so moving files does not change it.
pub fn location_free_hash(config: &ExperimentConfig) -> Result<String> {
    let mut c = config.clone();
    c.out_dir = Default::default();
    c.model_dir = None;
    c.oracle.cache_dir = None;
    for p in [&mut c.mu_artifact, &mut c.noisy_mu_artifact].into_iter().flatten() {
        *p = sha256_hex(read_text(p)?.as_bytes()).into();
    }
    Ok(c.hash())
}
