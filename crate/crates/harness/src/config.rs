//! Experiment configuration files.
//!
//! Noise levels are given in dB relative to the channel variance:
//! `σ² = 10^(dB/10)` on every hop, with `channel_var` (default 1) the
//! variance of each Rayleigh coefficient.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unfolded_pgd_core::adam::AdamParams;
use unfolded_pgd_core::pgd::Calibration;
use unfolded_pgd_core::train::{CsiMode, InitialGuess, TrainConfig};
use unfolded_pgd_core::{NoiseProfile, Topology};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    IterCurve,
    NoiseSweep,
    NoisyRobustness,
    Transfer,
    OracleCompare,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::IterCurve => "iter-curve",
            Scenario::NoiseSweep => "noise-sweep",
            Scenario::NoisyRobustness => "noisy-robustness",
            Scenario::Transfer => "transfer",
            Scenario::OracleCompare => "oracle-compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialGuessSetting {
    Random,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSettings {
    /// Train missing step schedules instead of failing.
    pub enabled: bool,
    pub iterations: usize,
    pub epochs: usize,
    pub batch_count: usize,
    pub learning_rate: f64,
    pub initial_guess: InitialGuessSetting,
    /// Constant step the schedule starts from; calibrated when absent.
    pub initial_step: Option<f64>,
    pub calibration_channels: usize,
    pub calibration_iterations: usize,
    pub calibration_candidates: Vec<f64>,
    pub calibration_tail_fraction: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSettings {
            enabled: true,
            iterations: t.iterations,
            epochs: t.epochs,
            batch_count: t.batch_count,
            learning_rate: t.learning_rate,
            initial_guess: InitialGuessSetting::Random,
            initial_step: t.initial_step,
            calibration_channels: t.calibration_channels,
            calibration_iterations: t.calibration.iterations,
            calibration_candidates: t.calibration.candidates.clone(),
            calibration_tail_fraction: t.calibration.tail_fraction,
            adam_beta1: t.adam.beta1,
            adam_beta2: t.adam.beta2,
            adam_epsilon: t.adam.epsilon,
        }
    }
}

impl TrainSettings {
    pub fn calibration(&self) -> Calibration {
        Calibration {
            candidates: self.calibration_candidates.clone(),
            iterations: self.calibration_iterations,
            tail_fraction: self.calibration_tail_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSettings {
    pub enabled: bool,
    pub resolution: f64,
    /// Directory of cached grid results; `<out_dir>/oracle-cache` when absent.
    pub cache_dir: Option<PathBuf>,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings { enabled: true, resolution: 0.01, cache_dir: None }
    }
}

fn default_channel_var() -> f64 {
    1.0
}
fn default_train_size() -> usize {
    1000
}
fn default_test_size() -> usize {
    200
}
fn default_ensemble() -> usize {
    6
}
fn default_long_run() -> usize {
    2000
}
fn default_true() -> bool {
    true
}
fn default_pilot_scale() -> f64 {
    1.0
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Scenario run by the `run` subcommand.
    #[serde(default)]
    pub scenario: Option<Scenario>,
    /// Hop sizes written as `1xM1x...xMB`.
    pub topology: String,
    /// Topologies the source schedule is transferred to.
    #[serde(default)]
    pub target_topologies: Vec<String>,
    pub noise_db: Vec<f64>,
    #[serde(default = "default_channel_var")]
    pub channel_var: f64,
    #[serde(default = "default_train_size")]
    pub train_size: usize,
    #[serde(default = "default_test_size")]
    pub test_size: usize,
    #[serde(default)]
    pub train: TrainSettings,
    /// Ensemble size used for the unfolded optimizer.
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    /// Trained schedule used at every noise level instead of training.
    #[serde(default)]
    pub mu_artifact: Option<PathBuf>,
    /// Noise-aware counterpart of `mu_artifact` for the robustness scenario.
    #[serde(default)]
    pub noisy_mu_artifact: Option<PathBuf>,
    /// Step of the fixed-step baseline; calibrated on the training set when absent.
    #[serde(default)]
    pub fixed_step: Option<f64>,
    #[serde(default = "default_long_run")]
    pub long_run_iterations: usize,
    #[serde(default)]
    pub oracle: OracleSettings,
    /// Also train on each transfer target for comparison.
    #[serde(default = "default_true")]
    pub native_training: bool,
    /// Pilot noise variance relative to the data noise.
    #[serde(default = "default_pilot_scale")]
    pub pilot_noise_scale: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Where trained schedules are stored and reused; `<out_dir>/models` when absent.
    #[serde(default)]
    pub model_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reads a config and resolves its relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.into(), source })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.out_dir);
        for p in [&mut cfg.mu_artifact, &mut cfg.noisy_mu_artifact, &mut cfg.model_dir, &mut cfg.oracle.cache_dir]
            .into_iter()
            .flatten()
        {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(HarnessError::Config(msg.into()));
        self.topology()?;
        self.targets()?;
        if self.noise_db.is_empty() {
            return bad("noise_db must list at least one level");
        }
        if self.noise_db.iter().any(|d| !d.is_finite()) {
            return bad("noise levels must be finite");
        }
        if !(self.channel_var.is_finite() && self.channel_var > 0.0) {
            return bad("channel_var must be finite and positive");
        }
        if self.train_size == 0 || self.test_size == 0 {
            return bad("train_size and test_size must be at least 1");
        }
        if self.ensemble == 0 {
            return bad("ensemble must be at least 1");
        }
        if !(self.pilot_noise_scale.is_finite() && self.pilot_noise_scale >= 0.0) {
            return bad("pilot_noise_scale must be finite and non-negative");
        }
        if let Some(s) = self.fixed_step {
            if !(s.is_finite() && s > 0.0) {
                return bad("fixed_step must be finite and positive");
            }
        }
        if !(self.oracle.resolution > 0.0 && self.oracle.resolution <= 1.0) {
            return bad("oracle.resolution must lie in (0, 1]");
        }
        if self.train.calibration_candidates.iter().any(|s| !(s.is_finite() && *s > 0.0))
            || self.train.calibration_candidates.is_empty()
        {
            return bad("train.calibration_candidates must be non-empty and positive");
        }
        self.train_config(CsiMode::Full, 0).validate(self.train_size)?;
        for p in [&self.mu_artifact, &self.noisy_mu_artifact].into_iter().flatten() {
            if !p.is_file() {
                return Err(HarnessError::Config(format!("artifact {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn topology(&self) -> Result<Topology> {
        parse_topology(&self.topology)
    }

    pub fn targets(&self) -> Result<Vec<Topology>> {
        self.target_topologies.iter().map(|s| parse_topology(s)).collect()
    }

    pub fn noise(&self, topology: &Topology, db: f64) -> Result<NoiseProfile> {
        Ok(NoiseProfile::uniform_db(topology.num_hops(), db, self.channel_var)?)
    }

    pub fn train_config(&self, mode: CsiMode, seed: u64) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            iterations: t.iterations,
            epochs: t.epochs,
            batch_count: t.batch_count,
            learning_rate: t.learning_rate,
            mode,
            seed,
            adam: AdamParams { beta1: t.adam_beta1, beta2: t.adam_beta2, epsilon: t.adam_epsilon },
            initial_guess: match t.initial_guess {
                InitialGuessSetting::Random => InitialGuess::Random,
                InitialGuessSetting::Uniform => InitialGuess::Uniform,
            },
            initial_step: t.initial_step,
            calibration: t.calibration(),
            calibration_channels: t.calibration_channels,
            channel_var: self.channel_var,
            pilot_noise_scale: self.pilot_noise_scale,
        }
    }

    pub fn model_dir(&self) -> PathBuf {
        self.model_dir.clone().unwrap_or_else(|| self.out_dir.join("models"))
    }

    pub fn oracle_cache_dir(&self) -> PathBuf {
        self.oracle.cache_dir.clone().unwrap_or_else(|| self.out_dir.join("oracle-cache"))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }
}

pub fn parse_topology(s: &str) -> Result<Topology> {
    Topology::parse(s).map_err(|e| HarnessError::Config(format!("topology {s:?}: {e}")))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
