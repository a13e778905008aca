//! The experiment scenarios.
//!
//! Every scenario draws its train and test sets from the master seed, trains
//! or loads the step schedules it needs, evaluates the unfolded optimizer
//! and the fixed-step baseline on the same test channels, and writes CSV
//! tables plus a run manifest. Work is split per test channel and reduced in
//! index order, so outputs do not depend on the worker count.
//!
//! Trained schedules and calibrated baseline steps are stored in the model
//! directory under a hash of everything that determines them and reused by
//! later runs.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use unfolded_pgd_core::ensemble::{infer, CsiInput, InferOptions};
use unfolded_pgd_core::exec::Executor;
use unfolded_pgd_core::grid::{grid_points, MAX_GRID_POINTS};
use unfolded_pgd_core::model::build_dataset;
use unfolded_pgd_core::pgd::{calibration_table, run_pgd, select_step, CandidateStats, StepSchedule};
use unfolded_pgd_core::pilots::{make_pilots, simulate_pilot_rx};
use unfolded_pgd_core::power::uniform_init;
use unfolded_pgd_core::rates::min_rate;
use unfolded_pgd_core::train::{train, CsiMode};
use unfolded_pgd_core::{ChannelDataset, ChannelRealization, NoiseProfile, Topology};

use crate::cache::cached_grid_capacity;
use crate::config::{sha256_hex, ExperimentConfig, Scenario, TrainSettings};
use crate::error::{HarnessError, Result};
use crate::formats::{read_json, write_json, Cell, CsvTable, ModeJson, MuArtifact};
use crate::manifest::Manifest;
use crate::seeds::Seeds;

/// CSI the optimizer sees at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalCsi {
    Full,
    /// LMMSE estimates from one pilot block per test channel.
    Noisy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Datasets {
    pub train: ChannelDataset,
    pub test: ChannelDataset,
}

/// Mean over channels, summed in index order.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterCurveLevel {
    pub noise_db: f64,
    /// Mean over channels of the best member's min-rate after `k` iterations.
    pub unfolded: Vec<f64>,
    /// Mean min-rate of fixed-step PGD after `k` iterations.
    pub fixed: Vec<f64>,
    pub oracle: Option<f64>,
}

/// Per-channel realized min-rates at one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSweepLevel {
    pub noise_db: f64,
    pub unfolded: Vec<f64>,
    pub unfolded_e1: Vec<f64>,
    pub fixed: Vec<f64>,
    pub fixed_long: Vec<f64>,
    pub oracle: Option<Vec<f64>>,
}

/// Per-channel realized min-rates, named `<training CSI>_<evaluation CSI>`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessLevel {
    pub noise_db: f64,
    pub clean_full: Vec<f64>,
    pub clean_noisy: Vec<f64>,
    pub noisy_full: Vec<f64>,
    pub noisy_noisy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferLevel {
    pub target: Topology,
    pub noise_db: f64,
    pub transferred: Vec<f64>,
    pub transferred_e1: Vec<f64>,
    pub native: Option<Vec<f64>>,
    pub fixed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCompareLevel {
    pub noise_db: f64,
    pub unfolded: Vec<f64>,
    pub fixed: Vec<f64>,
    pub oracle: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioReport {
    IterCurve(Vec<IterCurveLevel>),
    NoiseSweep(Vec<NoiseSweepLevel>),
    NoisyRobustness(Vec<RobustnessLevel>),
    Transfer(Vec<TransferLevel>),
    OracleCompare(Vec<OracleCompareLevel>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationDoc {
    key: String,
    step: f64,
    candidates: Vec<CandidateDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateDoc {
    step: f64,
    tail_mean: f64,
    final_best: f64,
}

impl From<&CandidateStats> for CandidateDoc {
    fn from(c: &CandidateStats) -> Self {
        CandidateDoc { step: c.step, tail_mean: c.tail_mean, final_best: c.final_best }
    }
}

fn db_label(db: f64) -> String {
    format!("{db}")
}

fn link_hash(h: &ChannelRealization) -> String {
    let bytes: Vec<u8> =
        h.links().flat_map(|c| [c.re.to_bits().to_le_bytes(), c.im.to_bits().to_le_bytes()]).flatten().collect();
    sha256_hex(&bytes)
}

/// Runs scenarios for one configuration.
pub struct Runner<'a, E: Executor> {
    pub config: &'a ExperimentConfig,
    pub exec: &'a E,
    pub seeds: Seeds,
    /// Progress lines on stderr.
    pub verbose: bool,
}

impl<'a, E: Executor> Runner<'a, E> {
    pub fn new(config: &'a ExperimentConfig, exec: &'a E) -> Result<Self> {
        config.validate()?;
        Ok(Runner { config, exec, seeds: Seeds::new(config.seed), verbose: false })
    }

    fn log(&self, msg: impl FnOnce() -> String) {
        if self.verbose {
            eprintln!("{}", msg());
        }
    }

    pub fn noise(&self, topology: &Topology, db: f64) -> Result<NoiseProfile> {
        self.config.noise(topology, db)
    }

    /// Train and test sets of `topology` at one noise level. The channels do
    /// not depend on the level.
    pub fn datasets(&self, topology: &Topology, noise: &NoiseProfile) -> Result<Datasets> {
        let train = build_dataset(topology, noise, self.config.train_size, self.seeds.train_set)?;
        let test = build_dataset(topology, noise, self.config.test_size, self.seeds.test_set)?;
        let seen: HashSet<String> = train.entries().iter().map(|e| link_hash(&e.channel)).collect();
        if test.entries().iter().any(|e| seen.contains(&link_hash(&e.channel))) {
            return Err(HarnessError::Config("train and test sets share a channel".into()));
        }
        Ok(Datasets { train, test })
    }

    fn store_path(&self, prefix: &str, topology: &Topology, db: f64, key: &str) -> PathBuf {
        self.config.model_dir().join(format!("{prefix}_{topology}_{}db_{}.json", db_label(db), &key[..16]))
    }

    /// Constant step of the fixed-step baseline at one noise level: the
    /// configured value, or the calibration winner on the training set.
    pub fn fixed_step(&self, topology: &Topology, db: f64) -> Result<f64> {
        if let Some(s) = self.config.fixed_step {
            return Ok(s);
        }
        let t = &self.config.train;
        let channels = t.calibration_channels.clamp(1, self.config.train_size);
        #[derive(Serialize)]
        struct Key<'k> {
            topology: String,
            noise_db: f64,
            channel_var: f64,
            channels: usize,
            candidates: &'k [f64],
            iterations: usize,
            tail_fraction: f64,
            train_set: u64,
        }
        let key = sha256_hex(
            &serde_json::to_vec(&Key {
                topology: topology.fingerprint(),
                noise_db: db,
                channel_var: self.config.channel_var,
                channels,
                candidates: &t.calibration_candidates,
                iterations: t.calibration_iterations,
                tail_fraction: t.calibration_tail_fraction,
                train_set: self.seeds.train_set,
            })
            .expect("key serializes"),
        );
        let path = self.store_path("fixed", topology, db, &key);
        if let Ok(doc) = read_json::<CalibrationDoc>(&path) {
            if doc.key == key {
                return Ok(doc.step);
            }
        }
        self.log(|| format!("calibrating fixed step for {topology} at {db} dB"));
        let noise = self.noise(topology, db)?;
        let ds = build_dataset(topology, &noise, channels, self.seeds.train_set)?;
        let chans: Vec<ChannelRealization> = ds.entries().iter().map(|e| e.channel.clone()).collect();
        let table = calibration_table(&chans, &noise, &t.calibration(), self.exec)?;
        let step = select_step(&table);
        write_json(&path, &CalibrationDoc { key, step, candidates: table.iter().map(CandidateDoc::from).collect() })?;
        Ok(step)
    }

    /// The schedule for one topology, noise level and training mode: loaded
    /// from `artifact` when given, otherwise trained (or reused from the
    /// model directory).
    pub fn schedule(&self, topology: &Topology, db: f64, mode: CsiMode, artifact: Option<&Path>) -> Result<MuArtifact> {
        let k = self.config.train.iterations;
        if let Some(p) = artifact {
            let a = MuArtifact::read(p)?;
            if a.iterations != k {
                return Err(HarnessError::Config(format!(
                    "{} holds {} steps but the configuration uses K = {k}",
                    p.display(),
                    a.iterations
                )));
            }
            return Ok(a);
        }
        if !self.config.train.enabled {
            return Err(HarnessError::Config(format!(
                "no step schedule for {topology} at {db} dB ({}) and training is disabled",
                mode_name(mode)
            )));
        }
        let initial_step = match self.config.train.initial_step {
            Some(s) => s,
            None => self.fixed_step(topology, db)?,
        };
        #[derive(Serialize)]
        struct Key<'k> {
            version: &'static str,
            topology: String,
            noise_db: f64,
            mode: ModeJson,
            train: &'k TrainSettings,
            initial_step: f64,
            train_size: usize,
            channel_var: f64,
            pilot_noise_scale: Option<f64>,
            train_set: u64,
            training: u64,
        }
        let key = sha256_hex(
            &serde_json::to_vec(&Key {
                version: env!("CARGO_PKG_VERSION"),
                topology: topology.fingerprint(),
                noise_db: db,
                mode: mode.into(),
                train: &self.config.train,
                initial_step,
                train_size: self.config.train_size,
                channel_var: self.config.channel_var,
                pilot_noise_scale: (mode == CsiMode::Noisy).then_some(self.config.pilot_noise_scale),
                train_set: self.seeds.train_set,
                training: self.seeds.training,
            })
            .expect("key serializes"),
        );
        let path = self.store_path(&format!("mu_{}", mode_name(mode)), topology, db, &key);
        if let Ok(a) = MuArtifact::read(&path) {
            if a.config_hash == key {
                return Ok(a);
            }
        }
        self.log(|| format!("training {} schedule for {topology} at {db} dB", mode_name(mode)));
        let noise = self.noise(topology, db)?;
        let data = self.datasets(topology, &noise)?;
        let mut tc = self.config.train_config(mode, self.seeds.training);
        tc.initial_step = Some(initial_step);
        let report = train(&data.train, &tc, self.exec)?;
        let artifact = MuArtifact {
            noise_db: Some(db),
            config_hash: key,
            initial_step: report.initial_step,
            epoch_losses: report.epoch_losses.clone(),
            ..MuArtifact::new(&report.schedule, topology, mode, self.seeds.training)
        };
        artifact.write(&path)?;
        Ok(artifact)
    }

    /// Realized min-rate on the true channel of every test channel.
    pub fn evaluate(&self, test: &ChannelDataset, mu: &StepSchedule, members: usize, csi: EvalCsi) -> Result<Vec<f64>> {
        let topology = test.topology().clone();
        let pilots = make_pilots(&topology);
        let out = self.exec.map(test.len(), |t| -> Result<f64> {
            let e = &test.entries()[t];
            let seed = self.seeds.ensemble_seed(t);
            let options = InferOptions::default();
            let r = match csi {
                EvalCsi::Full => infer(CsiInput::Full(&e.channel), &e.noise, mu, members, seed, options)?,
                EvalCsi::Noisy => {
                    let pilot_noise = e.noise.scaled(self.config.pilot_noise_scale);
                    let block = simulate_pilot_rx(&e.channel, &pilot_noise, &pilots, &mut self.seeds.pilot_stream(t));
                    let input = CsiInput::Pilots {
                        block: &block,
                        pilot_noise: &pilot_noise,
                        channel_var: self.config.channel_var,
                    };
                    infer(input, &e.noise, mu, members, seed, options)?
                }
            };
            Ok(min_rate(&e.channel, &r.selected, &e.noise).0)
        });
        out.into_iter().collect()
    }

    /// Fixed-step PGD from equal powers, scored like a one-member ensemble.
    pub fn evaluate_fixed(&self, test: &ChannelDataset, step: f64, iterations: usize) -> Result<Vec<f64>> {
        self.evaluate(test, &StepSchedule::constant(step, iterations)?, 1, EvalCsi::Full)
    }

    /// Grid-oracle values, or `None` when the topology is out of the grid's reach.
    pub fn oracle_values(&self, test: &ChannelDataset) -> Result<Option<Vec<f64>>> {
        if !self.config.oracle.enabled || self.oracle_support(test.topology()).is_err() {
            return Ok(None);
        }
        self.oracle_required(test).map(Some)
    }

    fn oracle_support(&self, topology: &Topology) -> Result<()> {
        let n = topology.end_users();
        if n > 2 {
            return Err(HarnessError::Capability(format!(
                "the grid oracle handles at most 2 messages, {topology} has {n}"
            )));
        }
        let per_row = if n == 1 { 1 } else { grid_points(self.config.oracle.resolution).len() as u128 };
        let points = (0..topology.stacked_rows()).try_fold(1u128, |acc, _| acc.checked_mul(per_row));
        if points.is_none_or(|p| p > MAX_GRID_POINTS) {
            return Err(HarnessError::Capability(format!(
                "the grid for {topology} at resolution {} exceeds {MAX_GRID_POINTS} points",
                self.config.oracle.resolution
            )));
        }
        Ok(())
    }

    fn oracle_required(&self, test: &ChannelDataset) -> Result<Vec<f64>> {
        let dir = self.config.oracle_cache_dir();
        let res = self.config.oracle.resolution;
        self.log(|| format!("grid oracle on {} channels of {}", test.len(), test.topology()));
        let out = self.exec.map(test.len(), |t| -> Result<f64> {
            let e = &test.entries()[t];
            Ok(cached_grid_capacity(&e.channel, &e.noise, res, Some(&dir))?.best_min_rate)
        });
        out.into_iter().collect()
    }

    pub fn iter_curve(&self) -> Result<Vec<IterCurveLevel>> {
        let topology = self.config.topology()?;
        let mut levels = Vec::new();
        for &db in &self.config.noise_db {
            let noise = self.noise(&topology, db)?;
            let mu = self.schedule(&topology, db, CsiMode::Full, self.config.mu_artifact.as_deref())?.schedule()?;
            let step = self.fixed_step(&topology, db)?;
            let fixed = StepSchedule::constant(step, mu.iterations())?;
            let data = self.datasets(&topology, &noise)?;
            let test = &data.test;
            let members = self.config.ensemble;
            let curves = self.exec.map(test.len(), |t| -> Result<(Vec<f64>, Vec<f64>)> {
                let e = &test.entries()[t];
                let options = InferOptions { keep_trajectories: true, ..InferOptions::default() };
                let r =
                    infer(CsiInput::Full(&e.channel), &e.noise, &mu, members, self.seeds.ensemble_seed(t), options)?;
                let trajectories = r.trajectories.expect("trajectories requested");
                let unfolded = (0..=mu.iterations())
                    .map(|k| trajectories.iter().map(|tr| tr.min_rates[k]).fold(f64::NEG_INFINITY, f64::max))
                    .collect();
                let fixed_rates = run_pgd(&e.channel, &e.noise, &uniform_init(&topology), &fixed).min_rates;
                Ok((unfolded, fixed_rates))
            });
            let curves: Vec<(Vec<f64>, Vec<f64>)> = curves.into_iter().collect::<Result<_>>()?;
            let (unfolded, fixed): (Vec<_>, Vec<_>) = curves.into_iter().unzip();
            let column = |rows: &[Vec<f64>], k: usize| mean(&rows.iter().map(|r| r[k]).collect::<Vec<_>>());
            let ks = 0..=mu.iterations();
            levels.push(IterCurveLevel {
                noise_db: db,
                unfolded: ks.clone().map(|k| column(&unfolded, k)).collect(),
                fixed: ks.map(|k| column(&fixed, k)).collect(),
                oracle: self.oracle_values(test)?.map(|v| mean(&v)),
            });
        }
        Ok(levels)
    }

    pub fn noise_sweep(&self) -> Result<Vec<NoiseSweepLevel>> {
        let topology = self.config.topology()?;
        let mut levels = Vec::new();
        for &db in &self.config.noise_db {
            let noise = self.noise(&topology, db)?;
            let mu = self.schedule(&topology, db, CsiMode::Full, self.config.mu_artifact.as_deref())?.schedule()?;
            let step = self.fixed_step(&topology, db)?;
            let test = self.datasets(&topology, &noise)?.test;
            levels.push(NoiseSweepLevel {
                noise_db: db,
                unfolded: self.evaluate(&test, &mu, self.config.ensemble, EvalCsi::Full)?,
                unfolded_e1: self.evaluate(&test, &mu, 1, EvalCsi::Full)?,
                fixed: self.evaluate_fixed(&test, step, mu.iterations())?,
                fixed_long: self.evaluate_fixed(&test, step, self.config.long_run_iterations)?,
                oracle: self.oracle_values(&test)?,
            });
        }
        Ok(levels)
    }

    pub fn noisy_robustness(&self) -> Result<Vec<RobustnessLevel>> {
        let topology = self.config.topology()?;
        let mut levels = Vec::new();
        for &db in &self.config.noise_db {
            let noise = self.noise(&topology, db)?;
            let clean = self.schedule(&topology, db, CsiMode::Full, self.config.mu_artifact.as_deref())?.schedule()?;
            let noisy =
                self.schedule(&topology, db, CsiMode::Noisy, self.config.noisy_mu_artifact.as_deref())?.schedule()?;
            let test = self.datasets(&topology, &noise)?.test;
            let e = self.config.ensemble;
            levels.push(RobustnessLevel {
                noise_db: db,
                clean_full: self.evaluate(&test, &clean, e, EvalCsi::Full)?,
                clean_noisy: self.evaluate(&test, &clean, e, EvalCsi::Noisy)?,
                noisy_full: self.evaluate(&test, &noisy, e, EvalCsi::Full)?,
                noisy_noisy: self.evaluate(&test, &noisy, e, EvalCsi::Noisy)?,
            });
        }
        Ok(levels)
    }

    pub fn transfer(&self) -> Result<Vec<TransferLevel>> {
        let source = self.config.topology()?;
        let targets = self.config.targets()?;
        if targets.is_empty() {
            return Err(HarnessError::Config("transfer needs at least one target topology".into()));
        }
        let mut levels = Vec::new();
        for target in &targets {
            for &db in &self.config.noise_db {
                let mu = self.schedule(&source, db, CsiMode::Full, self.config.mu_artifact.as_deref())?.schedule()?;
                let noise = self.noise(target, db)?;
                let test = self.datasets(target, &noise)?.test;
                let native = if self.config.native_training {
                    let native_mu = self.schedule(target, db, CsiMode::Full, None)?.schedule()?;
                    Some(self.evaluate(&test, &native_mu, self.config.ensemble, EvalCsi::Full)?)
                } else {
                    None
                };
                let step = self.fixed_step(target, db)?;
                levels.push(TransferLevel {
                    target: target.clone(),
                    noise_db: db,
                    transferred: self.evaluate(&test, &mu, self.config.ensemble, EvalCsi::Full)?,
                    transferred_e1: self.evaluate(&test, &mu, 1, EvalCsi::Full)?,
                    native,
                    fixed: self.evaluate_fixed(&test, step, mu.iterations())?,
                });
            }
        }
        Ok(levels)
    }

    pub fn oracle_compare(&self) -> Result<Vec<OracleCompareLevel>> {
        let topology = self.config.topology()?;
        self.oracle_support(&topology)?;
        let mut levels = Vec::new();
        for &db in &self.config.noise_db {
            let noise = self.noise(&topology, db)?;
            let mu = self.schedule(&topology, db, CsiMode::Full, self.config.mu_artifact.as_deref())?.schedule()?;
            let step = self.fixed_step(&topology, db)?;
            let test = self.datasets(&topology, &noise)?.test;
            levels.push(OracleCompareLevel {
                noise_db: db,
                unfolded: self.evaluate(&test, &mu, self.config.ensemble, EvalCsi::Full)?,
                fixed: self.evaluate_fixed(&test, step, mu.iterations())?,
                oracle: self.oracle_required(&test)?,
            });
        }
        Ok(levels)
    }

    pub fn report(&self, scenario: Scenario) -> Result<ScenarioReport> {
        Ok(match scenario {
            Scenario::IterCurve => ScenarioReport::IterCurve(self.iter_curve()?),
            Scenario::NoiseSweep => ScenarioReport::NoiseSweep(self.noise_sweep()?),
            Scenario::NoisyRobustness => ScenarioReport::NoisyRobustness(self.noisy_robustness()?),
            Scenario::Transfer => ScenarioReport::Transfer(self.transfer()?),
            Scenario::OracleCompare => ScenarioReport::OracleCompare(self.oracle_compare()?),
        })
    }

    /// Runs `scenario`, writes its tables and manifest to the output
    /// directory and returns the report.
    pub fn run(&self, scenario: Scenario) -> Result<(ScenarioReport, Manifest)> {
        let report = self.report(scenario)?;
        let out = &self.config.out_dir;
        let mut manifest = Manifest::new(scenario.name(), self.config, self.seeds)?;
        for (name, table) in tables(&report) {
            table.write(&out.join(&name))?;
            manifest.record(out, &name)?;
        }
        manifest.write(out)?;
        Ok((report, manifest))
    }
}

pub fn mode_name(mode: CsiMode) -> &'static str {
    match mode {
        CsiMode::Full => "full",
        CsiMode::Noisy => "noisy",
    }
}

fn mean_opt(v: &Option<Vec<f64>>) -> Cell {
    v.as_deref().map(mean).into()
}

fn opt_at(v: &Option<Vec<f64>>, t: usize) -> Cell {
    v.as_ref().map(|v| v[t]).into()
}

/// CSV tables of a report, with their file names.
pub fn tables(report: &ScenarioReport) -> Vec<(String, CsvTable)> {
    match report {
        ScenarioReport::IterCurve(levels) => levels
            .iter()
            .map(|l| {
                let mut t = CsvTable::new(&["iteration", "unfolded_mean", "fixed_mean", "oracle_mean"]);
                for k in 0..l.unfolded.len() {
                    t.push(vec![k.into(), l.unfolded[k].into(), l.fixed[k].into(), l.oracle.into()]);
                }
                (format!("iter_curve_{}db.csv", db_label(l.noise_db)), t)
            })
            .collect(),
        ScenarioReport::NoiseSweep(levels) => {
            let mut summary = CsvTable::new(&[
                "noise_db",
                "unfolded_mean",
                "unfolded_e1_mean",
                "fixed_mean",
                "fixed_long_mean",
                "oracle_mean",
            ]);
            let mut channels =
                CsvTable::new(&["noise_db", "channel", "unfolded", "unfolded_e1", "fixed", "fixed_long", "oracle"]);
            for l in levels {
                summary.push(vec![
                    l.noise_db.into(),
                    mean(&l.unfolded).into(),
                    mean(&l.unfolded_e1).into(),
                    mean(&l.fixed).into(),
                    mean(&l.fixed_long).into(),
                    mean_opt(&l.oracle),
                ]);
                for t in 0..l.unfolded.len() {
                    channels.push(vec![
                        l.noise_db.into(),
                        t.into(),
                        l.unfolded[t].into(),
                        l.unfolded_e1[t].into(),
                        l.fixed[t].into(),
                        l.fixed_long[t].into(),
                        opt_at(&l.oracle, t),
                    ]);
                }
            }
            vec![("noise_sweep.csv".into(), summary), ("noise_sweep_channels.csv".into(), channels)]
        }
        ScenarioReport::NoisyRobustness(levels) => {
            let mut summary = CsvTable::new(&["noise_db", "train_csi", "eval_csi", "mean_min_rate"]);
            let mut channels =
                CsvTable::new(&["noise_db", "channel", "clean_full", "clean_noisy", "noisy_full", "noisy_noisy"]);
            for l in levels {
                for (train_csi, eval_csi, v) in [
                    ("full", "full", &l.clean_full),
                    ("full", "noisy", &l.clean_noisy),
                    ("noisy", "full", &l.noisy_full),
                    ("noisy", "noisy", &l.noisy_noisy),
                ] {
                    summary.push(vec![l.noise_db.into(), train_csi.into(), eval_csi.into(), mean(v).into()]);
                }
                for t in 0..l.clean_full.len() {
                    channels.push(vec![
                        l.noise_db.into(),
                        t.into(),
                        l.clean_full[t].into(),
                        l.clean_noisy[t].into(),
                        l.noisy_full[t].into(),
                        l.noisy_noisy[t].into(),
                    ]);
                }
            }
            vec![("noisy_robustness.csv".into(), summary), ("noisy_robustness_channels.csv".into(), channels)]
        }
        ScenarioReport::Transfer(levels) => {
            let mut summary = CsvTable::new(&[
                "target_topology",
                "noise_db",
                "transferred_mean",
                "transferred_e1_mean",
                "native_mean",
                "fixed_mean",
            ]);
            let mut channels = CsvTable::new(&[
                "target_topology",
                "noise_db",
                "channel",
                "transferred",
                "transferred_e1",
                "native",
                "fixed",
            ]);
            for l in levels {
                let name = l.target.fingerprint();
                summary.push(vec![
                    name.clone().into(),
                    l.noise_db.into(),
                    mean(&l.transferred).into(),
                    mean(&l.transferred_e1).into(),
                    mean_opt(&l.native),
                    mean(&l.fixed).into(),
                ]);
                for t in 0..l.transferred.len() {
                    channels.push(vec![
                        name.clone().into(),
                        l.noise_db.into(),
                        t.into(),
                        l.transferred[t].into(),
                        l.transferred_e1[t].into(),
                        opt_at(&l.native, t),
                        l.fixed[t].into(),
                    ]);
                }
            }
            vec![("transfer.csv".into(), summary), ("transfer_channels.csv".into(), channels)]
        }
        ScenarioReport::OracleCompare(levels) => {
            let mut summary =
                CsvTable::new(&["noise_db", "unfolded_mean", "fixed_mean", "oracle_mean", "unfolded_over_oracle"]);
            let mut channels = CsvTable::new(&["noise_db", "channel", "unfolded", "fixed", "oracle"]);
            for l in levels {
                let (u, o) = (mean(&l.unfolded), mean(&l.oracle));
                summary.push(vec![l.noise_db.into(), u.into(), mean(&l.fixed).into(), o.into(), (u / o).into()]);
                for t in 0..l.unfolded.len() {
                    channels.push(vec![
                        l.noise_db.into(),
                        t.into(),
                        l.unfolded[t].into(),
                        l.fixed[t].into(),
                        l.oracle[t].into(),
                    ]);
                }
            }
            vec![("oracle_compare.csv".into(), summary), ("oracle_compare_channels.csv".into(), channels)]
        }
    }
}
