//! On-disk formats: JSON documents for datasets, allocations, reports and
//! step schedules, and CSV result tables.
//!
//! Floats in JSON use the shortest representation that parses back to the
//! same bits. CSV floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use unfolded_pgd_core::ensemble::EnsembleResult;
use unfolded_pgd_core::model::DatasetEntry;
use unfolded_pgd_core::pgd::{PgdTrajectory, StepSchedule};
use unfolded_pgd_core::rates::RateReport;
use unfolded_pgd_core::train::CsiMode;
use unfolded_pgd_core::{ChannelDataset, ChannelRealization, Matrix, NoiseProfile, PowerMatrix, Topology};

use crate::config::parse_topology;
use crate::error::{HarnessError, Result};

const DATASET_FORMAT: &str = "unfolded-pgd/dataset";
const POWER_FORMAT: &str = "unfolded-pgd/power-matrix";
const MU_FORMAT: &str = "unfolded-pgd/step-schedule";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseJson {
    pub hop_noise_vars: Vec<f64>,
    pub channel_var: f64,
}

impl NoiseJson {
    pub fn from_profile(n: &NoiseProfile) -> Self {
        NoiseJson { hop_noise_vars: n.hop_noise_vars().to_vec(), channel_var: n.channel_var() }
    }

    pub fn to_profile(&self) -> Result<NoiseProfile> {
        let profile = if self.hop_noise_vars.iter().all(|&v| v == 0.0) {
            NoiseProfile::noiseless(self.hop_noise_vars.len(), self.channel_var)?
        } else {
            NoiseProfile::new(self.hop_noise_vars.clone(), self.channel_var)?
        };
        Ok(profile)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    pub block_index: u64,
    /// Present only when it differs from the dataset-level profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseJson>,
    /// `[re, im]` in hop-major, transmitter-major, receiver-major order.
    pub links: Vec<[f64; 2]>,
}

impl ChannelJson {
    pub fn from_channel(h: &ChannelRealization) -> Self {
        ChannelJson { block_index: h.block_index(), noise: None, links: h.links().map(|c| [c.re, c.im]).collect() }
    }

    pub fn to_channel(&self, topology: &Topology) -> Result<ChannelRealization> {
        let links: Vec<Complex64> = self.links.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        Ok(ChannelRealization::from_links(topology, &links, self.block_index)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetJson {
    format: String,
    topology: String,
    noise: NoiseJson,
    seed: u64,
    channels: Vec<ChannelJson>,
}

pub fn dataset_to_json(d: &ChannelDataset) -> String {
    let shared = &d.entries()[0].noise;
    let channels = d
        .entries()
        .iter()
        .map(|e| ChannelJson {
            noise: (e.noise != *shared).then(|| NoiseJson::from_profile(&e.noise)),
            ..ChannelJson::from_channel(&e.channel)
        })
        .collect();
    to_json(&DatasetJson {
        format: DATASET_FORMAT.into(),
        topology: d.topology().fingerprint(),
        noise: NoiseJson::from_profile(shared),
        seed: d.seed(),
        channels,
    })
}

pub fn dataset_from_json(text: &str, origin: &Path) -> Result<ChannelDataset> {
    let doc: DatasetJson = parse_json(text, origin)?;
    check_format(&doc.format, DATASET_FORMAT)?;
    let topology = parse_topology(&doc.topology)?;
    let shared = doc.noise.to_profile()?;
    let entries = doc
        .channels
        .iter()
        .map(|c| {
            let noise = c.noise.as_ref().map_or(Ok(shared.clone()), NoiseJson::to_profile)?;
            Ok(DatasetEntry { channel: c.to_channel(&topology)?, noise })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelDataset::new(topology, entries, doc.seed)?)
}

pub fn write_dataset(path: &Path, d: &ChannelDataset) -> Result<()> {
    write_text(path, &dataset_to_json(d))
}

pub fn read_dataset(path: &Path) -> Result<ChannelDataset> {
    dataset_from_json(&read_text(path)?, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerMatrixJson {
    pub format: String,
    /// Topology fingerprint; readers reject a matrix for another network.
    pub topology: String,
    pub rows: Vec<Vec<f64>>,
}

impl PowerMatrixJson {
    pub fn new(topology: &Topology, p: &Matrix) -> Self {
        PowerMatrixJson { format: POWER_FORMAT.into(), topology: topology.fingerprint(), rows: p.to_rows() }
    }

    pub fn to_power_matrix(&self, expected: &Topology) -> Result<PowerMatrix> {
        check_format(&self.format, POWER_FORMAT)?;
        if self.topology != expected.fingerprint() {
            return Err(HarnessError::Config(format!(
                "power matrix is for {}, expected {}",
                self.topology,
                expected.fingerprint()
            )));
        }
        let m = Matrix::from_rows(&self.rows)?;
        if m.rows() != expected.stacked_rows() || m.cols() != expected.end_users() {
            return Err(HarnessError::Config("power matrix shape does not match its topology".into()));
        }
        Ok(PowerMatrix::new(m)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReportJson {
    pub first_hop_rates: Vec<Vec<f64>>,
    pub later_hop_rates: Vec<Vec<Vec<f64>>>,
    pub gains: Vec<Vec<Vec<f64>>>,
    pub message_rates: Vec<f64>,
    pub min_rate: f64,
    pub argmin: usize,
}

impl From<&RateReport> for RateReportJson {
    fn from(r: &RateReport) -> Self {
        RateReportJson {
            first_hop_rates: r.first_hop_rates.to_rows(),
            later_hop_rates: r.later_hop_rates.iter().map(Matrix::to_rows).collect(),
            gains: r.gains.iter().map(Matrix::to_rows).collect(),
            message_rates: r.message_rates.clone(),
            min_rate: r.min_rate,
            argmin: r.argmin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResultJson {
    pub selected: PowerMatrixJson,
    pub selected_min_rate: f64,
    pub member: usize,
    pub iteration: usize,
}

impl From<&EnsembleResult> for EnsembleResultJson {
    fn from(r: &EnsembleResult) -> Self {
        EnsembleResultJson {
            selected: PowerMatrixJson::new(&r.csi.topology(), &r.selected),
            selected_min_rate: r.selected_min_rate,
            member: r.member,
            iteration: r.iteration,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeJson {
    Full,
    Noisy,
}

impl From<CsiMode> for ModeJson {
    fn from(m: CsiMode) -> Self {
        match m {
            CsiMode::Full => ModeJson::Full,
            CsiMode::Noisy => ModeJson::Noisy,
        }
    }
}

/// A trained step schedule and what it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuArtifact {
    pub format: String,
    pub steps: Vec<f64>,
    pub iterations: usize,
    pub topology: String,
    pub mode: ModeJson,
    pub seed: u64,
    pub noise_db: Option<f64>,
    /// Hash of every input that determines the schedule.
    pub config_hash: String,
    pub initial_step: f64,
    pub epoch_losses: Vec<f64>,
}

impl MuArtifact {
    pub fn new(schedule: &StepSchedule, topology: &Topology, mode: CsiMode, seed: u64) -> Self {
        MuArtifact {
            format: MU_FORMAT.into(),
            steps: schedule.steps().to_vec(),
            iterations: schedule.iterations(),
            topology: topology.fingerprint(),
            mode: mode.into(),
            seed,
            noise_db: None,
            config_hash: String::new(),
            initial_step: 0.0,
            epoch_losses: Vec::new(),
        }
    }

    pub fn schedule(&self) -> Result<StepSchedule> {
        check_format(&self.format, MU_FORMAT)?;
        if self.steps.len() != self.iterations {
            return Err(HarnessError::Config(format!(
                "schedule lists {} steps but declares {} iterations",
                self.steps.len(),
                self.iterations
            )));
        }
        Ok(StepSchedule::new(self.steps.clone())?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let a: MuArtifact = parse_json(&read_text(path)?, path)?;
        a.schedule()?;
        Ok(a)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &to_json(self))
    }
}

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// A header row followed by data rows of the same width.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(header: &[&'static str]) -> Self {
        CsvTable { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Float(v) => write!(out, "{v:.16e}").expect("write to string"),
                    Cell::Int(v) => write!(out, "{v}").expect("write to string"),
                    Cell::Text(s) => {
                        assert!(!s.contains([',', '"', '\n']), "CSV text fields are never quoted");
                        out.push_str(s);
                    }
                    Cell::Empty => {}
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.render())
    }
}

/// `iteration,min_rate` rows of one run.
pub fn trajectory_csv(t: &PgdTrajectory) -> CsvTable {
    let mut table = CsvTable::new(&["iteration", "min_rate"]);
    for (k, &r) in t.min_rates.iter().enumerate() {
        table.push(vec![k.into(), r.into()]);
    }
    table
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable document");
    s.push('\n');
    s
}

pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &Path) -> Result<T> {
    serde_json::from_str(text).map_err(|source| HarnessError::Json { path: origin.into(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_json(&read_text(path)?, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value))
}

fn check_format(found: &str, expected: &str) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(HarnessError::Config(format!("expected a {expected} document, found {found:?}")))
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(HarnessError::io(path))
}

/// Writes through a temporary sibling so readers never see a partial file.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, text).map_err(HarnessError::io(path))?;
    std::fs::rename(&tmp, path).map_err(HarnessError::io(path))
}
