//! Learning the step schedule of the unrolled optimizer.
//!
//! The loss of one channel is `−Σ_{k=1}^{K} log₂(1+k)·min_rate(h, P^(k))`
//! where `P^(k)` are the iterates of PGD run on the optimizer's CSI and the
//! rates use the true channel. Its derivative in `μ` is propagated forward
//! through every step, projection and rate evaluation with [`Dual`]
//! numbers: `μ^(k)` is the `k`-th tangent direction, so tangents only grow
//! as later steps are reached.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::adam::{adam_update, AdamParams, AdamState};
use crate::exec::Executor;
use crate::model::DatasetEntry;
use crate::pgd::{calibrate_fixed_step, step_slice, Calibration, PgdTrajectory, StepSchedule};
use crate::pilots::estimate_channel;
use crate::power::{random_init, uniform_init, PowerMatrix};
use crate::rates::min_rate_of;
use crate::real::{Dual, Real};
use crate::seed::{self, tag};
use crate::{ChannelDataset, ChannelRealization, Error, NoiseProfile, Result};

/// Weight of iterate `k >= 1` in the loss.
pub fn iteration_weight(k: usize) -> f64 {
    libm::log2(1.0 + k as f64)
}

/// Loss of a recorded trajectory, with rates evaluated on `h_true`.
pub fn weighted_loss(trajectory: &PgdTrajectory, h_true: &ChannelRealization, noise: &NoiseProfile) -> f64 {
    assert!(trajectory.iterations() >= 1, "loss needs at least one iteration");
    trajectory.iterates[1..]
        .iter()
        .enumerate()
        .map(|(i, p)| -iteration_weight(i + 1) * crate::rates::min_rate(h_true, p, noise).0)
        .sum()
}

/// Unrolled loss of one channel for any scalar type.
fn unrolled<T: Real>(
    csi: &ChannelRealization,
    truth: &ChannelRealization,
    noise: &NoiseProfile,
    p0: &PowerMatrix,
    mu: &[T],
) -> T {
    let cols = p0.cols();
    let mut p: Vec<T> = p0.as_slice().iter().map(|&x| T::constant(x)).collect();
    let mut loss = T::zero();
    for (k, step) in mu.iter().enumerate() {
        p = step_slice(csi, &p, noise, step, cols);
        loss = loss - min_rate_of(truth, &p, noise) * iteration_weight(k + 1);
    }
    loss
}

/// Plain-valued unrolled loss; the oracle for [`loss_grad_mu`].
pub fn unrolled_loss(
    csi: &ChannelRealization,
    truth: &ChannelRealization,
    noise: &NoiseProfile,
    p0: &PowerMatrix,
    mu: &[f64],
) -> f64 {
    unrolled(csi, truth, noise, p0, mu)
}

/// One training example: the optimizer runs on `csi`, the loss uses `truth`.
#[derive(Debug, Clone, Copy)]
pub struct BatchItem<'a> {
    pub csi: &'a ChannelRealization,
    pub truth: &'a ChannelRealization,
    pub noise: &'a NoiseProfile,
}

impl<'a> BatchItem<'a> {
    pub fn full_csi(entry: &'a DatasetEntry) -> Self {
        BatchItem { csi: &entry.channel, truth: &entry.channel, noise: &entry.noise }
    }
}

/// Batch-mean loss and its gradient with respect to `μ`.
pub fn loss_grad_mu<E: Executor>(
    batch: &[BatchItem<'_>],
    mu: &StepSchedule,
    p0: &PowerMatrix,
    exec: &E,
) -> (f64, Vec<f64>) {
    assert!(!batch.is_empty(), "empty batch");
    let k = mu.iterations();
    let per_item = exec.map(batch.len(), |i| {
        let item = batch[i];
        // μ^(j) only influences iterates j+1.., so its tangent has j+1 slots
        let duals: Vec<Dual> = mu.steps().iter().enumerate().map(|(j, &m)| Dual::variable(m, j, j + 1)).collect();
        unrolled(item.csi, item.truth, item.noise, p0, &duals)
    });
    let mut loss = 0.0;
    let mut grad = alloc::vec![0.0; k];
    for d in &per_item {
        loss += d.value;
        for (g, j) in grad.iter_mut().zip(0..) {
            *g += d.d(j);
        }
    }
    let n = batch.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    (loss / n, grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiMode {
    /// The optimizer sees the true channel.
    Full,
    /// The optimizer sees LMMSE estimates from fresh pilots every epoch.
    Noisy,
}

/// Starting allocation of each training batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialGuess {
    /// A fresh random feasible allocation per batch.
    Random,
    /// Equal power on every message.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub epochs: usize,
    pub batch_count: usize,
    pub learning_rate: f64,
    pub mode: CsiMode,
    pub seed: u64,
    pub adam: AdamParams,
    pub initial_guess: InitialGuess,
    /// Constant initial step; calibrated on the training set when absent.
    pub initial_step: Option<f64>,
    pub calibration: Calibration,
    /// Channels used for calibration, taken from the front of the dataset.
    pub calibration_channels: usize,
    /// `σ_h²` assumed by the estimator.
    pub channel_var: f64,
    /// Pilot noise variance relative to the data noise.
    pub pilot_noise_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 40,
            epochs: 100,
            batch_count: 10,
            learning_rate: 1e-2,
            mode: CsiMode::Full,
            seed: 0,
            adam: AdamParams::default(),
            initial_guess: InitialGuess::Random,
            initial_step: None,
            calibration: Calibration::default(),
            calibration_channels: 50,
            channel_var: 1.0,
            pilot_noise_scale: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, dataset_len: usize) -> Result<()> {
        if self.iterations == 0 || self.epochs == 0 {
            return Err(Error::Config("iterations and epochs must be at least 1".into()));
        }
        if self.batch_count == 0 || self.batch_count > dataset_len {
            return Err(Error::Config("batch count must lie in 1..=dataset size".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be finite and non-negative".into()));
        }
        if !(self.channel_var > 0.0 && self.pilot_noise_scale >= 0.0) {
            return Err(Error::Config("channel and pilot variances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub schedule: StepSchedule,
    pub initial_step: f64,
    /// Mean batch loss of every epoch.
    pub epoch_losses: Vec<f64>,
}

/// Splits `0..len` into `parts` contiguous ranges whose sizes differ by at
/// most one.
fn split(len: usize, parts: usize) -> impl Iterator<Item = core::ops::Range<usize>> {
    let (base, extra) = (len / parts, len % parts);
    (0..parts).scan(0, move |at, i| {
        let size = base + usize::from(i < extra);
        let r = *at..*at + size;
        *at += size;
        Some(r)
    })
}

pub fn train<E: Executor>(dataset: &ChannelDataset, config: &TrainConfig, exec: &E) -> Result<TrainReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    config.validate(dataset.len())?;
    let entries = dataset.entries();
    let initial_step = match config.initial_step {
        Some(s) => s,
        None => {
            let cal: Vec<ChannelRealization> =
                entries.iter().take(config.calibration_channels.max(1)).map(|e| e.channel.clone()).collect();
            calibrate_fixed_step(&cal, &entries[0].noise, &config.calibration, exec)?
        }
    };
    let mut mu = StepSchedule::constant(initial_step, config.iterations)?;
    let mut adam = AdamState::new(config.iterations);
    let mut order: Vec<usize> = (0..entries.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let epoch = epoch as u64;
        order.shuffle(&mut seed::stream(config.seed, &[tag::SHUFFLE, epoch]));
        let estimates: Vec<ChannelRealization> = match config.mode {
            CsiMode::Full => Vec::new(),
            CsiMode::Noisy => exec.map(entries.len(), |t| {
                let e = &entries[t];
                let mut rng = seed::stream(config.seed, &[tag::PILOT_NOISE, epoch, t as u64]);
                estimate_channel(&e.channel, &e.noise.scaled(config.pilot_noise_scale), config.channel_var, &mut rng)
            }),
        };
        let mut epoch_loss = 0.0;
        for (q, range) in split(order.len(), config.batch_count).enumerate() {
            let batch: Vec<BatchItem<'_>> = order[range]
                .iter()
                .map(|&t| match config.mode {
                    CsiMode::Full => BatchItem::full_csi(&entries[t]),
                    CsiMode::Noisy => {
                        BatchItem { csi: &estimates[t], truth: &entries[t].channel, noise: &entries[t].noise }
                    }
                })
                .collect();
            let p0 = match config.initial_guess {
                InitialGuess::Random => {
                    random_init(dataset.topology(), &mut seed::stream(config.seed, &[tag::INIT_GUESS, epoch, q as u64]))
                }
                InitialGuess::Uniform => uniform_init(dataset.topology()),
            };
            let (loss, grad) = loss_grad_mu(&batch, &mu, &p0, exec);
            epoch_loss += loss;
            (adam, mu) = adam_update(&adam, &grad, &mu, config.learning_rate, config.adam);
        }
        epoch_losses.push(epoch_loss / config.batch_count as f64);
    }
    Ok(TrainReport { schedule: mu, initial_step, epoch_losses })
}
