//! Projected gradient ascent on the min-rate objective.

use alloc::vec::Vec;

use crate::exec::Executor;
use crate::gradient::gradient_of;
use crate::power::{project_slice, uniform_init, PowerMatrix};
use crate::rates::min_rate;
use crate::real::Real;
use crate::{ChannelRealization, Error, Matrix, NoiseProfile, Result};

/// Per-iteration step sizes `μ^(0)..μ^(K-1)`.
///
/// Steps must be finite and non-negative; a zero step is a no-op iteration.
/// Learned schedules are kept strictly positive by the trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    steps: Vec<f64>,
}

impl StepSchedule {
    pub fn new(steps: Vec<f64>) -> Result<Self> {
        if steps.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::Config("step sizes must be finite and non-negative".into()));
        }
        Ok(StepSchedule { steps })
    }

    pub fn constant(step: f64, iterations: usize) -> Result<Self> {
        Self::new(alloc::vec![step; iterations])
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn iterations(&self) -> usize {
        self.steps.len()
    }
}

/// Iterates `P^(0)..P^(K)` and their min-rates on the optimization channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PgdTrajectory {
    pub iterates: Vec<PowerMatrix>,
    pub min_rates: Vec<f64>,
}

impl PgdTrajectory {
    pub fn iterations(&self) -> usize {
        self.iterates.len() - 1
    }

    /// Running maximum of `min_rates`.
    pub fn best_so_far(&self) -> Vec<f64> {
        running_max(&self.min_rates)
    }
}

pub(crate) fn running_max(values: &[f64]) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    values
        .iter()
        .map(|&v| {
            best = best.max(v);
            best
        })
        .collect()
}

/// `Π(P + μ ∇)` on a row-major slice with `cols` columns.
pub(crate) fn step_slice<T: Real>(
    h: &ChannelRealization,
    p: &[T],
    noise: &NoiseProfile,
    mu: &T,
    cols: usize,
) -> Vec<T> {
    let (grad, _, _) = gradient_of(h, p, noise);
    let mut next: Vec<T> = p.iter().zip(grad).map(|(x, g)| x.clone() + mu.clone() * g).collect();
    project_slice(&mut next, cols);
    next
}

pub fn pgd_step(p: &PowerMatrix, h: &ChannelRealization, noise: &NoiseProfile, mu: f64) -> PowerMatrix {
    let data = step_slice(h, p.as_slice(), noise, &mu, p.cols());
    let m = Matrix::from_vec(p.rows(), p.cols(), data).expect("step preserves shape");
    PowerMatrix::new(m).expect("projection output is feasible")
}

pub fn run_pgd(
    h: &ChannelRealization,
    noise: &NoiseProfile,
    p0: &PowerMatrix,
    schedule: &StepSchedule,
) -> PgdTrajectory {
    let mut iterates = Vec::with_capacity(schedule.iterations() + 1);
    let mut min_rates = Vec::with_capacity(schedule.iterations() + 1);
    min_rates.push(min_rate(h, p0, noise).0);
    iterates.push(p0.clone());
    for &mu in schedule.steps() {
        let next = pgd_step(iterates.last().expect("non-empty"), h, noise, mu);
        min_rates.push(min_rate(h, &next, noise).0);
        iterates.push(next);
    }
    PgdTrajectory { iterates, min_rates }
}

/// Min-rates of a constant-step run without retaining iterates.
pub fn constant_step_rates(
    h: &ChannelRealization,
    noise: &NoiseProfile,
    p0: &PowerMatrix,
    step: f64,
    iterations: usize,
) -> Vec<f64> {
    let mut p = p0.clone();
    let mut rates = Vec::with_capacity(iterations + 1);
    rates.push(min_rate(h, &p, noise).0);
    for _ in 0..iterations {
        p = pgd_step(&p, h, noise, step);
        rates.push(min_rate(h, &p, noise).0);
    }
    rates
}

/// First iteration whose min-rate reaches `target`, or `None`.
pub fn first_reaching(min_rates: &[f64], target: f64) -> Option<usize> {
    min_rates.iter().position(|&r| r >= target)
}

/// Settings for choosing the constant step of the fixed-step baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub candidates: Vec<f64>,
    pub iterations: usize,
    /// Trailing fraction of the run whose raw min-rates are averaged.
    pub tail_fraction: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            candidates: alloc::vec![1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01],
            iterations: 5000,
            tail_fraction: 0.1,
        }
    }
}

/// Behaviour of one candidate step, averaged over the calibration channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateStats {
    pub step: f64,
    /// Mean raw min-rate over the tail window.
    pub tail_mean: f64,
    /// Mean best-so-far at the final iteration.
    pub final_best: f64,
}

pub fn candidate_stats<E: Executor>(
    channels: &[ChannelRealization],
    noise: &NoiseProfile,
    step: f64,
    cfg: &Calibration,
    exec: &E,
) -> CandidateStats {
    let tail = (libm::ceil(cfg.iterations as f64 * cfg.tail_fraction) as usize).clamp(1, cfg.iterations + 1);
    let per_channel = exec.map(channels.len(), |i| {
        let h = &channels[i];
        let rates = constant_step_rates(h, noise, &uniform_init(&h.topology()), step, cfg.iterations);
        let window = &rates[rates.len() - tail..];
        let best = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (window.iter().sum::<f64>() / tail as f64, best)
    });
    let (mut tail_mean, mut final_best) = (0.0, 0.0);
    for (t, b) in per_channel {
        tail_mean += t;
        final_best += b;
    }
    let n = channels.len() as f64;
    CandidateStats { step, tail_mean: tail_mean / n, final_best: final_best / n }
}

/// The candidate whose runs from the uniform allocation end highest: the
/// largest mean raw min-rate over the tail window, larger step on ties.
///
/// Constant-step runs on this objective end in a zigzag between binding
/// constraints rather than at a fixed point, so the tail average measures
/// where a step size settles including the amplitude it keeps bouncing with.
pub fn calibrate_fixed_step<E: Executor>(
    channels: &[ChannelRealization],
    noise: &NoiseProfile,
    cfg: &Calibration,
    exec: &E,
) -> Result<f64> {
    Ok(select_step(&calibration_table(channels, noise, cfg, exec)?))
}

/// The calibration winner of a candidate table.
pub fn select_step(table: &[CandidateStats]) -> f64 {
    table
        .iter()
        .copied()
        .fold(None::<CandidateStats>, |best, c| match best {
            Some(b) if b.tail_mean > c.tail_mean || (b.tail_mean == c.tail_mean && b.step >= c.step) => Some(b),
            _ => Some(c),
        })
        .expect("non-empty candidates")
        .step
}

/// Statistics of every candidate, in the configured order.
pub fn calibration_table<E: Executor>(
    channels: &[ChannelRealization],
    noise: &NoiseProfile,
    cfg: &Calibration,
    exec: &E,
) -> Result<Vec<CandidateStats>> {
    if channels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.candidates.is_empty() || cfg.candidates.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::Config("calibration candidates must be positive".into()));
    }
    Ok(cfg.candidates.iter().map(|&s| candidate_stats(channels, noise, s, cfg, exec)).collect())
}
