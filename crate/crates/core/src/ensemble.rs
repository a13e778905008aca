//! Ensemble inference: several unrolled runs from different starting
//! allocations, keeping the best iterate seen by any of them.

use alloc::vec::Vec;

use crate::pgd::{run_pgd, PgdTrajectory, StepSchedule};
use crate::pilots::{lmmse_estimate, PilotBlock};
use crate::power::{random_init, uniform_init, PowerMatrix};
use crate::seed::{self, tag};
use crate::{ChannelRealization, Error, NoiseProfile, Result};

/// CSI available to the optimizer.
#[derive(Debug, Clone, Copy)]
pub enum CsiInput<'a> {
    /// Perfect channel knowledge.
    Full(&'a ChannelRealization),
    /// Received pilots, turned into an LMMSE estimate with the given pilot
    /// noise and channel variance.
    Pilots { block: &'a PilotBlock, pilot_noise: &'a NoiseProfile, channel_var: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InferOptions {
    /// Select among final iterates only instead of every iteration.
    pub final_only: bool,
    pub keep_trajectories: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub selected: PowerMatrix,
    /// Min-rate of `selected` under the selection CSI.
    pub selected_min_rate: f64,
    pub member: usize,
    pub iteration: usize,
    /// The CSI the members optimized and were selected on.
    pub csi: ChannelRealization,
    pub trajectories: Option<Vec<PgdTrajectory>>,
}

/// Starting allocation of member `e`: equal power for the first, random
/// feasible allocations from independent streams for the rest.
pub fn member_init(topology: &crate::Topology, seed: u64, e: usize) -> PowerMatrix {
    if e == 0 {
        uniform_init(topology)
    } else {
        random_init(topology, &mut seed::stream(seed, &[tag::ENSEMBLE, e as u64]))
    }
}

pub fn infer(
    input: CsiInput<'_>,
    noise: &NoiseProfile,
    mu: &StepSchedule,
    members: usize,
    seed: u64,
    options: InferOptions,
) -> Result<EnsembleResult> {
    if members == 0 {
        return Err(Error::Config("ensemble size must be at least 1".into()));
    }
    let csi = match input {
        CsiInput::Full(h) => h.clone(),
        CsiInput::Pilots { block, pilot_noise, channel_var } => lmmse_estimate(block, pilot_noise, channel_var),
    };
    let topology = csi.topology();
    let k_max = mu.iterations();
    let first = if options.final_only || k_max == 0 { k_max } else { 1 };
    let mut best: Option<(f64, usize, usize, PowerMatrix)> = None;
    let mut kept = Vec::new();
    for e in 0..members {
        let traj = run_pgd(&csi, noise, &member_init(&topology, seed, e), mu);
        for k in first..=k_max {
            let r = traj.min_rates[k];
            if best.as_ref().is_none_or(|b| r > b.0) {
                best = Some((r, e, k, traj.iterates[k].clone()));
            }
        }
        if options.keep_trajectories {
            kept.push(traj);
        }
    }
    let (selected_min_rate, member, iteration, selected) = best.expect("at least one candidate");
    Ok(EnsembleResult {
        selected,
        selected_min_rate,
        member,
        iteration,
        csi,
        trajectories: options.keep_trajectories.then_some(kept),
    })
}
