//! Bias-corrected Adam on the step schedule.

use alloc::vec;
use alloc::vec::Vec;

use crate::pgd::StepSchedule;

/// Learned steps never drop below this, so every iteration stays an ascent.
pub const MIN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(dims: usize) -> Self {
        AdamState { first_moment: vec![0.0; dims], second_moment: vec![0.0; dims], step: 0 }
    }
}

/// One descent step on `mu` along `grad`, then the positivity clamp.
pub fn adam_update(
    state: &AdamState,
    grad: &[f64],
    mu: &StepSchedule,
    learning_rate: f64,
    params: AdamParams,
) -> (AdamState, StepSchedule) {
    assert_eq!(grad.len(), mu.iterations(), "gradient and schedule lengths differ");
    assert_eq!(state.first_moment.len(), grad.len(), "optimizer state length differs");
    let AdamParams { beta1, beta2, epsilon } = params;
    let t = state.step + 1;
    let c1 = 1.0 - libm::pow(beta1, t as f64);
    let c2 = 1.0 - libm::pow(beta2, t as f64);
    let mut next = AdamState { first_moment: Vec::new(), second_moment: Vec::new(), step: t };
    let mut steps = Vec::with_capacity(grad.len());
    for (i, &g) in grad.iter().enumerate() {
        let m = beta1 * state.first_moment[i] + (1.0 - beta1) * g;
        let v = beta2 * state.second_moment[i] + (1.0 - beta2) * g * g;
        let update = learning_rate * (m / c1) / (libm::sqrt(v / c2) + epsilon);
        steps.push((mu.steps()[i] - update).max(MIN_STEP));
        next.first_moment.push(m);
        next.second_moment.push(v);
    }
    (next, StepSchedule::new(steps).expect("clamped steps are positive"))
}
