//! Seeds of the harness's random streams, all derived from the master seed.
//!
//! Train and test channels use different derivation paths, and none of the
//! paths depends on the noise level, so every level sees the same channels.

use serde::Serialize;
use unfolded_pgd_core::seed::{derive, stream, StreamRng};

pub mod tag {
    pub const TRAIN_SET: u64 = 0x1001;
    pub const TEST_SET: u64 = 0x1002;
    pub const TRAINING: u64 = 0x1003;
    pub const EVAL_PILOTS: u64 = 0x1005;
    pub const ENSEMBLE: u64 = 0x1006;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Seeds {
    pub master: u64,
    pub train_set: u64,
    pub test_set: u64,
    pub training: u64,
    pub eval_pilots: u64,
    pub ensemble: u64,
}

impl Seeds {
    pub fn new(master: u64) -> Self {
        Seeds {
            master,
            train_set: derive(master, &[tag::TRAIN_SET]),
            test_set: derive(master, &[tag::TEST_SET]),
            training: derive(master, &[tag::TRAINING]),
            eval_pilots: derive(master, &[tag::EVAL_PILOTS]),
            ensemble: derive(master, &[tag::ENSEMBLE]),
        }
    }

    /// Pilot noise stream for test channel `t`.
    pub fn pilot_stream(&self, t: usize) -> StreamRng {
        stream(self.eval_pilots, &[t as u64])
    }

    /// Ensemble seed for test channel `t`.
    pub fn ensemble_seed(&self, t: usize) -> u64 {
        derive(self.ensemble, &[t as u64])
    }
}
