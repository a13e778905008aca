//! Pluggable data parallelism.
//!
//! The core crate has no threads. Callers that do supply an [`Executor`];
//! results always come back in index order, so reductions stay
//! deterministic whatever the worker count.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// `(0..len).map(f)` collected in index order.
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}
