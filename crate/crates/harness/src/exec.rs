use std::sync::Arc;

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};
use unfolded_pgd_core::exec::Executor;

use crate::error::{HarnessError, Result};

/// Executor backed by a dedicated rayon pool. Results come back in index
/// order, so the worker count never changes an output.
#[derive(Clone)]
pub struct RayonExecutor {
    pool: Arc<ThreadPool>,
}

impl RayonExecutor {
    /// `threads = None` uses one worker per available core.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        if threads == Some(0) {
            return Err(HarnessError::Config("--threads must be at least 1".into()));
        }
        let pool = ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
        Ok(RayonExecutor { pool: Arc::new(pool) })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..len).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let ex = RayonExecutor::new(Some(3)).unwrap();
        assert_eq!(ex.threads(), 3);
        assert_eq!(ex.map(100, |i| i * i), (0..100).map(|i| i * i).collect::<Vec<_>>());
        assert!(RayonExecutor::new(Some(0)).is_err());
    }
}
