//! Data-parallel maps with a sequential fallback.
//!
//! With the `parallel` feature (on by default) [`Parallelism::Parallel`] runs on
//! rayon; without it every map is sequential. Results are always returned in
//! index order, so reductions over them do not depend on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    /// `jobs <= 1` means sequential.
    pub fn from_jobs(jobs: usize) -> Self {
        if jobs <= 1 {
            Parallelism::Sequential
        } else {
            Parallelism::Parallel
        }
    }
}

/// `(0..n).map(f)` collected in index order.
pub fn map_indices<T, F>(par: Parallelism, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match par {
        #[cfg(feature = "parallel")]
        Parallelism::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Runs `op` with at most `jobs` worker threads.
pub fn with_jobs<T: Send>(jobs: usize, op: impl FnOnce() -> T + Send) -> Result<T> {
    #[cfg(feature = "parallel")]
    {
        if jobs > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| Error::InvalidInput(format!("cannot start {jobs} workers: {e}")))?;
            return Ok(pool.install(op));
        }
    }
    if jobs == 0 {
        return Err(Error::InvalidInput("--jobs must be at least 1".into()));
    }
    Ok(op())
}
