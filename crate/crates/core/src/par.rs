//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] runs on the
//! rayon pool; without it, every call runs sequentially and the results are
//! identical either way. Callers always get outputs in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

pub(crate) fn map<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Calls `f(row_index, row)` for each `row_len`-sized chunk of `data`.
pub(crate) fn for_each_row_mut<F>(data: &mut [f64], row_len: usize, exec: Execution, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    if row_len == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        data.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(j, row)| f(j, row));
        return;
    }
    let _ = exec;
    data.chunks_mut(row_len)
        .enumerate()
        .for_each(|(j, row)| f(j, row));
}

/// Runs `f` with at most `jobs` worker threads available to parallel helpers.
pub fn with_jobs<R, F>(jobs: usize, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    if jobs == 0 {
        return Err(Error::invalid("jobs must be >= 1"));
    }
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::config(format!("cannot build thread pool: {e}")))?;
        Ok(pool.install(f))
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(f())
    }
}
