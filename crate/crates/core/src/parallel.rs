//! Thread pool for experiment grids. Numerical kernels are single-threaded;
//! only independent grid cells run concurrently, so outputs do not depend on
//! the thread count.

use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{param_err, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "QCUR_THREADS";

/// Parses [`THREADS_ENV`]; `None` when unset or empty (rayon's default).
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => param_err(format!("{THREADS_ENV} must be a positive integer, got {v:?}")),
        },
        Err(_) => Ok(None),
    }
}

pub fn thread_pool(threads: Option<usize>) -> Result<ThreadPool> {
    let mut b = ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| crate::error::QError::Parameter(format!("thread pool: {e}")))
}

/// Runs `f` inside a pool sized by [`THREADS_ENV`].
pub fn with_env_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(thread_pool(thread_cap()?)?.install(f))
}
