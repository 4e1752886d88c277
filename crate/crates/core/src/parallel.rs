//! Worker-count plumbing for rayon. Results never depend on the count:
//! every parallel map here collects in index order.

use crate::error::{invalid, Result};

/// Runs `f` inside a pool of `workers` threads; `0` uses the global pool.
pub fn with_workers<T, F>(workers: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("cannot build a {workers}-thread pool: {e}")))?;
    Ok(pool.install(f))
}
