// SPDX-License-Identifier: Apache-2.0

//! Index-parallel map with a sequential fallback. Results always come back
//! in index order, so callers see the same output whatever the thread count.

/// Whether this build can run work on more than one thread.
pub const PARALLEL: bool = cfg!(feature = "parallel");

/// Threads worth using by default.
pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// `(0..n).map(f)` on up to `jobs` threads.
pub fn map_indexed<T, F>(n: usize, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if jobs > 1 && n > 1 {
        use rayon::prelude::*;
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            return pool.install(|| (0..n).into_par_iter().with_max_len(1).map(&f).collect());
        }
    }
    let _ = jobs;
    (0..n).map(f).collect()
}
