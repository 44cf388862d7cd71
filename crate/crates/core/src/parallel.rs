//! Thread-pool configuration.
//!
//! Parallel sections map over sample indices and collect in index order;
//! every reduction afterwards is sequential, so results do not depend on the
//! number of threads.

use rayon::ThreadPool;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "MHL_THREADS";

/// Worker count from `MHL_THREADS`, defaulting to the available parallelism.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

pub fn pool() -> ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .expect("thread pool")
}

/// Ordered parallel map over `0..n`.
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    pool().install(|| (0..n).into_par_iter().map(f).collect())
}
