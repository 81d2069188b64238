//! Data-parallel helpers. With the `parallel` feature, work is spread over the
//! rayon pool; without it (or under [`Parallelism::Sequential`]) everything
//! runs on the calling thread. Results never depend on the choice.

use std::sync::atomic::{AtomicU8, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    Rayon,
}

static MODE: AtomicU8 = AtomicU8::new(1);

/// Selects the execution mode for subsequent calls (process-wide).
pub fn set_parallelism(mode: Parallelism) {
    MODE.store(matches!(mode, Parallelism::Rayon) as u8, Ordering::Relaxed);
}

pub fn parallelism() -> Parallelism {
    if cfg!(feature = "parallel") && MODE.load(Ordering::Relaxed) == 1 {
        Parallelism::Rayon
    } else {
        Parallelism::Sequential
    }
}

/// Sizes the global worker pool. Only the first call has any effect.
pub fn configure_workers(workers: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = workers;
}

/// Worker count from `COMPASS_WORKERS`, if set and valid.
pub fn workers_from_env() -> Option<usize> {
    std::env::var("COMPASS_WORKERS").ok()?.parse().ok().filter(|&w| w > 0)
}

/// `(0..n).map(f)` in index order, possibly in parallel.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match parallelism() {
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}
