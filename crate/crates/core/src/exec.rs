//! Data-parallel dispatch with a sequential fallback.
//!
//! All parallelism in this crate is element-wise: a closure is mapped over an
//! index range into a fresh `Vec`, preserving index order. Reductions over the
//! results are always performed sequentially in index order by the caller, so
//! floating-point results are identical for any thread count and for the
//! sequential fallback. The `parallel` feature selects whether rayon is
//! compiled in at all; `force_sequential` lets benchmarks compare both code
//! paths in one binary.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Route every subsequent `map_indexed` through the sequential path.
pub fn force_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

pub fn sequential_forced() -> bool {
    FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if sequential_forced() {
        (0..n).map(f).collect()
    } else {
        (0..n).into_par_iter().map(f).collect()
    }
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Configure the global worker pool; 0 keeps the library default.
/// Results do not depend on the thread count.
pub fn configure_jobs(jobs: usize) {
    #[cfg(feature = "parallel")]
    if jobs > 0 {
        // Ignore the error from configuring twice; the pool is global.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_index_order() {
        let out = map_indexed(1000, |i| i * i);
        for (i, v) in out.iter().enumerate() {
            assert_eq!(*v, i * i);
        }
    }

    #[test]
    fn sequential_toggle_gives_identical_results() {
        let a: Vec<f64> = map_indexed(512, |i| (i as f64).sin());
        force_sequential(true);
        let b: Vec<f64> = map_indexed(512, |i| (i as f64).sin());
        force_sequential(false);
        assert_eq!(a, b);
    }
}
