//! Batch execution over stream ids. With the `parallel` feature the work
//! is distributed by rayon; without it the same closures run serially.
//! Because every stream id owns its RNG substreams, both paths produce
//! bit-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to each stream id in `0..n` and collects the results in
/// stream order.
pub fn map_streams<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Serial reference path, kept available in every build so benches and
/// determinism tests can compare against the parallel dispatch.
pub fn map_streams_seq<T, F>(n: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n).map(f).collect()
}

/// Runs `f` inside a rayon pool with `n_workers` threads (0 = rayon
/// default). Without the `parallel` feature the closure just runs on the
/// current thread.
pub fn with_workers<T: Send>(n_workers: usize, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        if n_workers == 0 {
            f()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n_workers)
                .build()
                .expect("failed to build worker pool")
                .install(f)
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n_workers;
        f()
    }
}
