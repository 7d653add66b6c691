//! Data-parallel map with a sequential fallback when the `parallel` feature
//! is disabled. Output order always follows the input index.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluates `f(i)` for `i in 0..len` and collects in index order.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Runs `op` on a pool with `workers` threads (or the global pool when
/// `None`). Without the `parallel` feature the closure runs inline.
pub fn with_workers<R, F>(workers: Option<usize>, op: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        match workers {
            Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
                Ok(pool) => pool.install(op),
                Err(_) => op(),
            },
            None => op(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        op()
    }
}
