//! Data-parallel helpers. With the `parallel` feature the maps run on the
//! rayon pool; without it, or after [`set_parallel(false)`], they run
//! sequentially. Results are always returned in input order.

use std::sync::atomic::{AtomicBool, Ordering};

static ENABLED: AtomicBool = AtomicBool::new(true);

/// Enables or disables parallel execution at runtime.
/// Also switches the dense factorizations between the rayon pool and a
/// single thread.
pub fn set_parallel(on: bool) {
    ENABLED.store(on, Ordering::Relaxed);
    #[cfg(feature = "parallel")]
    let dense = if on { faer::Parallelism::Rayon(0) } else { faer::Parallelism::None };
    #[cfg(not(feature = "parallel"))]
    let dense = faer::Parallelism::None;
    faer::set_global_parallelism(dense);
}

pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && ENABLED.load(Ordering::Relaxed)
}

/// `items.iter().map(f).collect()`, possibly in parallel.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() && items.len() > 1 {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() && n > 1 {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Runs `f` inside a pool capped at `workers` threads (0 = default).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if workers > 0 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            return pool.install(f);
        }
    }
    let _ = workers;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let v: Vec<usize> = (0..100).collect();
        assert_eq!(map(&v, |x| x * 2), (0..100).map(|x| x * 2).collect::<Vec<_>>());
        assert_eq!(map_range(10, |i| i + 1), (1..=10).collect::<Vec<_>>());
        assert_eq!(with_workers(2, || map_range(3, |i| i)), vec![0, 1, 2]);
    }
}
