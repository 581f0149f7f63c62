//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature, batches run on a scoped rayon pool sized by
//! the caller. Without it, or with `threads <= 1`, they run in order on the
//! current thread. Output order always matches input order.

/// Map `f` over `items`, keeping input order.
pub fn map_indexed<T, U, F>(items: &[T], threads: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if threads > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        return pool.install(|| items.par_iter().map(&f).collect());
    }
    let _ = threads;
    items.iter().map(f).collect()
}

/// Threads requested by the `GH_THREADS` environment variable, if set.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("GH_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Whether this build can run work in parallel.
pub const fn enabled() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let v: Vec<u64> = (0..100).collect();
        let seq = map_indexed(&v, 1, |x| x * x);
        let par = map_indexed(&v, 4, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }
}
