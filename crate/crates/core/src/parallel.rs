//! Order-preserving data-parallel map with a worker cap.
//!
//! Batch work in this crate (retrieval, reranking, evaluation) is
//! independent per query, so it all funnels through [`map_limit`]. With the
//! `parallel` feature (default) the work runs on a rayon pool sized to
//! `workers`; without it, or with `workers == 1`, it runs sequentially on
//! the calling thread. Results keep input order either way, so output files
//! are identical regardless of worker count.

/// Number of workers to use when the caller doesn't care.
pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Apply `f` to every item, returning results in input order.
///
/// `workers == 1` forces sequential execution; `workers == 0` lets the
/// thread pool pick its default size.
#[cfg(feature = "parallel")]
pub fn map_limit<T, R, F>(items: Vec<T>, workers: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Send + Sync,
{
    if workers == 1 {
        return items.into_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| {
            use rayon::prelude::*;
            items.into_par_iter().map(f).collect()
        }),
        Err(e) => {
            log::warn!("falling back to sequential map: {e}");
            items.into_iter().map(f).collect()
        }
    }
}

/// Sequential build: same signature, same ordering guarantee.
#[cfg(not(feature = "parallel"))]
pub fn map_limit<T, R, F>(items: Vec<T>, _workers: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Send + Sync,
{
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_input_order() {
        let items: Vec<u64> = (0..1000).collect();
        let out = map_limit(items.clone(), 4, |x| x * 2);
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let items: Vec<u64> = (0..500).collect();
        let seq = map_limit(items.clone(), 1, |x| x.wrapping_mul(0x9e3779b9));
        let par = map_limit(items, 0, |x| x.wrapping_mul(0x9e3779b9));
        assert_eq!(seq, par);
    }

    #[test]
    fn empty_input() {
        let out: Vec<u64> = map_limit(Vec::<u64>::new(), 8, |x| x);
        assert!(out.is_empty());
    }
}
