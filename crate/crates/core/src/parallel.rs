//! Deterministic replicate-parallel execution.
//!
//! Replicates are cut into fixed-size chunks whose boundaries do not depend
//! on the worker count; each chunk is evaluated independently and results
//! come back in chunk order, so any fold over them is scheduling-free.

use std::ops::Range;

use rayon::prelude::*;

/// Replicates per chunk.
pub const CHUNK: u64 = 256;

/// Evaluates `f` on consecutive chunks of `0..total` with `workers` threads
/// (`0` = all cores) and returns the results in chunk order.
pub fn map_chunks<T, F>(total: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let ranges: Vec<Range<u64>> = (0..total.div_ceil(CHUNK)).map(|c| c * CHUNK..((c + 1) * CHUNK).min(total)).collect();
    if workers == 1 || ranges.len() <= 1 {
        return ranges.into_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| ranges.into_par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("thread pool unavailable ({e}); running serially");
            ranges.into_iter().map(f).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_order_is_fixed() {
        let a = map_chunks(1000, 1, |r| (r.start, r.end));
        let b = map_chunks(1000, 4, |r| (r.start, r.end));
        assert_eq!(a, b);
        assert_eq!(a.first(), Some(&(0, 256)));
        assert_eq!(a.last(), Some(&(768, 1000)));
        assert!(map_chunks(0, 2, |r| r.start).is_empty());
    }
}
