//! Data-parallel helpers.
//!
//! With the `parallel` feature these fan out over the rayon pool; without it
//! they run the same closures sequentially. Results are always returned in
//! input order so downstream reductions keep a fixed summation order.

use std::ops::Range;

/// Maps `f` over `0..len`, returning results in index order.
pub fn map_range<R, F>(range: Range<usize>, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        range.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        range.map(f).collect()
    }
}

/// Maps `f` over a slice, returning results in input order.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Finds the index in `range` minimising `f`; ties go to the lowest index.
///
/// The range is split into contiguous chunks, each scanned sequentially, so
/// the answer does not depend on the thread count.
pub fn argmin_range<F>(range: Range<usize>, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    if range.is_empty() {
        return None;
    }
    let len = range.end - range.start;
    let chunk = (len / 64).max(1024);
    let starts: Vec<usize> = (range.start..range.end).step_by(chunk).collect();
    let end = range.end;
    let partial = map_slice(&starts, |&s| {
        let mut best: Option<(usize, f64)> = None;
        for i in s..(s + chunk).min(end) {
            let v = f(i);
            match best {
                Some((_, b)) if v >= b => {}
                _ => best = Some((i, v)),
            }
        }
        best
    });
    partial
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<(usize, f64)>, (i, v)| match acc {
            Some((_, b)) if v >= b => acc,
            _ => Some((i, v)),
        })
}

/// Caps the global worker count. `0` leaves the pool at its automatic size.
///
/// Returns `false` if the pool was already initialised.
pub fn init_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        if threads == 0 {
            return true;
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        true
    }
}

/// Number of workers the helpers above will use.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
