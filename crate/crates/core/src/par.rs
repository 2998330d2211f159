//! Data-parallel building blocks with a sequential fallback.
//!
//! Reductions over paths must not depend on the worker count, so sums are
//! always accumulated per fixed-size block and the block results are folded
//! in block order. Only the per-block work is handed to rayon.

/// Block length used for path reductions. Fixed so that the summation tree
/// is identical for any number of workers.
pub(crate) const REDUCE_BLOCK: usize = 4096;

#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Sums `acc_len` accumulator slots over `items` elements.
///
/// `fill` receives an element range and a zeroed accumulator and must add the
/// contribution of every element in the range. Blocks are combined in index
/// order, so the result does not depend on how many workers ran the blocks.
pub(crate) fn block_sum<F>(items: usize, acc_len: usize, fill: F) -> Vec<f64>
where
    F: Fn(std::ops::Range<usize>, &mut [f64]) + Sync,
{
    if items == 0 {
        return vec![0.0; acc_len];
    }
    let blocks = items.div_ceil(REDUCE_BLOCK);
    let partials = map_collect(blocks, |b| {
        let lo = b * REDUCE_BLOCK;
        let hi = (lo + REDUCE_BLOCK).min(items);
        let mut acc = vec![0.0; acc_len];
        fill(lo..hi, &mut acc);
        acc
    });
    let mut total = vec![0.0; acc_len];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += *p;
        }
    }
    total
}

/// Mean over paths of a per-path scalar.
pub(crate) fn mean<F>(paths: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let s = block_sum(paths, 1, |range, acc| {
        for p in range {
            acc[0] += f(p);
        }
    });
    s[0] / paths as f64
}
