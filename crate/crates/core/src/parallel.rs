//! Deterministic block parallelism.
//!
//! Work is cut into blocks whose boundaries depend only on the problem size,
//! never on the thread count, and results are returned in block order so
//! every reduction happens in the same sequence on every run.

use std::ops::Range;

use rayon::prelude::*;

/// Rows per block for sample-parallel loops.
pub(crate) const ROW_BLOCK: usize = 4096;

/// Applies `f` to each block of `0..n` and returns the results in block order.
pub(crate) fn map_blocks<T, F>(n: usize, block: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync,
{
    let block = block.max(1);
    let n_blocks = n.div_ceil(block);
    (0..n_blocks)
        .into_par_iter()
        .map(|b| f(b * block..n.min((b + 1) * block)))
        .collect()
}
