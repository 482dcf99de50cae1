//! Ordered map used by the pair sums and the Monte Carlo loop.
//!
//! Results always come back in index order and are folded sequentially by
//! the caller, so enabling `parallel` never changes a single bit of output.

use alloc::vec::Vec;
use core::ops::Range;

/// Number of work items mapped before the caller folds them.
#[cfg(feature = "parallel")]
pub(crate) const BATCH: usize = 64;
#[cfg(not(feature = "parallel"))]
pub(crate) const BATCH: usize = 1;

#[cfg(feature = "parallel")]
pub(crate) fn map_ordered<T, F>(range: Range<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    range.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_ordered<T, F>(range: Range<usize>, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    range.map(f).collect()
}

/// Splits `0..n` into consecutive batches of [`BATCH`] items.
pub(crate) fn batches(n: usize) -> impl Iterator<Item = Range<usize>> {
    (0..n)
        .step_by(BATCH)
        .map(move |s| s..(s + BATCH).min(n))
}
