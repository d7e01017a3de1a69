use std::ops::Range;

use rayon::prelude::*;

/// Fixed-size work chunks evaluated in parallel, returned in chunk order.
///
/// Callers fold the partial results sequentially, so reductions are
/// bit-identical regardless of the thread count.
pub(crate) fn chunked<T, F>(len: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync,
{
    let chunk = chunk.max(1);
    (0..len.div_ceil(chunk))
        .into_par_iter()
        .map(|c| f(c * chunk..((c + 1) * chunk).min(len)))
        .collect()
}
