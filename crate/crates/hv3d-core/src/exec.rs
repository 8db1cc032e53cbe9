//! Execution helpers: data-parallel maps with a fixed output order.
//!
//! Results are collected in input order, so every caller sees the same
//! reduction order no matter how many worker threads are active. With the
//! `parallel` feature disabled the same helpers run sequentially.

/// Maps `f` over `items`, preserving input order in the output.
#[cfg(feature = "parallel")]
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Maps `f` over `items`, preserving input order in the output.
#[cfg(not(feature = "parallel"))]
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Sequential twin of [`map_ordered`], kept unconditionally compiled so
/// benchmarks can compare both paths from one build.
pub fn map_ordered_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Maps a fallible `f` over indices `0..n` in parallel, stopping at the
/// first error and otherwise preserving index order.
#[cfg(feature = "parallel")]
pub fn try_map_indexed<U, E, F>(n: usize, f: F) -> Result<Vec<U>, E>
where
    U: Send,
    E: Send,
    F: Fn(usize) -> Result<U, E> + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Maps a fallible `f` over indices `0..n`, stopping at the first error.
#[cfg(not(feature = "parallel"))]
pub fn try_map_indexed<U, E, F>(n: usize, f: F) -> Result<Vec<U>, E>
where
    F: Fn(usize) -> Result<U, E>,
{
    (0..n).map(f).collect()
}

/// Sequential twin of [`try_map_indexed`].
pub fn try_map_indexed_seq<U, E, F>(n: usize, f: F) -> Result<Vec<U>, E>
where
    F: Fn(usize) -> Result<U, E>,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_map_preserves_order() {
        let items: Vec<u32> = (0..1000).collect();
        let out = map_ordered(&items, |&x| x * 2);
        let seq = map_ordered_seq(&items, |&x| x * 2);
        assert_eq!(out, seq);
    }

    #[test]
    fn try_map_propagates_error() {
        let r: Result<Vec<u32>, &str> =
            try_map_indexed(10, |i| if i == 7 { Err("boom") } else { Ok(i as u32) });
        assert!(r.is_err());
    }
}
