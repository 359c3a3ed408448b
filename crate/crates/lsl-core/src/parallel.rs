//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature (the default) the map runs on the current
//! rayon pool; order of the collected results is the index order either
//! way, so reports never depend on the schedule. The serial variant is
//! always compiled and is what the benchmark suite compares against.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n` preserving index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    map_indexed_serial(n, f)
}

/// Sequential reference implementation of [`map_indexed`].
pub fn map_indexed_serial<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_serial_agree_in_order() {
        let f = |i: usize| i * i + 1;
        assert_eq!(map_indexed(100, f), map_indexed_serial(100, f));
    }
}
