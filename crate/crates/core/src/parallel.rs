//! Thin shim over rayon so the whole crate builds with or without the
//! `parallel` feature. Callers only ever map independent work items and
//! reduce the results in index order, which keeps outputs bitwise
//! identical across thread counts.

/// Maps `f` over `0..n`, returning results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Send + Sync) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Applies `f` to each (index, item) of a mutable slice.
#[cfg(feature = "parallel")]
pub fn for_each_mut<T: Send>(items: &mut [T], f: impl Fn(usize, &mut T) + Send + Sync) {
    use rayon::prelude::*;
    items.par_iter_mut().enumerate().for_each(|(i, item)| f(i, item));
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_mut<T>(items: &mut [T], f: impl Fn(usize, &mut T)) {
    items.iter_mut().enumerate().for_each(|(i, item)| f(i, item));
}
