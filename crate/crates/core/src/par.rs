//! Deterministic data-parallel helpers.
//!
//! Element-wise maps may run on any thread. Reductions are always summed over
//! a fixed chunk partition and then folded sequentially, so results are bit
//! identical regardless of scheduling.

use crate::C64;

pub(crate) const CHUNK: usize = 1 << 14;

#[cfg(feature = "parallel")]
pub(crate) fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    use rayon::prelude::*;
    data.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i * chunk, c));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    data.chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i * chunk, c));
}

#[cfg(feature = "parallel")]
fn chunk_sums<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(n)))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn chunk_sums<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(n)))
        .collect()
}

/// `sum_j conj(a_j) b_j`, unweighted.
pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    chunk_sums(a.len(), |r| {
        a[r.clone()]
            .iter()
            .zip(&b[r])
            .fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
    })
    .into_iter()
    .fold(C64::new(0.0, 0.0), |acc, x| acc + x)
}

pub(crate) fn norm_sqr(a: &[C64]) -> f64 {
    chunk_sums(a.len(), |r| a[r].iter().map(|x| x.norm_sqr()).sum::<f64>())
        .into_iter()
        .sum()
}

/// Sum of `f(j)` over `0..n` with a deterministic partition.
pub(crate) fn sum_by<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    chunk_sums(n, |r| r.map(&f).sum::<f64>()).into_iter().sum()
}

/// `items.map(f)` in input order; items may run concurrently.
#[cfg(feature = "parallel")]
pub(crate) fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}
