//! Serial / data-parallel execution of independent index-mapped work.
//!
//! Every parallel loop in the crate goes through [`Execution::map`] so that a
//! serial run and a parallel run produce results in the same order, and any
//! reduction over them is bit-identical. Without the `parallel` feature,
//! [`Execution::Parallel`] silently runs serially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run work in parallel.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// Map `f` over `0..len`, returning results in index order.
    pub fn map<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..len).into_par_iter().map(f).collect()
            }
            _ => (0..len).map(f).collect(),
        }
    }

    /// Like [`Execution::map`] but with a per-worker scratch value built by `init`.
    pub fn map_init<T, S, I, F>(self, len: usize, init: I, f: F) -> Vec<T>
    where
        T: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..len).into_par_iter().map_init(&init, |s, i| f(s, i)).collect()
            }
            _ => {
                let mut scratch = init();
                (0..len).map(|i| f(&mut scratch, i)).collect()
            }
        }
    }

    /// Apply `f` to disjoint contiguous chunks of `data`. `f` receives the
    /// offset of the chunk within `data`.
    pub fn for_each_chunk<T, F>(self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        let chunk = chunk.max(1);
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                data.par_chunks_mut(chunk)
                    .enumerate()
                    .for_each(|(i, c)| f(i * chunk, c));
            }
            _ => {
                for (i, c) in data.chunks_mut(chunk).enumerate() {
                    f(i * chunk, c);
                }
            }
        }
    }
}

/// Pairwise (cascade) summation; the result depends only on the slice
/// contents, never on how the slice was produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serial_and_parallel_agree() {
        let f = |i: usize| ((i as f64) * 0.37).sin();
        let a = Execution::Serial.map(1000, f);
        let b = Execution::Parallel.map(1000, f);
        assert_eq!(a, b);
        assert_eq!(pairwise_sum(&a).to_bits(), pairwise_sum(&b).to_bits());
    }

    #[test]
    fn chunks_cover_everything() {
        let mut v = vec![0usize; 1037];
        Execution::Parallel.for_each_chunk(&mut v, 100, |off, c| {
            for (j, x) in c.iter_mut().enumerate() {
                *x = off + j;
            }
        });
        assert!(v.iter().enumerate().all(|(i, &x)| i == x));
    }

    #[test]
    fn pairwise_matches_naive_sum_closely() {
        let xs: Vec<f64> = (0..10_000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-10);
    }
}
