//! Data-parallel execution with a sequential fallback.
//!
//! Both strategies produce identical results: work is split into indexed
//! units whose outputs are collected in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Execution {
    pub(crate) fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        }
    }

    /// Fills `data` row by row; `f(row, out)` writes one row of width `width`.
    pub(crate) fn fill_rows<F>(self, data: &mut [f64], width: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        if width == 0 {
            return;
        }
        match self {
            Execution::Sequential => data
                .chunks_mut(width)
                .enumerate()
                .for_each(|(r, row)| f(r, row)),
            #[cfg(feature = "parallel")]
            Execution::Parallel => data
                .par_chunks_mut(width)
                .enumerate()
                .for_each(|(r, row)| f(r, row)),
        }
    }
}
