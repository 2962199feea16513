//! Execution settings shared by the enumeration-heavy routines.
//!
//! Work over a word index range is split into fixed-size chunks. Each chunk is
//! reduced sequentially and the per-chunk partials are combined in chunk
//! order, so parallel and sequential runs produce bit-identical results.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Words per reduction chunk.
pub const CHUNK: u64 = 4096;

/// Default enumeration budget (words per level).
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Reduction {
    /// Chunks evaluated on the rayon pool (sequential when the `parallel`
    /// feature is off).
    #[default]
    Parallel,
    /// Chunks evaluated one after another on the calling thread.
    Sequential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    pub budget: u64,
    pub reduction: Reduction,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            budget: DEFAULT_BUDGET,
            reduction: Reduction::Parallel,
        }
    }
}

impl EvalOptions {
    pub fn sequential() -> Self {
        EvalOptions {
            reduction: Reduction::Sequential,
            ..Default::default()
        }
    }

    pub fn with_budget(self, budget: u64) -> Self {
        EvalOptions { budget, ..self }
    }
}

/// Applies `f` to consecutive chunks of `0..total`, returning per-chunk
/// results in chunk order.
pub(crate) fn map_chunks<T, F>(total: u64, reduction: Reduction, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let chunks = total.div_ceil(CHUNK);
    let range = move |c: u64| (c * CHUNK)..((c + 1) * CHUNK).min(total);
    match reduction {
        #[cfg(feature = "parallel")]
        Reduction::Parallel => (0..chunks).into_par_iter().map(|c| f(range(c))).collect(),
        _ => (0..chunks).map(|c| f(range(c))).collect(),
    }
}

/// Maps `f` over a slice, in parallel when requested. Output order matches input.
pub(crate) fn map_items<I, T, F>(items: &[I], reduction: Reduction, f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    match reduction {
        #[cfg(feature = "parallel")]
        Reduction::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}
