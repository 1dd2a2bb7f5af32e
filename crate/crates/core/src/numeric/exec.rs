//! Pluggable executors for embarrassingly parallel maps.
//!
//! Results are always returned in index order so callers can reduce them in
//! a fixed order, which keeps outputs independent of the worker count.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluates `f(0..len)` and returns the results in index order.
    fn map_collect<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_collect<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}

impl<E: Executor> Executor for &E {
    fn map_collect<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (**self).map_collect(len, f)
    }
}
