//! Pluggable fan-out for independent per-sample or per-device work.

use alloc::vec::Vec;

/// Runs `f(0), …, f(n − 1)` and returns the results in index order.
///
/// Implementations may evaluate the calls concurrently; callers rely on the
/// returned order, never on the evaluation order.
pub trait Executor: Sync {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// In-order evaluation on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
