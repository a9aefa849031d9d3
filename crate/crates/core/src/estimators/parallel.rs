//! Order-preserving parallel map over path indices.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Evaluates `f(i)` for `i in 0..count` on `workers` threads and returns results in index order.
///
/// The first failing index (not the first to fail in time) determines the error, so the
/// outcome does not depend on scheduling.
pub fn map_paths<T, F>(count: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let run = || (0..count).into_par_iter().map(&f).collect::<Vec<Result<T>>>();
    let results = match workers {
        None => run(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start {w} worker threads: {e}")))?
            .install(run),
    };
    results.into_iter().collect()
}
