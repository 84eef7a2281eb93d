//! Data-parallel map with a sequential fallback when the `parallel` feature
//! is off.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Whether this build can run maps on the rayon pool.
pub const AVAILABLE: bool = cfg!(feature = "parallel");

/// Maps `f` over `items`, preserving order. Runs on the rayon pool only when
/// `parallel` is set and the feature is compiled in.
pub fn map_collect<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}
