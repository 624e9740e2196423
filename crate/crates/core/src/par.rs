//! Node-parallel evaluation helpers.
//!
//! With the `parallel` feature (default) node maps run on the rayon pool;
//! without it they are plain sequential loops. Every helper writes each
//! output slot from exactly one closure call, so results are bit-identical
//! between the two paths. Reductions are never parallelised.

#[cfg(feature = "parallel")]
use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

#[cfg(feature = "parallel")]
const MIN_CHUNK: usize = 512;

/// Route all node maps through the sequential path at runtime.
///
/// Only meaningful with the `parallel` feature; used by the benches to
/// compare both paths in one binary.
pub fn force_sequential(on: bool) {
    #[cfg(feature = "parallel")]
    FORCE_SEQUENTIAL.store(on, Ordering::Relaxed);
    #[cfg(not(feature = "parallel"))]
    let _ = on;
}

/// Whether node maps currently run in parallel.
pub fn is_parallel() -> bool {
    #[cfg(feature = "parallel")]
    {
        !FORCE_SEQUENTIAL.load(Ordering::Relaxed)
    }
    #[cfg(not(feature = "parallel"))]
    {
        false
    }
}

/// Evaluate `f` at every index in `0..n` and collect the results in order.
pub fn map_nodes<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() && n >= 2 * MIN_CHUNK {
        use rayon::prelude::*;
        return (0..n).into_par_iter().with_min_len(MIN_CHUNK).map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Run independent jobs, concurrently when parallelism is available.
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        return rayon::join(a, b);
    }
    (a(), b())
}

/// Map `f` over `items`, preserving order.
pub fn map_items<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}
