// Thin wrappers over rayon. With the `parallel` feature off every helper runs
// sequentially, which is what the benches compare against.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, preserving order.
pub(crate) fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Folds chunks of `items` into accumulators and reduces them with `merge`.
///
/// `merge` must be commutative and associative; rayon makes no promise about
/// which partial results meet first.
pub(crate) fn fold_reduce<T, A, Id, Fo, Me>(items: &[T], identity: Id, fold: Fo, merge: Me) -> A
where
    T: Sync,
    A: Send,
    Id: Fn() -> A + Sync + Send,
    Fo: Fn(A, &T) -> A + Sync + Send,
    Me: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items
            .par_iter()
            .fold(&identity, fold)
            .reduce(&identity, merge)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = &merge;
        items.iter().fold(identity(), fold)
    }
}

/// Number of worker threads the helpers above will use.
pub fn current_workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Runs `f` on a dedicated pool of `workers` threads. Without the `parallel`
/// feature `f` simply runs on the calling thread.
pub fn with_workers<R, F>(workers: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}
