//! Order-preserving map over a work list that runs on the rayon pool when the
//! `parallel` feature is compiled in and the caller asks for it, and falls
//! back to a plain sequential loop otherwise.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn map_collect<T, U, F>(parallel: bool, items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return items.into_par_iter().map(f).collect();
    }
    let _ = parallel;
    items.into_iter().map(f).collect()
}
