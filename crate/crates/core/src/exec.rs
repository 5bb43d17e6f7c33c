//! Execution strategy for the data-parallel sweeps.
//!
//! Every exhaustive oracle and sweep in the crate is a map over an
//! independent list of work items followed by an exact reduction. With the
//! `parallel` feature the map runs on the rayon pool; without it (or with
//! [`Exec::Sequential`]) it is a plain iterator. Results are identical either
//! way because reductions are exact and order-insensitive, and collected
//! vectors keep input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when work will actually be distributed across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    pub fn map_range<R, F>(self, range: std::ops::Range<u64>, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(u64) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return range.into_par_iter().map(f).collect();
        }
        range.map(f).collect()
    }

    pub fn all<T, F>(self, items: &[T], f: F) -> bool
    where
        T: Sync,
        F: Fn(&T) -> bool + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().all(f);
        }
        items.iter().all(f)
    }

    /// Sum of `f` over a numeric range. The accumulator type must be an exact
    /// commutative monoid for the parallel and sequential results to agree.
    pub fn sum_range<R, F>(self, range: std::ops::Range<u64>, f: F) -> R
    where
        R: Send + std::iter::Sum<R> + Default + std::ops::Add<Output = R>,
        F: Fn(u64) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return range.into_par_iter().map(f).reduce(R::default, |a, b| a + b);
        }
        range.map(f).sum()
    }
}
