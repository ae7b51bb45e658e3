//! Execution strategy for the data-parallel inner loops.
//!
//! With the `parallel` feature (on by default) [`Execution::Parallel`] runs on
//! the global rayon pool. Without it, both variants run sequentially, so
//! callers never need their own `cfg` switches.

/// How a batch of independent work items is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Order-preserving map.
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }

    /// Map each item, then fold the results with an associative `combine`.
    ///
    /// `identity` must be a neutral element for `combine`; the parallel path
    /// may call it more than once.
    pub fn map_reduce<T, U, F, I, C>(self, items: &[T], f: F, identity: I, combine: C) -> U
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
        I: Fn() -> U + Sync + Send,
        C: Fn(U, U) -> U + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).reduce(identity, combine)
            }
            _ => items.iter().map(f).fold(identity(), combine),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order_in_both_modes() {
        let items: Vec<u32> = (0..1000).collect();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let out = exec.map(&items, |x| x * 2);
            assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
        }
    }

    #[test]
    fn map_reduce_matches_sequential_sum() {
        let items: Vec<u64> = (1..=500).collect();
        let seq = Execution::Sequential.map_reduce(&items, |x| *x, || 0, |a, b| a + b);
        let par = Execution::Parallel.map_reduce(&items, |x| *x, || 0, |a, b| a + b);
        assert_eq!(seq, 125_250);
        assert_eq!(par, seq);
    }
}
