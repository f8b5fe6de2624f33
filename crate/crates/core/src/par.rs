//! Execution policy for data-parallel loops.
//!
//! Every parallel path in the crate is an element-wise map: each output slot
//! depends only on its own index, never on a reduction order. Sequential and
//! parallel execution therefore produce bit-identical results.

/// Below this many elements a parallel map is not worth the dispatch cost.
pub const PAR_MIN_LEN: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Rayon thread pool when the `parallel` feature is on; sequential otherwise.
    #[default]
    Parallel,
}

impl Exec {
    /// Whether this policy actually dispatches to worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `(0..n).map(f).collect()`, possibly in parallel.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() && n >= PAR_MIN_LEN {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Like [`Exec::map_range`] but without the length threshold, for batches
    /// of expensive independent jobs (runs, trial functions, lattice points).
    pub fn map_jobs<I, T, F>(self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Fill `out[i] = f(offset + i)` for every slot.
    pub fn fill<F>(self, out: &mut [f64], offset: usize, f: F)
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() && out.len() >= PAR_MIN_LEN {
            use rayon::prelude::*;
            out.par_iter_mut()
                .enumerate()
                .for_each(|(i, o)| *o = f(offset + i));
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = f(offset + i);
        }
    }
}
