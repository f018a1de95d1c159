//! Execution policy for data-parallel loops.
//!
//! With the `parallel` feature, [`Exec::Parallel`] dispatches onto the rayon
//! global pool. Without it the variant still exists but runs sequentially, so
//! callers never need their own `cfg` gates. All parallel paths are
//! element-wise (no floating-point reductions), so results are bit-identical
//! between policies.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
const MIN_CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Whether this policy actually runs on more than one thread.
    pub fn is_parallel(self) -> bool {
        #[cfg(feature = "parallel")]
        return self == Exec::Parallel && rayon::current_num_threads() > 1;
        #[cfg(not(feature = "parallel"))]
        return false;
    }

    /// `out[i] = f(i)` for every index.
    pub fn fill_indexed<T, F>(self, out: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            out.par_iter_mut()
                .with_min_len(MIN_CHUNK)
                .enumerate()
                .for_each(|(i, o)| *o = f(i));
            return;
        }
        out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
    }

    /// Applies `f(i, &mut out[i])` for every index.
    pub fn for_each_indexed<T, F>(self, out: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            out.par_iter_mut()
                .with_min_len(MIN_CHUNK)
                .enumerate()
                .for_each(|(i, o)| f(i, o));
            return;
        }
        out.iter_mut().enumerate().for_each(|(i, o)| f(i, o));
    }

    /// Maps independent jobs (parameter sweeps); order of the output follows the input.
    pub fn map<I, O, F>(self, items: &[I], f: F) -> Vec<O>
    where
        I: Sync,
        O: Send,
        F: Fn(&I) -> O + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }
}

/// Runs `f` on a dedicated pool of `threads` workers; without the `parallel`
/// feature it simply calls `f`.
pub fn on_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
        return pool.install(f);
    }
    let _ = threads;
    f()
}
