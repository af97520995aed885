//! Fork-join execution capability handed to the library by its caller.
//!
//! Kernels never spawn threads on their own. They receive an [`Executor`]
//! and split their output into disjoint chunks (usually image rows); every
//! chunk is computed from immutable inputs, so the result does not depend
//! on how many workers ran it.
//!
//! With the `parallel` feature disabled every executor runs sequentially.

use crate::error::{Result, StereoError};

pub struct Executor {
    workers: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("workers", &self.workers).finish()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::sequential()
    }
}

impl Executor {
    pub fn sequential() -> Self {
        Executor {
            workers: 1,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    /// Builds an executor with `workers` threads; `0` picks the number of
    /// available hardware threads.
    pub fn with_workers(workers: usize) -> Result<Self> {
        let workers = if workers == 0 {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        } else {
            workers
        };
        if workers == 1 {
            return Ok(Self::sequential());
        }
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| StereoError::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(Executor { workers, pool: Some(pool) })
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = StereoError::InvalidParameter;
            Ok(Executor { workers })
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn is_parallel(&self) -> bool {
        #[cfg(feature = "parallel")]
        {
            self.pool.is_some()
        }
        #[cfg(not(feature = "parallel"))]
        {
            false
        }
    }

    /// Calls `f(chunk_index, chunk)` for every `chunk_len`-sized chunk of `data`.
    pub fn for_each_chunk<T, F>(&self, data: &mut [T], chunk_len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        assert!(chunk_len > 0);
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            pool.install(|| {
                data.par_chunks_mut(chunk_len)
                    .enumerate()
                    .for_each(|(i, c)| f(i, c))
            });
            return;
        }
        data.chunks_mut(chunk_len).enumerate().for_each(|(i, c)| f(i, c));
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_are_visited_once() {
        for workers in [1, 3] {
            let exec = Executor::with_workers(workers).unwrap();
            let mut data = vec![0usize; 100];
            exec.for_each_chunk(&mut data, 7, |i, c| c.iter_mut().for_each(|x| *x += i + 1));
            for (k, x) in data.iter().enumerate() {
                assert_eq!(*x, k / 7 + 1);
            }
        }
    }

    #[test]
    fn map_keeps_order() {
        let exec = Executor::with_workers(4).unwrap();
        let v = exec.map(50, |i| i * i);
        assert_eq!(v, (0..50).map(|i| i * i).collect::<Vec<_>>());
    }
}
