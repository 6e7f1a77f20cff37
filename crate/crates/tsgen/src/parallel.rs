//! Chunked, order-preserving parallel map.
//!
//! Items are read sequentially in chunks, each chunk is mapped on the worker
//! pool, and results are handed to the sink in input order. Every per-item
//! computation draws its randomness from the item's own id, so the output
//! does not depend on the thread count.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

pub struct Workers {
    pool: Option<ThreadPool>,
    chunk_size: usize,
}

impl Workers {
    pub fn new(threads: usize, chunk_size: usize) -> anyhow::Result<Self> {
        let pool = if threads > 1 { Some(ThreadPoolBuilder::new().num_threads(threads).build()?) } else { None };
        Ok(Self { pool, chunk_size: chunk_size.max(1) })
    }

    pub fn map<T, U, F>(&self, items: Vec<T>, f: F) -> Vec<U>
    where
        T: Send,
        U: Send,
        F: Fn(T) -> U + Sync + Send,
    {
        match &self.pool {
            Some(pool) => pool.install(|| items.into_par_iter().map(f).collect()),
            None => items.into_iter().map(f).collect(),
        }
    }

    /// Pulls `items` a chunk at a time, maps each chunk with `f` and feeds
    /// the results to `sink` in input order.
    pub fn stream<I, T, U, F, S>(&self, items: I, f: F, mut sink: S) -> anyhow::Result<()>
    where
        I: IntoIterator<Item = anyhow::Result<T>>,
        T: Send,
        U: Send,
        F: Fn(T) -> U + Sync + Send,
        S: FnMut(U) -> anyhow::Result<()>,
    {
        let mut items = items.into_iter();
        loop {
            let chunk = items.by_ref().take(self.chunk_size).collect::<anyhow::Result<Vec<T>>>()?;
            if chunk.is_empty() {
                return Ok(());
            }
            for out in self.map(chunk, &f) {
                sink(out)?;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_kept_for_any_thread_count() {
        let expected: Vec<u64> = (0..1000u64).map(|x| x * x).collect();
        for threads in [1, 3, 8] {
            let workers = Workers::new(threads, 7).unwrap();
            let mut got = Vec::new();
            workers
                .stream(
                    (0..1000u64).map(Ok),
                    |x| x * x,
                    |y| {
                        got.push(y);
                        Ok(())
                    },
                )
                .unwrap();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn read_errors_stop_the_stream() {
        let workers = Workers::new(2, 4).unwrap();
        let items = (0..10).map(|i| if i == 6 { Err(anyhow::anyhow!("bad line")) } else { Ok(i) });
        let mut seen = 0;
        let err = workers.stream(
            items,
            |x| x,
            |_| {
                seen += 1;
                Ok(())
            },
        );
        assert!(err.is_err());
        assert_eq!(seen, 4);
    }
}
