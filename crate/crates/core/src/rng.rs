//! Seed streams and deterministic batch execution.
//!
//! A run is identified by a 64-bit master seed and a run index. Each pair maps
//! to its own ChaCha8 stream (the index selects the cipher's stream id), so
//! distinct indices are independent and the same `(seed, index)` reproduces a
//! run bit for bit. Batches are cut into fixed-size chunks whose stream ids do
//! not depend on the worker count, and partial results are merged in chunk
//! order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type SimRng = ChaCha8Rng;

/// Number of samples handled by one stream in [`run_batched`].
pub const CHUNK: usize = 1024;

/// The RNG for run `index` under `master_seed`.
pub fn stream(master_seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Executes `n` samples in chunks of [`CHUNK`], chunk `k` drawing from
/// `stream(seed, k)`. `work(rng, first, count)` produces a partial result for
/// samples `first..first + count`; partials are folded with `merge` in chunk
/// order, so the outcome is independent of the number of workers.
pub fn run_batched<A, W, M>(n: usize, seed: u64, workers: Option<usize>, work: W, merge: M) -> Option<A>
where
    A: Send,
    W: Fn(&mut SimRng, usize, usize) -> A + Sync,
    M: Fn(A, A) -> A,
{
    let chunks = n.div_ceil(CHUNK);
    let job = |k: usize| {
        let first = k * CHUNK;
        let count = CHUNK.min(n - first);
        let mut rng = stream(seed, k as u64);
        work(&mut rng, first, count)
    };
    let partials: Vec<A> = with_workers(workers, || (0..chunks).into_par_iter().map(job).collect());
    partials.into_iter().reduce(merge)
}

/// Runs `f` on a pool of `workers` threads (the global pool when `None`).
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}
