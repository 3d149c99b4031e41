//! Data-parallel map helpers with a sequential fallback, plus seed-stream
//! derivation for reproducible fan-out.
//!
//! Hot loops (observation drawing, dataset generation, score evaluation,
//! grid search, learning-curve training) go through [`map_indexed`] /
//! [`try_map_indexed`]. With the default `parallel` feature these run on
//! rayon; built with `--no-default-features` they degrade to plain
//! sequential maps. Work items are keyed by index and collected in order,
//! so results are bit-identical regardless of thread count or feature
//! selection. Any reduction over the results must stay associative.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Fallible variant of [`map_indexed`]; returns the first error encountered.
pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> std::result::Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> std::result::Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential reference path with the same contract as [`map_indexed`].
/// The benches compare this against the parallel path; tests use it to
/// check thread-count independence.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: FnMut(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Independent RNG stream `stream` of the generator family keyed by
/// `base`. Streams with distinct ids never overlap, so per-item streams
/// partition the seed space for parallel generation.
pub fn stream_rng(base: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed from `base` and a branch key (splitmix64 finalizer).
pub fn mix_seed(base: u64, branch: u64) -> u64 {
    let mut z = base ^ branch.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
