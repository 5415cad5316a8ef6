//! Deterministic block parallelism.
//!
//! Ranges are cut into fixed-size blocks aligned to the range start; blocks
//! are evaluated by rayon workers and the per-block results are combined by a
//! fixed pairwise tree. The result therefore never depends on how many
//! workers happened to run.

use rayon::prelude::*;

use crate::dd::{pairwise_sum, Dd, ScaledDd};

/// Terms per block.
pub const BLOCK: u64 = 1 << 14;

/// Half-open blocks `[a, b)` covering `[start, end)`.
pub fn blocks(start: u64, end: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut a = start;
    while a < end {
        let b = a.saturating_add(BLOCK).min(end);
        out.push((a, b));
        a = b;
    }
    out
}

/// Evaluates `f` on every block in parallel, returning results in block order.
pub fn par_map_blocks<T, F>(start: u64, end: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync,
{
    blocks(start, end)
        .into_par_iter()
        .map(|(a, b)| f(a, b))
        .collect()
}

/// `sum_{r in [start, end)} term(r)`.
pub fn par_sum<F>(start: u64, end: u64, term: F) -> Dd
where
    F: Fn(u64) -> Dd + Sync,
{
    let parts = par_map_blocks(start, end, |a, b| {
        let mut s = Dd::ZERO;
        for r in a..b {
            s += term(r);
        }
        s
    });
    pairwise_sum(&parts)
}

/// `sum_{r in [start, end)} ln term(r)` for positive terms, accumulated as a
/// scaled product inside each block.
pub fn par_log_product<F>(start: u64, end: u64, term: F) -> Dd
where
    F: Fn(u64) -> Dd + Sync,
{
    let parts = par_map_blocks(start, end, |a, b| {
        let mut p = ScaledDd::ONE;
        for r in a..b {
            p.mul_dd(term(r));
        }
        p.ln_abs()
    });
    pairwise_sum(&parts)
}

/// Runs `f` inside a pool with exactly `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
    {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
