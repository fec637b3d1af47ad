//! Deterministic floating-point reductions.

use num_complex::Complex64;
use rayon::prelude::*;

const LEAF: usize = 32;
const CHUNK: u64 = 4096;

/// Pairwise (cascade) summation in a fixed association order.
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

pub fn pairwise_sum_real(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum_real(l) + pairwise_sum_real(r)
}

/// `Σ_{0 <= i < len} f(i)` over fixed-size chunks run in parallel; the result
/// does not depend on the number of worker threads.
pub fn par_sum<F>(len: u64, f: F) -> Complex64
where
    F: Fn(u64) -> Complex64 + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<Complex64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            (lo..hi).map(&f).sum()
        })
        .collect();
    pairwise_sum(&partial)
}

pub fn par_sum_real<F>(len: u64, f: F) -> f64
where
    F: Fn(u64) -> f64 + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            (lo..hi).map(&f).sum()
        })
        .collect();
    pairwise_sum_real(&partial)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_sum_is_thread_count_independent() {
        let f = |i: u64| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos());
        let a = par_sum(100_003, f);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| par_sum(100_003, f));
        assert_eq!(a, b);
        let seq: Complex64 = (0..100_003).map(f).sum();
        assert!((a - seq).norm() < 1e-9);
    }
}
