//! Deterministic summation and elementary statistics.
//!
//! All reductions are pairwise with fixed chunk boundaries, so the result
//! of summing a given slice is a pure function of the slice — independent
//! of how the values were produced or scheduled.

use crate::real::Real;

const CHUNK: usize = 128;

/// Pairwise (tree) summation with a fixed base-case size.
pub fn pairwise_sum<R: Real>(xs: &[R]) -> R {
    if xs.len() <= CHUNK {
        let mut acc = R::zero();
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    // Split at the largest CHUNK multiple at or above the midpoint.
    let half = xs.len() / 2;
    let split = half.div_ceil(CHUNK) * CHUNK;
    pairwise_sum(&xs[..split]) + pairwise_sum(&xs[split..])
}

/// Pairwise sum of `f(x)` over a slice, materialized once.
pub fn pairwise_sum_by<T, R: Real>(xs: &[T], f: impl Fn(&T) -> R) -> R {
    let buf: Vec<R> = xs.iter().map(f).collect();
    pairwise_sum(&buf)
}

/// Sample mean.
pub fn mean<R: Real>(xs: &[R]) -> R {
    pairwise_sum(xs) / R::from_usize(xs.len()).unwrap()
}

/// Sample mean and the standard error of the mean (`sd / sqrt(n)`),
/// with the `n-1` variance denominator.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = mean(xs);
    if n == 1 {
        return (m, 0.0);
    }
    let ss = pairwise_sum_by(xs, |&x| (x - m) * (x - m));
    let var = (ss / (n - 1) as f64).max(0.0);
    (m, (var / n as f64).sqrt())
}

/// Population variance of a sample (denominator `n`).
pub fn population_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    pairwise_sum_by(xs, |&x| (x - m) * (x - m)) / xs.len() as f64
}

/// Mean of `x` under nonnegative weights: `sum(w x) / sum(w)`.
pub fn weighted_mean(pairs: &[(f64, f64)]) -> f64 {
    let wsum = pairwise_sum_by(pairs, |&(w, _)| w);
    let wx = pairwise_sum_by(pairs, |&(w, x)| w * x);
    wx / wsum
}
