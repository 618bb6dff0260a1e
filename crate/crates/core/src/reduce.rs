//! Deterministic summation helpers.
//!
//! All norm and field accumulations in this crate go through a fixed-shape
//! pairwise reduction so results are bit-identical regardless of how many
//! rayon workers are active.

/// Pairwise sum with a fixed tree shape. Leaves of up to 16 elements are
/// summed left to right; the tree splits at the midpoint.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Pairwise sum of `f(i)` for `i in 0..n` without materializing the values.
/// Same tree shape as [`pairwise_sum`].
pub fn pairwise_sum_by<F: Fn(usize) -> f64 + Copy>(lo: usize, hi: usize, f: F) -> f64 {
    let n = hi - lo;
    if n <= 16 {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        acc
    } else {
        let mid = lo + n / 2;
        pairwise_sum_by(lo, mid, f) + pairwise_sum_by(mid, hi, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-12);
    }

    #[test]
    fn shape_is_independent_of_chunking() {
        // Summing directly or via the closure form must agree bitwise.
        let xs: Vec<f64> = (0..12345).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let a = pairwise_sum(&xs);
        let b = pairwise_sum_by(0, xs.len(), |i| xs[i]);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn more_accurate_than_sequential_on_ill_conditioned_input() {
        let n = 1 << 20;
        let xs: Vec<f64> = (0..n).map(|_| 0.1f64).collect();
        let exact = 0.1 * n as f64;
        let pair_err = (pairwise_sum(&xs) - exact).abs();
        let mut seq = 0.0;
        for &x in &xs {
            seq += x;
        }
        let seq_err = (seq - exact).abs();
        assert!(pair_err <= seq_err);
    }
}
