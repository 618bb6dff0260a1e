//! Composite Gauss-Legendre quadrature used by the oscillatory integrals.

/// 8-point Gauss-Legendre abscissae on [-1, 1].
pub const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];

/// 8-point Gauss-Legendre weights on [-1, 1].
pub const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_48,
    0.313_706_645_877_887_27,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_27,
    0.222_381_034_453_374_48,
    0.101_228_536_290_376_26,
];

/// Nodes and weights of a composite 8-point Gauss-Legendre rule with
/// `subcells` equal subintervals of `[lo, hi]`. Node count is `8 * subcells`.
pub fn composite_gl8(lo: f64, hi: f64, subcells: usize) -> (Vec<f64>, Vec<f64>) {
    let m = subcells.max(1);
    let w = (hi - lo) / m as f64;
    let half = 0.5 * w;
    let mut nodes = Vec::with_capacity(8 * m);
    let mut weights = Vec::with_capacity(8 * m);
    for k in 0..m {
        let mid = lo + (k as f64 + 0.5) * w;
        for j in 0..8 {
            nodes.push(mid + half * GL8_NODES[j]);
            weights.push(half * GL8_WEIGHTS[j]);
        }
    }
    (nodes, weights)
}

/// Integrate a scalar function with a composite 8-point rule.
pub fn integrate_gl8<F: Fn(f64) -> f64>(lo: f64, hi: f64, subcells: usize, f: F) -> f64 {
    let (nodes, weights) = composite_gl8(lo, hi, subcells);
    let mut acc = 0.0;
    for (t, w) in nodes.iter().zip(weights.iter()) {
        acc += w * f(*t);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_polynomials() {
        // 8-point GL is exact through degree 15.
        let v = integrate_gl8(0.0, 1.0, 1, |x| x.powi(15));
        assert!((v - 1.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        let (_, w) = composite_gl8(0.25, 0.75, 7);
        let total: f64 = w.iter().sum();
        assert!((total - 0.5).abs() < 1e-14);
    }

    #[test]
    fn oscillatory_accuracy_eight_nodes_per_period() {
        // One period of e(t) resolved by one 8-node subcell.
        let re = integrate_gl8(0.0, 1.0, 1, |t| (2.0 * std::f64::consts::PI * t).cos());
        assert!(re.abs() < 1e-9);
    }
}
