//! Discretized decoupling: weighted L^6 averages of exponential sums, the
//! mollification bridge from sums back to extension operators, and the
//! exact solution-counting oracle for the parabola.
//!
//! The oracle link: by orthogonality, the integral of
//! `|sum_{n<=N} e(n x1 + n^2 x2)|^6` over the unit torus equals the number
//! of integer solutions of `n1+n2+n3 = n4+n5+n6`,
//! `n1^2+n2^2+n3^2 = n4^2+n5^2+n6^2` in {1..N}^6.

use crate::config::LabConfig;
use crate::curve::GraphCurve;
use crate::error::{Error, Result};
use crate::norms::{weighted_lp_pow_cached, window_grid, WeightGrid, WeightRectangle};
use crate::oscillatory::{
    e2pi, expsum_eval, expsum_field, extension_eval, PlaneCurve, TestFunction,
};
use crate::partition::Interval;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// N points with t_n in ((n-1)/N, n/N] and coefficients a_n.
#[derive(Debug, Clone)]
pub struct PointSystem {
    pub n: usize,
    pub points: Vec<f64>,
    pub coeffs: Vec<Complex64>,
}

impl PointSystem {
    fn validated(n: usize, points: Vec<f64>) -> Result<PointSystem> {
        for (i, &t) in points.iter().enumerate() {
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            if !(t > lo && t <= hi) {
                return Err(Error::Domain(format!(
                    "point t_{} = {t} outside its cell ({lo}, {hi}]",
                    i + 1
                )));
            }
        }
        Ok(PointSystem {
            n,
            points,
            coeffs: vec![Complex64::new(1.0, 0.0); n],
        })
    }

    /// t_n = n/N.
    pub fn lattice(n: usize) -> PointSystem {
        let points = (1..=n).map(|k| k as f64 / n as f64).collect();
        PointSystem::validated(n, points).expect("lattice points are in their cells")
    }

    /// t_n uniform in ((n-1)/N, n/N].
    pub fn random(n: usize, seed: u64) -> PointSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (1..=n)
            .map(|k| {
                let u: f64 = rng.random();
                (k - 1) as f64 / n as f64 + (1.0 - u) / n as f64
            })
            .collect();
        PointSystem::validated(n, points).expect("random points are in their cells")
    }

    /// t_n = n/N - u_n/N^2 with u_n uniform in [0, 1).
    pub fn perturbed(n: usize, seed: u64) -> PointSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (1..=n)
            .map(|k| {
                let u: f64 = rng.random();
                k as f64 / n as f64 - u / (n * n) as f64
            })
            .collect();
        PointSystem::validated(n, points).expect("perturbed points are in their cells")
    }

    pub fn with_coeffs(mut self, coeffs: Vec<Complex64>) -> PointSystem {
        assert_eq!(coeffs.len(), self.n);
        self.coeffs = coeffs;
        self
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// One weighted L^6 average of an exponential sum over a ball.
#[derive(Debug, Clone)]
pub struct L6Report {
    pub n: usize,
    pub radius: f64,
    /// (integral of |S|^6 w / integral of w)^(1/6).
    pub l6_average: f64,
    pub l2_norm: f64,
    /// l6_average / l2_norm: the quantity bounded by N^eps.
    pub ratio: f64,
    /// N^r with r from curve analysis; the radius precondition.
    pub radius_required: f64,
    /// false when radius < N^r: the average is still computed but flagged.
    pub radius_ok: bool,
    pub grid_points: usize,
}

/// Normalized sixth-power average of the exponential sum against the ball
/// weight w_{B_R}(x) = omega_B(x / R).
pub fn l6_average(
    curve: &GraphCurve,
    ps: &PointSystem,
    radius: f64,
    cfg: &LabConfig,
) -> Result<L6Report> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::Domain(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let r = curve.decoupling_exponent_r()?;
    let radius_required = (ps.n as f64).powf(r);
    let radius_ok = radius >= radius_required * (1.0 - 1e-12);
    let rect = WeightRectangle::ball(radius);
    let whole = Interval::closed(0.0, 1.0);
    let (f1, f2) = curve.frequency_extents(whole);
    let spec = window_grid(&rect, f1, f2, cfg);
    let field = expsum_field(curve, &ps.points, &ps.coeffs, spec, rect, cfg)?;
    let wg = WeightGrid::compute(&rect, spec, cfg);
    let pow6 = weighted_lp_pow_cached(&field.values, &wg, 6.0);
    let l6 = (pow6 / wg.mass).powf(1.0 / 6.0);
    let l2 = ps.l2_norm();
    Ok(L6Report {
        n: ps.n,
        radius,
        l6_average: l6,
        l2_norm: l2,
        ratio: if l2 > 0.0 { l6 / l2 } else { 0.0 },
        radius_required,
        radius_ok,
        grid_points: spec.len(),
    })
}

/// Exact count of solutions to the quadratic Vinogradov system in {1..N}^6
/// by literal enumeration. Budgeted at N <= 64.
pub fn vinogradov_count_brute(n: usize) -> Result<u64> {
    if n == 0 || n > 64 {
        return Err(Error::Domain(format!(
            "brute-force count supports 1 <= N <= 64, got {n}"
        )));
    }
    let n = n as u64;
    let mut count = 0u64;
    for a in 1..=n {
        for b in 1..=n {
            for c in 1..=n {
                let s = a + b + c;
                let q = a * a + b * b + c * c;
                for d in 1..=n {
                    for e in 1..=n {
                        for f in 1..=n {
                            if d + e + f == s && d * d + e * e + f * f == q {
                                count += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(count)
}

/// Same count via meet-in-the-middle: bucket all triples by
/// (sum, sum of squares) and add the squared bucket sizes. Budgeted at
/// N <= 512.
pub fn vinogradov_count_mitm(n: usize) -> Result<u64> {
    if n == 0 || n > 512 {
        return Err(Error::Domain(format!(
            "meet-in-the-middle count supports 1 <= N <= 512, got {n}"
        )));
    }
    let n = n as u64;
    // Key packs (sumsq, sum); sumsq <= 3*512^2 and sum <= 3*512 fit u32.
    let mut keys: Vec<u32> = Vec::with_capacity((n * n * n) as usize);
    for a in 1..=n {
        for b in 1..=n {
            for c in 1..=n {
                let s = (a + b + c) as u32;
                let q = (a * a + b * b + c * c) as u32;
                keys.push(q * 2048 + s);
            }
        }
    }
    keys.sort_unstable();
    let mut count = 0u64;
    let mut i = 0usize;
    while i < keys.len() {
        let mut j = i + 1;
        while j < keys.len() && keys[j] == keys[i] {
            j += 1;
        }
        let run = (j - i) as u64;
        count += run * run;
        i = j;
    }
    Ok(count)
}

/// Solution count J(N), brute force for small N, meet-in-the-middle above.
pub fn vinogradov_count(n: usize) -> Result<u64> {
    if n <= 16 {
        vinogradov_count_brute(n)
    } else {
        vinogradov_count_mitm(n)
    }
}

/// Rectangle-rule approximation of the torus L^6 integral of the quadratic
/// exponential sum. With `oversample >= 8` the rule resolves every
/// difference frequency, so the value equals the solution count exactly up
/// to rounding.
pub fn torus_l6_integral(n: usize, oversample: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("N must be positive".into()));
    }
    if oversample < 8 {
        return Err(Error::Domain(format!(
            "oversample must be at least 8, got {oversample}"
        )));
    }
    let gx = oversample * n;
    let gy = oversample * n * n;
    let total: f64 = (0..gy)
        .into_par_iter()
        .map(|iv| {
            let v = iv as f64 / gy as f64;
            let mut row = 0.0f64;
            for iu in 0..gx {
                let u = iu as f64 / gx as f64;
                let mut s = Complex64::new(0.0, 0.0);
                for k in 1..=n {
                    let kf = k as f64;
                    s += e2pi(kf * u + kf * kf * v);
                }
                let m2 = s.norm_sqr();
                row += m2 * m2 * m2;
            }
            row
        })
        .sum();
    Ok(total / (gx as f64 * gy as f64))
}

/// Max deviation over an x grid between the extension of the mollified
/// point system g_tau and the exact exponential sum, together with the
/// first-order bound `2 pi (1 + max|phi'|) tau max|x| sum|a_n|`.
pub fn mollified_bridge(
    curve: &GraphCurve,
    ps: &PointSystem,
    tau: f64,
    xs: &[(f64, f64)],
    cfg: &LabConfig,
) -> Result<(f64, f64)> {
    if !(tau > 0.0 && tau < 0.5 / ps.n as f64) {
        return Err(Error::Domain(format!(
            "tau must be in (0, 1/(2N)), got {tau} for N = {}",
            ps.n
        )));
    }
    if ps.points[0] - tau <= 0.0 {
        return Err(Error::Domain(format!(
            "mollification window [t_1 - tau, t_1 + tau] leaves (0, 1]: t_1 = {}, tau = {tau}",
            ps.points[0]
        )));
    }
    let one = TestFunction::callable(|_| Complex64::new(1.0, 0.0));
    let mut worst = 0.0f64;
    let mut max_x = 0.0f64;
    for &x in xs {
        max_x = max_x.max(x.0.abs()).max(x.1.abs());
        let mut mollified = Complex64::new(0.0, 0.0);
        for (t, a) in ps.points.iter().zip(ps.coeffs.iter()) {
            let window = Interval::closed(t - tau, t + tau);
            let avg = extension_eval(curve, window, &one, x, cfg)? / (2.0 * tau);
            mollified += a * avg;
        }
        let exact = expsum_eval(curve, &ps.points, &ps.coeffs, x)?;
        worst = worst.max((mollified - exact).norm());
    }
    let span = Interval::closed((ps.points[0] - tau).max(1e-12), ps.points[ps.n - 1] + tau);
    let (_, d2max) = curve.derivative_bounds(span)?;
    let l1: f64 = ps.coeffs.iter().map(|a| a.norm()).sum();
    let bound = std::f64::consts::TAU * (1.0 + d2max) * tau * max_x * l1;
    debug_assert!(worst <= bound * (1.0 + 1e-9) + 1e-12);
    Ok((worst, bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_small() -> LabConfig {
        LabConfig {
            max_field_points: 400_000,
            ..LabConfig::default()
        }
    }

    #[test]
    fn point_presets_live_in_their_cells() {
        for n in [1usize, 2, 5, 16] {
            for ps in [
                PointSystem::lattice(n),
                PointSystem::random(n, 3),
                PointSystem::perturbed(n, 3),
            ] {
                for (i, &t) in ps.points.iter().enumerate() {
                    let lo = i as f64 / n as f64;
                    let hi = (i + 1) as f64 / n as f64;
                    assert!(t > lo && t <= hi, "n={n}, i={i}, t={t}");
                }
            }
        }
    }

    #[test]
    fn l6_single_point_ratio_is_one() {
        let curve = GraphCurve::parabola();
        let ps = PointSystem::lattice(1).with_coeffs(vec![Complex64::new(0.7, -0.4)]);
        let rep = l6_average(&curve, &ps, 4.0, &cfg_small()).unwrap();
        assert!((rep.ratio - 1.0).abs() < 1e-12, "ratio {}", rep.ratio);
        assert!((rep.l6_average - ps.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn l6_single_nonzero_coefficient_ratio_is_one() {
        let curve = GraphCurve::parabola();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 4];
        coeffs[2] = Complex64::new(0.0, 2.5);
        let ps = PointSystem::lattice(4).with_coeffs(coeffs);
        let rep = l6_average(&curve, &ps, 16.0, &cfg_small()).unwrap();
        assert!((rep.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l6_ratio_invariant_under_global_rotation_and_scaling() {
        let curve = GraphCurve::parabola();
        let n = 4;
        let base = PointSystem::lattice(n);
        let rep0 = l6_average(&curve, &base, 16.0, &cfg_small()).unwrap();
        let rot = Complex64::from_polar(1.0, 1.2345);
        let rotated =
            PointSystem::lattice(n).with_coeffs(base.coeffs.iter().map(|a| a * rot).collect());
        let rep1 = l6_average(&curve, &rotated, 16.0, &cfg_small()).unwrap();
        assert!((rep0.ratio - rep1.ratio).abs() < 1e-12);
        let scaled =
            PointSystem::lattice(n).with_coeffs(base.coeffs.iter().map(|a| a * 3.0).collect());
        let rep3 = l6_average(&curve, &scaled, 16.0, &cfg_small()).unwrap();
        assert!((rep0.ratio - rep3.ratio).abs() < 1e-12);
    }

    #[test]
    fn l6_flags_small_radius() {
        let curve = GraphCurve::parabola();
        let ps = PointSystem::lattice(4);
        let rep = l6_average(&curve, &ps, 2.0, &cfg_small()).unwrap();
        assert!(!rep.radius_ok);
        assert!((rep.radius_required - 16.0).abs() < 1e-9);
        assert!(rep.l6_average > 0.0); // computed anyway
    }

    #[test]
    fn vinogradov_small_counts() {
        // N = 1: only the all-ones tuple.
        assert_eq!(vinogradov_count_brute(1).unwrap(), 1);
        // N = 2: triples grouped by number of 2s; 1+9+9+1 squared bucket sizes.
        assert_eq!(vinogradov_count_brute(2).unwrap(), 20);
        assert_eq!(vinogradov_count(2).unwrap(), 20);
    }

    #[test]
    fn vinogradov_brute_matches_mitm() {
        for n in 1..=8 {
            assert_eq!(
                vinogradov_count_brute(n).unwrap(),
                vinogradov_count_mitm(n).unwrap(),
                "N = {n}"
            );
        }
    }

    #[test]
    fn vinogradov_diagonal_lower_bound() {
        for n in [2usize, 4, 8, 32] {
            let j = vinogradov_count(n).unwrap();
            assert!(j >= (n * n * n) as u64, "J({n}) = {j}");
        }
    }

    #[test]
    fn vinogradov_budgets_are_enforced() {
        assert!(vinogradov_count_brute(65).is_err());
        assert!(vinogradov_count_mitm(513).is_err());
    }

    #[test]
    fn torus_integral_matches_counts() {
        assert!((torus_l6_integral(1, 8).unwrap() - 1.0).abs() < 1e-9);
        let j2 = vinogradov_count(2).unwrap() as f64;
        let t2 = torus_l6_integral(2, 8).unwrap();
        assert!((t2 - j2).abs() / j2 < 1e-6, "torus {t2} vs count {j2}");
    }

    #[test]
    fn l6_lattice_agrees_with_counting_oracle_at_large_radius() {
        // With the ball much larger than the sum's periods, the weighted
        // average approaches the torus average J(N)^(1/6).
        let curve = GraphCurve::parabola();
        let n = 2;
        let ps = PointSystem::lattice(n);
        let rep = l6_average(&curve, &ps, 1024.0, &cfg_small()).unwrap();
        let want = (vinogradov_count(n).unwrap() as f64).powf(1.0 / 6.0) / (n as f64).sqrt();
        assert!(
            (rep.ratio - want).abs() / want < 0.05,
            "ratio {} vs torus prediction {want}",
            rep.ratio
        );
    }

    #[test]
    fn ball_cover_consistency() {
        // The big-ball sixth-power mass is bounded by the cover constant
        // times the sum over a finitely overlapping cover by smaller balls.
        let curve = GraphCurve::parabola();
        let n = 2;
        let ps = PointSystem::lattice(n);
        let cfg = cfg_small();
        let small_r = 4.0f64; // N^r
        let big_r = 8.0f64;
        let big = WeightRectangle::ball(big_r);
        let whole = Interval::closed(0.0, 1.0);
        let (f1, f2) = curve.frequency_extents(whole);
        let spec = window_grid(&big, f1, f2, &cfg);
        let field = expsum_field(&curve, &ps.points, &ps.coeffs, spec, big, &cfg).unwrap();
        let wg_big = WeightGrid::compute(&big, spec, &cfg);
        let big_pow = weighted_lp_pow_cached(&field.values, &wg_big, 6.0);
        let mut tile_pow_sum = 0.0;
        let mut tiles = Vec::new();
        for i in -2i32..=2 {
            for j in -2i32..=2 {
                tiles.push(WeightRectangle {
                    center: (i as f64 * small_r, j as f64 * small_r),
                    size: (small_r, small_r),
                    kind: crate::norms::RectKind::Ball { radius: small_r },
                });
            }
        }
        let mut cover: f64 = 0.0;
        for iy in 0..spec.ny {
            let y = spec.y(iy);
            for ix in 0..spec.nx {
                let x = spec.x(ix);
                let wb = big.weight((x, y), cfg.weight_exponent);
                let ws: f64 = tiles
                    .iter()
                    .map(|t| t.weight((x, y), cfg.weight_exponent))
                    .sum();
                cover = cover.max(wb / ws);
            }
        }
        for t in &tiles {
            let wg = WeightGrid::compute(t, spec, &cfg);
            tile_pow_sum += weighted_lp_pow_cached(&field.values, &wg, 6.0);
        }
        assert!(
            big_pow <= cover * tile_pow_sum * (1.0 + 1e-9),
            "big {big_pow} vs cover {cover} * tiles {tile_pow_sum}"
        );
    }

    #[test]
    fn mollified_bridge_first_order_in_tau() {
        let curve = GraphCurve::parabola();
        let ps = PointSystem::lattice(4);
        let cfg = cfg_small();
        let xs: Vec<(f64, f64)> = vec![(0.0, 0.0), (1.5, -2.0), (3.0, 4.0), (-5.0, 2.5)];
        let tau1 = 1.0 / 64.0;
        let tau2 = tau1 / 2.0;
        let (d1, b1) = mollified_bridge(&curve, &ps, tau1, &xs, &cfg).unwrap();
        let (d2, b2) = mollified_bridge(&curve, &ps, tau2, &xs, &cfg).unwrap();
        // The linear-in-tau bound holds at every tau...
        assert!(d1 <= b1 * (1.0 + 1e-9));
        assert!(d2 <= b2 * (1.0 + 1e-9));
        // ...and halving tau at least halves the deviation. The measured
        // factor is ~4: the mollifying window is symmetric, so the linear
        // Taylor term cancels and convergence is second order.
        let shrink = d1 / d2;
        assert!(
            (1.8..=4.4).contains(&shrink),
            "deviation shrink factor {shrink} (d1 = {d1}, d2 = {d2})"
        );
    }

    #[test]
    fn mollified_bridge_exact_at_origin() {
        let curve = GraphCurve::parabola();
        let ps = PointSystem::lattice(3);
        let cfg = cfg_small();
        let one = TestFunction::callable(|_| Complex64::new(1.0, 0.0));
        let tau = 1.0 / 32.0;
        let mut total = Complex64::new(0.0, 0.0);
        for (t, a) in ps.points.iter().zip(ps.coeffs.iter()) {
            let window = Interval::closed(t - tau, t + tau);
            total +=
                a * extension_eval(&curve, window, &one, (0.0, 0.0), &cfg).unwrap() / (2.0 * tau);
        }
        let exact = expsum_eval(&curve, &ps.points, &ps.coeffs, (0.0, 0.0)).unwrap();
        assert!((total - exact).norm() < 1e-12);
    }

    #[test]
    fn mollified_bridge_single_point_closed_form() {
        let curve = GraphCurve::parabola();
        let ps = PointSystem::lattice(1).with_coeffs(vec![Complex64::new(1.0, 1.0)]);
        let cfg = cfg_small();
        let tau = 0.05;
        let x = (2.0, 3.0);
        let one = TestFunction::callable(|_| Complex64::new(1.0, 0.0));
        let api = extension_eval(
            &curve,
            Interval::closed(ps.points[0] - tau, ps.points[0] + tau),
            &one,
            x,
            &cfg,
        )
        .unwrap()
            / (2.0 * tau);
        // Independent oracle: dense midpoint rule for the average.
        let m = 20_000;
        let mut avg = Complex64::new(0.0, 0.0);
        for k in 0..m {
            let t = ps.points[0] - tau + 2.0 * tau * (k as f64 + 0.5) / m as f64;
            avg += e2pi(x.0 * t + x.1 * t * t);
        }
        avg /= m as f64;
        assert!((api - avg).norm() < 1e-9, "api {api} vs oracle {avg}");
    }

    #[test]
    fn mollified_bridge_rejects_large_tau() {
        let curve = GraphCurve::parabola();
        let ps = PointSystem::lattice(4);
        assert!(matches!(
            mollified_bridge(&curve, &ps, 0.2, &[(0.0, 0.0)], &cfg_small()),
            Err(Error::Domain(_))
        ));
    }
}
