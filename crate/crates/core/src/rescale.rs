//! Curvature normalization, osculating parabolas, and the iteration
//! schedule.
//!
//! On a dyadic block [a, 2a] the curve is renormalized so its minimum
//! curvature is order one: the general form divides the height by half the
//! minimum second derivative, the model form `(t, t^(1+nu))` rescales by
//! `a^(1-nu)`. Against the normalized curve, the second-order Taylor
//! parabola at a base point stays within delta up to `delta_t_max`, which
//! controls how long standard parabola decoupling applies before the
//! argument re-scales.

use crate::curve::GraphCurve;
use crate::error::{Error, Result};
use crate::oscillatory::PlaneCurve;
use crate::partition::Interval;

/// Which height normalization a [`NormalizedCurve`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizationKind {
    /// height = 2 phi / phi''_a; the spatial frame shrinks by phi''_a / 2.
    General,
    /// height = a^(1-nu) t^(1+nu); the spatial frame shrinks by a^(nu-1).
    Model,
}

/// A curve renormalized on one dyadic block [a, 2a].
#[derive(Debug, Clone)]
pub struct NormalizedCurve {
    pub parent: GraphCurve,
    pub a: f64,
    /// min of phi'' over [a, 2a].
    pub phi2_min: f64,
    pub kind: NormalizationKind,
}

impl NormalizedCurve {
    pub fn block(&self) -> Interval {
        Interval::closed(self.a, 2.0 * self.a)
    }

    /// Height of the normalized curve.
    pub fn height(&self, t: f64) -> f64 {
        match self.kind {
            NormalizationKind::General => 2.0 * self.parent.phi(t) / self.phi2_min,
            NormalizationKind::Model => {
                let nu = self.parent.model_exponent().expect("model normalization");
                self.a.powf(1.0 - nu) * t.powf(1.0 + nu)
            }
        }
    }

    pub fn height_d1(&self, t: f64) -> Result<f64> {
        match self.kind {
            NormalizationKind::General => Ok(2.0 * self.parent.d1(t)? / self.phi2_min),
            NormalizationKind::Model => {
                let nu = self.parent.model_exponent().expect("model normalization");
                Ok(self.a.powf(1.0 - nu) * (1.0 + nu) * t.powf(nu))
            }
        }
    }

    pub fn height_d2(&self, t: f64) -> Result<f64> {
        match self.kind {
            NormalizationKind::General => {
                Ok(2.0 * self.parent.second_derivative(t)? / self.phi2_min)
            }
            NormalizationKind::Model => {
                let nu = self.parent.model_exponent().expect("model normalization");
                Ok(self.a.powf(1.0 - nu) * (1.0 + nu) * nu * t.powf(nu - 1.0))
            }
        }
    }

    /// Factor mapping the parent's second spatial coordinate into the
    /// normalized frame: `E_D g(x1, x2) = E_{D, gamma_a} g(x1, s * x2)`.
    pub fn x2_scale(&self) -> f64 {
        match self.kind {
            NormalizationKind::General => 0.5 * self.phi2_min,
            NormalizationKind::Model => {
                let nu = self.parent.model_exponent().expect("model normalization");
                self.a.powf(nu - 1.0)
            }
        }
    }
}

impl PlaneCurve for NormalizedCurve {
    fn gamma1(&self, t: f64) -> f64 {
        t
    }

    fn gamma2(&self, t: f64) -> f64 {
        self.height(t)
    }

    fn derivative_bounds(&self, iv: Interval) -> Result<(f64, f64)> {
        let n = 64;
        let mut m: f64 = 0.0;
        for i in 0..=n {
            let t = iv.lo + iv.length() * i as f64 / n as f64;
            m = m.max(self.height_d1(t)?.abs());
        }
        Ok((1.0, m * 1.05))
    }

    fn frequency_extents(&self, iv: Interval) -> (f64, f64) {
        let n = 128;
        let mut m: f64 = 0.0;
        for i in 0..=n {
            let t = iv.lo + iv.length() * i as f64 / n as f64;
            m = m.max(self.height(t).abs());
        }
        (iv.lo.abs().max(iv.hi.abs()), m)
    }
}

/// min of phi'' over [a, 2a]: dense grid of 512 cells plus golden-section
/// refinement around the grid argmin. Within 0.1% for C^2 curves.
pub fn min_second_derivative(curve: &GraphCurve, a: f64) -> Result<f64> {
    let (lo, hi) = curve.domain();
    if !(a > lo && 2.0 * a <= hi * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "[a, 2a] = [{a}, {}] must lie inside the domain ({lo}, {hi}]",
            2.0 * a
        )));
    }
    let b = (2.0 * a).min(hi);
    let n = 512;
    let mut best = f64::INFINITY;
    let mut best_i = 0usize;
    for i in 0..=n {
        let t = a + (b - a) * i as f64 / n as f64;
        let v = curve.second_derivative(t)?;
        if v < best {
            best = v;
            best_i = i;
        }
    }
    // Golden-section refinement on the bracketing cells.
    let mut x1 = a + (b - a) * best_i.saturating_sub(1) as f64 / n as f64;
    let mut x2 = a + (b - a) * (best_i + 1).min(n) as f64 / n as f64;
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut m1 = x2 - (x2 - x1) * INV_PHI;
    let mut m2 = x1 + (x2 - x1) * INV_PHI;
    let mut f1 = curve.second_derivative(m1)?;
    let mut f2 = curve.second_derivative(m2)?;
    for _ in 0..60 {
        if f1 < f2 {
            x2 = m2;
            m2 = m1;
            f2 = f1;
            m1 = x2 - (x2 - x1) * INV_PHI;
            f1 = curve.second_derivative(m1)?;
        } else {
            x1 = m1;
            m1 = m2;
            f1 = f2;
            m2 = x1 + (x2 - x1) * INV_PHI;
            f2 = curve.second_derivative(m2)?;
        }
    }
    let refined = f1.min(f2);
    let min = best.min(refined);
    if min.is_nan() || min <= 0.0 {
        return Err(Error::HypothesisViolation { a, b, min });
    }
    Ok(min)
}

/// Normalize the curve on [a, 2a]. Model curves take the model scaling,
/// everything else the general one.
pub fn normalize(curve: &GraphCurve, a: f64) -> Result<NormalizedCurve> {
    let kind = if curve.model_exponent().is_some() {
        NormalizationKind::Model
    } else {
        NormalizationKind::General
    };
    normalize_with(curve, a, kind)
}

pub fn normalize_with(
    curve: &GraphCurve,
    a: f64,
    kind: NormalizationKind,
) -> Result<NormalizedCurve> {
    if kind == NormalizationKind::Model && curve.model_exponent().is_none() {
        return Err(Error::Domain(
            "model normalization requires a model curve".into(),
        ));
    }
    let phi2_min = min_second_derivative(curve, a)?;
    let nc = NormalizedCurve {
        parent: curve.clone(),
        a,
        phi2_min,
        kind,
    };
    if kind == NormalizationKind::General {
        // By construction the normalized curvature has minimum 2 on the
        // block, up to the grid-min slack.
        debug_assert!({
            let mut m = f64::INFINITY;
            for i in 0..=256 {
                let t = a + a * i as f64 / 256.0;
                m = m.min(nc.height_d2(t).unwrap_or(f64::INFINITY));
            }
            (m - 2.0).abs() <= 0.02
        });
    }
    Ok(nc)
}

/// Second-order Taylor model of the normalized height at t0:
/// `rho(t) = c0 + c1 (t - t0) + c2 (t - t0)^2`.
#[derive(Debug, Clone, Copy)]
pub struct OsculatingParabola {
    pub t0: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl OsculatingParabola {
    pub fn eval(&self, t: f64) -> f64 {
        let d = t - self.t0;
        self.c0 + self.c1 * d + self.c2 * d * d
    }
}

pub fn osculating_parabola(nc: &NormalizedCurve, t0: f64) -> Result<OsculatingParabola> {
    let c0 = nc.height(t0);
    let c1 = nc.height_d1(t0)?;
    let c2 = 0.5 * nc.height_d2(t0)?;
    if nc.kind == NormalizationKind::General {
        debug_assert!(
            c2 >= 1.0 - 1e-9,
            "normalized curvature must be >= 1, got {c2}"
        );
    }
    Ok(OsculatingParabola { t0, c0, c1, c2 })
}

/// Vertical distance between the normalized curve and its osculating
/// parabola at `t0 + dt`.
pub fn taylor_gap(nc: &NormalizedCurve, t0: f64, dt: f64) -> Result<f64> {
    let rho = osculating_parabola(nc, t0)?;
    Ok((nc.height(t0 + dt) - rho.eval(t0 + dt)).abs())
}

/// Largest s <= 2a - t0 such that the Taylor gap stays below delta for all
/// sampled dt < s. A forward scan with 1024 samples locates the first
/// crossing, which bisection then refines to 1e-8 relative.
pub fn delta_t_max(nc: &NormalizedCurve, t0: f64, delta: f64) -> Result<f64> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::Domain(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let rho = osculating_parabola(nc, t0)?;
    let remaining = 2.0 * nc.a - t0;
    if remaining <= 0.0 {
        return Ok(0.0);
    }
    let gap = |dt: f64| -> Result<f64> { Ok((nc.height(t0 + dt) - rho.eval(t0 + dt)).abs()) };
    let n = 1024;
    let mut prev = 0.0f64;
    let mut crossing: Option<(f64, f64)> = None;
    for i in 1..=n {
        let dt = remaining * i as f64 / n as f64;
        if gap(dt)? >= delta {
            crossing = Some((prev, dt));
            break;
        }
        prev = dt;
    }
    let (mut lo, mut hi) = match crossing {
        None => return Ok(remaining),
        Some(pair) => pair,
    };
    for _ in 0..200 {
        if (hi - lo) <= 1e-8 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if gap(mid)? < delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of one lower-bound check on delta_t_max.
#[derive(Debug, Clone, Copy)]
pub struct TmaxBound {
    pub ok: bool,
    pub tmax: f64,
    /// delta^(1/2 - eps*beta/4), the shape of the proven lower bound.
    pub bound: f64,
    /// tmax / bound: the empirical constant in front of the bound.
    pub margin: f64,
    /// Set when a < delta^(1/2 - eps): the block starts inside the head
    /// interval, outside the standing assumption of the block analysis.
    pub head_region: bool,
}

/// Check `delta_t_max >= c * delta^(1/2 - eps*beta/4)` with the empirical
/// constant c reported as `margin`. Requires a >= delta^(1/2); blocks that
/// start inside the head interval are flagged, not rejected.
pub fn verify_tmax_bound(
    nc: &NormalizedCurve,
    t0: f64,
    delta: f64,
    epsilon: f64,
    beta: f64,
) -> Result<TmaxBound> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Domain(format!(
            "epsilon must be in (0, 1/2), got {epsilon}"
        )));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain(format!("beta must be in (0, 1], got {beta}")));
    }
    if nc.a < delta.sqrt() {
        return Err(Error::Domain(format!(
            "block start a = {} is below delta^(1/2) = {}",
            nc.a,
            delta.sqrt()
        )));
    }
    let head_region = nc.a < delta.powf(0.5 - epsilon) * (1.0 - 1e-12);
    let tmax = delta_t_max(nc, t0, delta)?;
    let bound = delta.powf(0.5 - epsilon * beta / 4.0);
    let margin = tmax / bound;
    Ok(TmaxBound {
        ok: margin > 0.0,
        tmax,
        bound,
        margin,
        head_region,
    })
}

/// Smallest k with `delta^(q^k) >= min(a^2, 1/e)` where `q = 1 - eps*beta/2`.
/// The 1/e cap reflects that iteration stops once the scale is order one.
/// The count respects the log-log bound `k <= log log(1/delta) / (-log q) + 1`.
pub fn iteration_schedule(delta: f64, epsilon: f64, beta: f64, a: f64) -> Result<u32> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!(
            "delta must be in (0,1), got {delta}"
        )));
    }
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::Domain(format!("a must be in (0,1], got {a}")));
    }
    let q = 1.0 - 0.5 * epsilon * beta;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!(
            "eps*beta/2 must be in (0,1), got {}",
            0.5 * epsilon * beta
        )));
    }
    let target = (a * a).min((-1.0f64).exp());
    if delta >= target {
        return Ok(0);
    }
    // delta^(q^k) >= target  <=>  q^k <= ln(target)/ln(delta).
    let ratio = target.ln() / delta.ln();
    debug_assert!(ratio > 0.0 && ratio < 1.0);
    let mut k = (ratio.ln() / q.ln()).ceil().max(0.0) as u32;
    // Guard the ceiling against rounding on either side.
    while q.powi(k as i32) > ratio && k < u32::MAX {
        k += 1;
    }
    while k > 0 && q.powi(k as i32 - 1) <= ratio {
        k -= 1;
    }
    let loglog_bound = (1.0 / delta).ln().ln() / (-q.ln()) + 1.0;
    debug_assert!(
        (k as f64) <= loglog_bound + 1e-9,
        "k = {k} exceeds log-log bound {loglog_bound}"
    );
    Ok(k)
}

/// One row of the delta_t_max lower-bound scan.
#[derive(Debug, Clone)]
pub struct TmaxScanRow {
    pub nu: Option<f64>,
    pub a: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub tmax: f64,
    pub bound: f64,
    pub margin: f64,
}

/// Scan `a = delta^a_exponent`, `t0 = a` over a delta grid.
pub fn tmax_scan(
    curve: &GraphCurve,
    deltas: &[f64],
    epsilon: f64,
    beta: f64,
    a_exponent: f64,
) -> Result<Vec<TmaxScanRow>> {
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let a = delta.powf(a_exponent);
        let nc = normalize(curve, a)?;
        let chk = verify_tmax_bound(&nc, a, delta, epsilon, beta)?;
        rows.push(TmaxScanRow {
            nu: curve.model_exponent(),
            a,
            delta,
            epsilon,
            beta,
            tmax: chk.tmax,
            bound: chk.bound,
            margin: chk.margin,
        });
    }
    Ok(rows)
}
