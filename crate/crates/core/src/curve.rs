//! Planar curve representations and curvature-degeneracy estimators.
//!
//! Graph curves `(t, phi(t))` carry optional analytic derivatives; when
//! absent, central finite differences are used with per-order step sizes.
//! The vanishing-order estimators fit a log-log slope of `|phi''|` (or
//! `|phi'''|`, or a Hölder seminorm of `phi''`) against the distance to a
//! degenerate point.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::partition::Interval;
use std::fmt;
use std::sync::Arc;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Finite-difference step for first derivatives.
pub const H_FD1: f64 = 9.5367431640625e-7; // 2^-20
/// Finite-difference step for second derivatives. Larger than H_FD1 because
/// the second difference divides rounding error by h^2; 2^-11 keeps that
/// term near 4e-10 while truncation stays near 1e-8.
pub const H_FD2: f64 = 4.8828125e-4; // 2^-11
/// Finite-difference step for third derivatives of the raw height map.
pub const H_FD3: f64 = 7.8125e-3; // 2^-7

/// Values below this are treated as machine-noise floor in order fits.
pub const ORDER_FIT_NOISE_FLOOR: f64 = 1e-9;
/// Fit residual above which the supremal and infimal orders are suspected
/// to differ (oscillatory vanishing).
pub const ORDER_FIT_RESIDUAL_THRESHOLD: f64 = 0.1;
/// Default dyadic scale range for order fits: t = z +/- 2^-j.
pub const ORDER_FIT_J_MIN: u32 = 4;
pub const ORDER_FIT_J_MAX: u32 = 18;
/// Sample count for Hölder seminorm estimation (all pairs are examined).
pub const HOLDER_GRID: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => write!(f, "left"),
            Side::Right => write!(f, "right"),
        }
    }
}

/// A curve `(t, phi(t))` on a domain `(lo, hi]` with a finite singular set.
#[derive(Clone)]
pub struct GraphCurve {
    id: String,
    phi: RealFn,
    d1: Option<RealFn>,
    d2: Option<RealFn>,
    d3: Option<RealFn>,
    singular_set: Vec<f64>,
    model_exponent: Option<f64>,
    domain: (f64, f64),
}

impl fmt::Debug for GraphCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphCurve")
            .field("id", &self.id)
            .field("model_exponent", &self.model_exponent)
            .field("singular_set", &self.singular_set)
            .field("domain", &self.domain)
            .finish()
    }
}

impl GraphCurve {
    /// The model curve `(t, t^(1+nu))` with exact derivatives.
    pub fn model(nu: f64) -> GraphCurve {
        assert!(nu > 0.0, "model exponent nu must be positive");
        let p = 1.0 + nu;
        let singular_set = if (nu - 1.0).abs() < 1e-15 {
            vec![]
        } else {
            vec![0.0]
        };
        GraphCurve {
            id: format!("model-{nu}"),
            phi: Arc::new(move |t: f64| t.powf(p)),
            d1: Some(Arc::new(move |t: f64| p * t.powf(p - 1.0))),
            d2: Some(Arc::new(move |t: f64| p * nu * t.powf(nu - 1.0))),
            d3: Some(Arc::new(move |t: f64| {
                p * nu * (nu - 1.0) * t.powf(nu - 2.0)
            })),
            singular_set,
            model_exponent: Some(nu),
            domain: (0.0, 1.0),
        }
    }

    /// The standard parabola `(t, t^2)`.
    pub fn parabola() -> GraphCurve {
        GraphCurve::model(1.0)
    }

    /// `(t, t^2 + 0.1 sin(pi t))`: strictly convex but with non-constant
    /// curvature, used as the non-model test curve.
    pub fn sin_perturbed() -> GraphCurve {
        use std::f64::consts::PI;
        GraphCurve {
            id: "sin-perturbed".to_string(),
            phi: Arc::new(|t: f64| t * t + 0.1 * (PI * t).sin()),
            d1: Some(Arc::new(|t: f64| 2.0 * t + 0.1 * PI * (PI * t).cos())),
            d2: Some(Arc::new(|t: f64| 2.0 - 0.1 * PI * PI * (PI * t).sin())),
            d3: Some(Arc::new(|t: f64| -0.1 * PI * PI * PI * (PI * t).cos())),
            singular_set: vec![],
            model_exponent: None,
            domain: (0.0, 1.0),
        }
    }

    /// Build from closures. Derivatives not supplied fall back to finite
    /// differences.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        id: &str,
        phi: RealFn,
        d1: Option<RealFn>,
        d2: Option<RealFn>,
        d3: Option<RealFn>,
        mut singular_set: Vec<f64>,
        domain: (f64, f64),
    ) -> GraphCurve {
        singular_set.sort_by(|a, b| a.partial_cmp(b).unwrap());
        GraphCurve {
            id: id.to_string(),
            phi,
            d1,
            d2,
            d3,
            singular_set,
            model_exponent: None,
            domain,
        }
    }

    /// Parse `phi` from the expression grammar; derivatives use finite
    /// differences.
    pub fn from_expr(id: &str, src: &str, singular_set: Vec<f64>) -> Result<GraphCurve> {
        let e = Expr::parse(src)?;
        Ok(GraphCurve::from_parts(
            id,
            Arc::new(move |t: f64| e.eval(t)),
            None,
            None,
            None,
            singular_set,
            (0.0, 1.0),
        ))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn model_exponent(&self) -> Option<f64> {
        self.model_exponent
    }

    pub fn singular_set(&self) -> &[f64] {
        &self.singular_set
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn height_fn(&self) -> RealFn {
        self.phi.clone()
    }

    pub fn phi(&self, t: f64) -> f64 {
        (self.phi)(t)
    }

    /// Step for a finite-difference stencil of half-width `reach*h` at `t`,
    /// shrunk so the stencil stays inside the domain.
    fn fd_step(&self, t: f64, base: f64, reach: f64) -> f64 {
        let room = (t - self.domain.0).min(self.domain.1 - t).max(0.0);
        if room < reach * base {
            (room / reach).max(f64::MIN_POSITIVE)
        } else {
            base
        }
    }

    /// Guard for finite-difference evaluation: error inside the exclusion
    /// band of radius `4*base` around any singular point.
    fn fd_band_check(&self, t: f64, base: f64) -> Result<()> {
        for &z in &self.singular_set {
            if (t - z).abs() < 4.0 * base {
                return Err(Error::Singularity { t, z });
            }
        }
        Ok(())
    }

    pub fn d1(&self, t: f64) -> Result<f64> {
        if let Some(d) = &self.d1 {
            return Ok(d(t));
        }
        self.fd_band_check(t, H_FD1)?;
        let h = self.fd_step(t, H_FD1, 1.0);
        Ok(((self.phi)(t + h) - (self.phi)(t - h)) / (2.0 * h))
    }

    /// phi''(t): exact on the analytic path, central second differences
    /// otherwise.
    pub fn second_derivative(&self, t: f64) -> Result<f64> {
        if let Some(d) = &self.d2 {
            return Ok(d(t));
        }
        self.fd_band_check(t, H_FD2)?;
        let h = self.fd_step(t, H_FD2, 1.0);
        let f = &self.phi;
        Ok((f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h))
    }

    /// phi'''(t): analytic if supplied, else a first difference of an
    /// analytic phi'' when available, else a five-point stencil on phi.
    pub fn third_derivative(&self, t: f64) -> Result<f64> {
        if let Some(d) = &self.d3 {
            return Ok(d(t));
        }
        if let Some(d2) = &self.d2 {
            self.fd_band_check(t, H_FD2)?;
            let h = self.fd_step(t, H_FD2, 1.0);
            return Ok((d2(t + h) - d2(t - h)) / (2.0 * h));
        }
        self.fd_band_check(t, H_FD3)?;
        let h = self.fd_step(t, H_FD3, 2.0);
        let f = &self.phi;
        Ok((f(t + 2.0 * h) - 2.0 * f(t + h) + 2.0 * f(t - h) - f(t - 2.0 * h)) / (2.0 * h * h * h))
    }

    /// Max of |phi'| over an interval, from a 65-point sample with a 5%
    /// safety factor. Used by the oscillation rule for quadrature sizing.
    pub fn max_abs_d1_on(&self, iv: Interval) -> Result<f64> {
        let n = 64;
        let mut m: f64 = 0.0;
        for i in 0..=n {
            let t = iv.lo + iv.length() * i as f64 / n as f64;
            let t = t.clamp(self.domain.0 + 1e-300, self.domain.1);
            m = m.max(self.d1(t)?.abs());
        }
        Ok(m * 1.05)
    }

    /// Max of |phi| over an interval (frequency extent in the second axis).
    pub fn max_abs_phi_on(&self, iv: Interval) -> f64 {
        let n = 128;
        let mut m: f64 = 0.0;
        for i in 0..=n {
            let t = iv.lo + iv.length() * i as f64 / n as f64;
            m = m.max((self.phi)(t).abs());
        }
        m
    }

    /// Maximal order of vanishing `r = max{r2 + 2, 2}` over the singular
    /// set, exact for model curves, fitted otherwise.
    pub fn decoupling_exponent_r(&self) -> Result<f64> {
        if let Some(nu) = self.model_exponent {
            return Ok((1.0 + nu).max(2.0));
        }
        let mut r: f64 = 2.0;
        for &z in &self.singular_set {
            for side in [Side::Left, Side::Right] {
                if side == Side::Left && z <= self.domain.0 {
                    continue;
                }
                if side == Side::Right && z >= self.domain.1 {
                    continue;
                }
                let est =
                    estimate_vanishing_order(self, z, side, 2, ORDER_FIT_J_MIN, ORDER_FIT_J_MAX)?;
                r = r.max(est.order + 2.0);
            }
        }
        Ok(r)
    }
}

/// A regular parametric curve `(phi1(t), phi2(t))`.
#[derive(Clone)]
pub struct ParamCurve {
    id: String,
    phi1: RealFn,
    phi2: RealFn,
    d1_1: Option<RealFn>,
    d1_2: Option<RealFn>,
    d2_1: Option<RealFn>,
    d2_2: Option<RealFn>,
    domain: (f64, f64),
}

impl fmt::Debug for ParamCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamCurve")
            .field("id", &self.id)
            .field("domain", &self.domain)
            .finish()
    }
}

impl ParamCurve {
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        id: &str,
        phi1: RealFn,
        phi2: RealFn,
        d1_1: Option<RealFn>,
        d1_2: Option<RealFn>,
        d2_1: Option<RealFn>,
        d2_2: Option<RealFn>,
        domain: (f64, f64),
    ) -> ParamCurve {
        ParamCurve {
            id: id.to_string(),
            phi1,
            phi2,
            d1_1,
            d1_2,
            d2_1,
            d2_2,
            domain,
        }
    }

    pub fn from_exprs(id: &str, src1: &str, src2: &str) -> Result<ParamCurve> {
        let e1 = Expr::parse(src1)?;
        let e2 = Expr::parse(src2)?;
        Ok(ParamCurve::from_parts(
            id,
            Arc::new(move |t| e1.eval(t)),
            Arc::new(move |t| e2.eval(t)),
            None,
            None,
            None,
            None,
            (0.0, 1.0),
        ))
    }

    /// Lift a graph curve to parametric form `(t, phi(t))`.
    pub fn lift(graph: &GraphCurve) -> ParamCurve {
        let g = graph.clone();
        let g2 = graph.clone();
        ParamCurve {
            id: format!("{}-lifted", graph.id()),
            phi1: Arc::new(|t| t),
            phi2: graph.height_fn(),
            d1_1: Some(Arc::new(|_| 1.0)),
            d1_2: Some(Arc::new(move |t| g.d1(t).expect("lifted curve d1"))),
            d2_1: Some(Arc::new(|_| 0.0)),
            d2_2: Some(Arc::new(move |t| {
                g2.second_derivative(t).expect("lifted curve d2")
            })),
            domain: graph.domain(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn phi1(&self, t: f64) -> f64 {
        (self.phi1)(t)
    }

    pub fn phi2(&self, t: f64) -> f64 {
        (self.phi2)(t)
    }

    fn fd_step(&self, t: f64, base: f64) -> f64 {
        let room = (t - self.domain.0).min(self.domain.1 - t).max(0.0);
        if room < base {
            (room / 1.0).max(f64::MIN_POSITIVE)
        } else {
            base
        }
    }

    pub fn d1_1(&self, t: f64) -> f64 {
        match &self.d1_1 {
            Some(d) => d(t),
            None => {
                let h = self.fd_step(t, H_FD1);
                ((self.phi1)(t + h) - (self.phi1)(t - h)) / (2.0 * h)
            }
        }
    }

    pub fn d1_2(&self, t: f64) -> f64 {
        match &self.d1_2 {
            Some(d) => d(t),
            None => {
                let h = self.fd_step(t, H_FD1);
                ((self.phi2)(t + h) - (self.phi2)(t - h)) / (2.0 * h)
            }
        }
    }

    pub fn d2_1(&self, t: f64) -> f64 {
        match &self.d2_1 {
            Some(d) => d(t),
            None => {
                let h = self.fd_step(t, H_FD2);
                let f = &self.phi1;
                (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h)
            }
        }
    }

    pub fn d2_2(&self, t: f64) -> f64 {
        match &self.d2_2 {
            Some(d) => d(t),
            None => {
                let h = self.fd_step(t, H_FD2);
                let f = &self.phi2;
                (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h)
            }
        }
    }

    /// Min of |(phi1', phi2')| over a sample grid; positive for regular
    /// curves.
    pub fn regularity_witness(&self, iv: Interval, samples: usize) -> f64 {
        let n = samples.max(2);
        let mut m = f64::INFINITY;
        for i in 0..=n {
            let t = iv.lo + iv.length() * i as f64 / n as f64;
            m = m.min(self.d1_1(t).hypot(self.d1_2(t)));
        }
        m
    }
}

/// Wronskian of `(phi1', phi2')`: `phi1' phi2'' - phi2' phi1''`, the
/// curvature surrogate for parametric curves.
pub fn wronskian(curve: &ParamCurve, t: f64) -> f64 {
    curve.d1_1(t) * curve.d2_2(t) - curve.d1_2(t) * curve.d2_1(t)
}

/// Result of a log-log order fit at a degenerate point.
#[derive(Debug, Clone)]
pub struct VanishingOrderEstimate {
    /// Fitted exponent: negative means blowup, positive means vanishing.
    pub order: f64,
    /// 2 for phi'', 3 for phi'''.
    pub derivative_order: u8,
    pub side: Side,
    pub base_point: f64,
    /// RMS residual of the least-squares line.
    pub fit_residual: f64,
    /// Range of t actually used by the fit.
    pub t_range: (f64, f64),
    /// Set when the residual exceeds the threshold: the supremal and
    /// infimal orders are suspected to differ (oscillatory vanishing).
    pub suspect_mismatch: bool,
}

fn least_squares_line(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let rms = (points
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// Fit the order of vanishing of `phi''` (or `phi'''`) at `z` from one side:
/// the least-squares slope of `log |phi^(k)(z +/- 2^-j)|` against
/// `log 2^-j` for `j = j_min..=j_max`. Scales where the value is below the
/// machine-noise floor, or where the sample leaves the domain, are dropped.
pub fn estimate_vanishing_order(
    curve: &GraphCurve,
    z: f64,
    side: Side,
    derivative_order: u8,
    j_min: u32,
    j_max: u32,
) -> Result<VanishingOrderEstimate> {
    assert!(derivative_order == 2 || derivative_order == 3);
    let (lo, hi) = curve.domain();
    let mut pts = Vec::new();
    let mut t_used: (f64, f64) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in j_min..=j_max {
        let s = 2f64.powi(-(j as i32));
        let t = match side {
            Side::Right => z + s,
            Side::Left => z - s,
        };
        if t <= lo || t > hi {
            continue;
        }
        let val = match derivative_order {
            2 => curve.second_derivative(t),
            _ => curve.third_derivative(t),
        };
        let val = match val {
            Ok(v) => v,
            Err(Error::Singularity { .. }) => continue,
            Err(e) => return Err(e),
        };
        if !val.is_finite() || val.abs() < ORDER_FIT_NOISE_FLOOR {
            continue;
        }
        pts.push((s.ln(), val.abs().ln()));
        t_used.0 = t_used.0.min(t);
        t_used.1 = t_used.1.max(t);
    }
    if pts.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: pts.len(),
        });
    }
    let (slope, _, rms) = least_squares_line(&pts);
    Ok(VanishingOrderEstimate {
        order: slope,
        derivative_order,
        side,
        base_point: z,
        fit_residual: rms,
        t_range: t_used,
        suspect_mismatch: rms > ORDER_FIT_RESIDUAL_THRESHOLD,
    })
}

/// Hölder seminorm `|phi''|_{C^{0,alpha}}` over an interval, as the max of
/// `|phi''(x) - phi''(y)| / |x-y|^alpha` over all pairs of a sample grid.
pub fn holder_seminorm(curve: &GraphCurve, alpha: f64, iv: Interval) -> Result<f64> {
    holder_seminorm_with_grid(curve, alpha, iv, HOLDER_GRID)
}

pub fn holder_seminorm_with_grid(
    curve: &GraphCurve,
    alpha: f64,
    iv: Interval,
    grid: usize,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!(
            "alpha must be in (0,1], got {alpha}"
        )));
    }
    let n = grid.max(64);
    let mut ts = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n);
    for i in 0..n {
        let t = iv.lo + iv.length() * i as f64 / (n - 1) as f64;
        ts.push(t);
        vals.push(curve.second_derivative(t)?);
    }
    let mut sup: f64 = 0.0;
    for i in 0..n {
        for k in (i + 1)..n {
            let q = (vals[i] - vals[k]).abs() / (ts[k] - ts[i]).powf(alpha);
            sup = sup.max(q);
        }
    }
    Ok(sup)
}

/// Hölder-order fit at 0: the slope of `log |phi''|_{C^{0,alpha}([t, 2t])}`
/// against `log t` over dyadic scales `t = 2^-j`.
#[derive(Debug, Clone)]
pub struct HolderOrderEstimate {
    pub order: f64,
    pub alpha: f64,
    pub fit_residual: f64,
    pub t_range: (f64, f64),
}

pub fn estimate_holder_order(
    curve: &GraphCurve,
    alpha: f64,
    j_min: u32,
    j_max: u32,
) -> Result<HolderOrderEstimate> {
    let (lo, hi) = curve.domain();
    let mut pts = Vec::new();
    let mut t_used: (f64, f64) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in j_min..=j_max {
        let t = 2f64.powi(-(j as i32));
        if t <= lo || 2.0 * t > hi {
            continue;
        }
        let sn = match holder_seminorm(curve, alpha, Interval::new(t, 2.0 * t)) {
            Ok(v) => v,
            Err(Error::Singularity { .. }) => continue,
            Err(e) => return Err(e),
        };
        if !sn.is_finite() || sn < ORDER_FIT_NOISE_FLOOR {
            continue;
        }
        pts.push((t.ln(), sn.ln()));
        t_used.0 = t_used.0.min(t);
        t_used.1 = t_used.1.max(2.0 * t);
    }
    if pts.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: pts.len(),
        });
    }
    let (slope, _, rms) = least_squares_line(&pts);
    Ok(HolderOrderEstimate {
        order: slope,
        alpha,
        fit_residual: rms,
        t_range: t_used,
    })
}

/// Reduce a parametric curve to graph form over an interval where
/// `phi1' != 0`: `s = phi1(t)`, `psi(s) = phi2(phi1^{-1}(s))`. The second
/// derivative is `Wronskian(t) / phi1'(t)^3` by the chain rule.
pub fn reparametrize_to_graph(curve: &ParamCurve, iv: Interval) -> Result<GraphCurve> {
    // phi1' must be bounded away from zero with one sign.
    let n = 128;
    let mut sign = 0.0f64;
    for i in 0..=n {
        let t = iv.lo + iv.length() * i as f64 / n as f64;
        let d = curve.d1_1(t);
        if d == 0.0 {
            return Err(Error::NotAGraph {
                lo: iv.lo,
                hi: iv.hi,
            });
        }
        if sign == 0.0 {
            sign = d.signum();
        } else if d.signum() != sign {
            return Err(Error::NotAGraph {
                lo: iv.lo,
                hi: iv.hi,
            });
        }
    }
    let (s_at_lo, s_at_hi) = (curve.phi1(iv.lo), curve.phi1(iv.hi));
    let (s_lo, s_hi) = if s_at_lo < s_at_hi {
        (s_at_lo, s_at_hi)
    } else {
        (s_at_hi, s_at_lo)
    };

    let inv = {
        let c = curve.clone();
        let (tlo, thi) = (iv.lo, iv.hi);
        let increasing = s_at_lo < s_at_hi;
        move |s: f64| -> f64 {
            // Bisection on the monotone phi1, then one Newton polish.
            let (mut a, mut b) = (tlo, thi);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let v = c.phi1(m);
                let below = if increasing { v < s } else { v > s };
                if below {
                    a = m;
                } else {
                    b = m;
                }
            }
            let mut t = 0.5 * (a + b);
            let d = c.d1_1(t);
            if d != 0.0 {
                t -= (c.phi1(t) - s) / d;
            }
            t.clamp(tlo, thi)
        }
    };

    let c_phi = curve.clone();
    let inv_phi = inv.clone();
    let c_d1 = curve.clone();
    let inv_d1 = inv.clone();
    let c_d2 = curve.clone();
    let inv_d2 = inv.clone();

    let graph = GraphCurve::from_parts(
        &format!("{}-as-graph", curve.id()),
        Arc::new(move |s: f64| c_phi.phi2(inv_phi(s))),
        Some(Arc::new(move |s: f64| {
            let t = inv_d1(s);
            c_d1.d1_2(t) / c_d1.d1_1(t)
        })),
        Some(Arc::new(move |s: f64| {
            let t = inv_d2(s);
            let w = wronskian(&c_d2, t);
            w / c_d2.d1_1(t).powi(3)
        })),
        None,
        vec![],
        (s_lo, s_hi),
    );

    // Verify psi(phi1(t)) = phi2(t) on a grid.
    let mut worst: f64 = 0.0;
    for i in 0..=64 {
        let t = iv.lo + iv.length() * i as f64 / 64.0;
        let err = (graph.phi(curve.phi1(t)) - curve.phi2(t)).abs();
        worst = worst.max(err);
    }
    if worst > 1e-10 {
        return Err(Error::Domain(format!(
            "reparametrization verification failed: max |psi(phi1(t)) - phi2(t)| = {worst:.3e}"
        )));
    }
    Ok(graph)
}

/// Summary of degeneracy analysis for one curve: per-point order fits, the
/// Hölder-order fits used by the Taylor-remainder hypothesis, and the
/// resulting spatial exponent r.
#[derive(Debug, Clone)]
pub struct CurveInfo {
    pub id: String,
    pub nu: Option<f64>,
    pub order_estimates: Vec<VanishingOrderEstimate>,
    pub holder_estimates: Vec<HolderOrderEstimate>,
    pub r: f64,
    /// order estimates all in (-1, inf) with acceptable residuals.
    pub orders_clean: bool,
}

/// Analyze a curve: fit r2 at every singular point (both sides where
/// interior), fit the Hölder orders at 0 for beta in {alpha, alpha/2,
/// alpha/4}, and report r = max{r2 + 2, 2}. The Hölder fits probe the
/// Taylor-remainder hypothesis at finitely many beta; they do not certify
/// the beta -> 0 limit.
pub fn curve_info(curve: &GraphCurve, alpha: f64) -> Result<CurveInfo> {
    let mut order_estimates = Vec::new();
    let (lo, hi) = curve.domain();
    for &z in curve.singular_set() {
        for side in [Side::Left, Side::Right] {
            if (side == Side::Left && z <= lo) || (side == Side::Right && z >= hi) {
                continue;
            }
            order_estimates.push(estimate_vanishing_order(
                curve,
                z,
                side,
                2,
                ORDER_FIT_J_MIN,
                ORDER_FIT_J_MAX,
            )?);
        }
    }
    let mut holder_estimates = Vec::new();
    if curve.singular_set().contains(&0.0) {
        for beta in [alpha, alpha / 2.0, alpha / 4.0] {
            match estimate_holder_order(curve, beta, ORDER_FIT_J_MIN, ORDER_FIT_J_MAX) {
                Ok(est) => holder_estimates.push(est),
                Err(Error::InsufficientData { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let r = curve.decoupling_exponent_r()?;
    let orders_clean = order_estimates
        .iter()
        .all(|e| e.order > -1.0 && !e.suspect_mismatch);
    Ok(CurveInfo {
        id: curve.id().to_string(),
        nu: curve.model_exponent(),
        order_estimates,
        holder_estimates,
        r,
        orders_clean,
    })
}
