//! Localizing weights and weighted L^p norms over axis-parallel rectangles.
//!
//! The weight adapted to a rectangle R of size a x b centered at x0 is
//! `omega_R(x) = (1 + |T_R(x - x0)|)^(-E)` with `T_R = diag(1/a, 1/b)` and
//! E = `weight_exponent` (default 200). With E that large the weight is
//! sharply concentrated: its mass sits within a few percent of the
//! rectangle's size around the center, and everything beyond the cutoff
//! window contributes below 1e-9 of the total. Norm quadrature therefore
//! runs on a window of the rectangle rather than a fixed multiple of it;
//! the omitted tail is controlled by `LabConfig::weight_cutoff`.

use crate::config::LabConfig;
use crate::error::{Error, Result};
use crate::oscillatory::{FieldGrid, GridSpec};
use crate::reduce::{pairwise_sum, pairwise_sum_by};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RectKind {
    Generic,
    /// delta^-1 x delta^(-r/2), the spatial rectangle matched to a curve
    /// with maximal vanishing order r.
    RDeltaR {
        delta: f64,
        r: f64,
    },
    /// Cube of side delta^-1.
    QDelta {
        delta: f64,
    },
    /// Ball of radius R (isotropic weight scale R).
    Ball {
        radius: f64,
    },
}

/// Axis-parallel rectangle carrying a localizing weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightRectangle {
    pub center: (f64, f64),
    /// Full side lengths (a, b).
    pub size: (f64, f64),
    pub kind: RectKind,
}

impl WeightRectangle {
    pub fn generic(center: (f64, f64), size: (f64, f64)) -> WeightRectangle {
        assert!(
            size.0 > 0.0 && size.1 > 0.0,
            "rectangle sides must be positive"
        );
        WeightRectangle {
            center,
            size,
            kind: RectKind::Generic,
        }
    }

    pub fn r_delta_r(delta: f64, r: f64) -> WeightRectangle {
        WeightRectangle {
            center: (0.0, 0.0),
            size: (delta.powf(-1.0), delta.powf(-r / 2.0)),
            kind: RectKind::RDeltaR { delta, r },
        }
    }

    pub fn q_delta(delta: f64) -> WeightRectangle {
        WeightRectangle {
            center: (0.0, 0.0),
            size: (delta.powf(-1.0), delta.powf(-1.0)),
            kind: RectKind::QDelta { delta },
        }
    }

    pub fn ball(radius: f64) -> WeightRectangle {
        WeightRectangle {
            center: (0.0, 0.0),
            size: (radius, radius),
            kind: RectKind::Ball { radius },
        }
    }

    pub fn translated(&self, shift: (f64, f64)) -> WeightRectangle {
        WeightRectangle {
            center: (self.center.0 + shift.0, self.center.1 + shift.1),
            size: self.size,
            kind: RectKind::Generic,
        }
    }

    /// omega_R(x) with decay exponent E.
    pub fn weight(&self, x: (f64, f64), exponent: i32) -> f64 {
        let u = (x.0 - self.center.0) / self.size.0;
        let v = (x.1 - self.center.1) / self.size.1;
        (1.0 + u.hypot(v)).powi(-exponent)
    }
}

/// omega_R at `x` with the default exponent from `cfg`.
pub fn weight_eval(rect: &WeightRectangle, x: (f64, f64), cfg: &LabConfig) -> f64 {
    rect.weight(x, cfg.weight_exponent)
}

/// The evaluation window for a rectangle: half-extents of the region where
/// the weight is above the cutoff, shrunk (y first, then both) to respect
/// the field-point budget at the given steps.
pub fn window_half_extents(
    rect: &WeightRectangle,
    hx: f64,
    hy: f64,
    cfg: &LabConfig,
) -> (f64, f64) {
    let s0 = cfg.window_radius();
    let mut half_x = s0 * rect.size.0;
    let mut half_y = s0 * rect.size.1;
    let count = |wx: f64, wy: f64| -> f64 {
        let nx = 2.0 * (wx / hx).ceil() + 1.0;
        let ny = 2.0 * (wy / hy).ceil() + 1.0;
        nx * ny
    };
    let cap = cfg.max_field_points as f64;
    if count(half_x, half_y) > cap {
        // Shrink the y window first, but keep at least a square window of
        // the x scale so the core of the weight stays covered.
        let floor_y = (s0 * rect.size.0).min(half_y);
        let nx = 2.0 * (half_x / hx).ceil() + 1.0;
        let target_ny = (cap / nx).floor().max(9.0);
        let capped_y = 0.5 * (target_ny - 1.0) * hy;
        half_y = capped_y.max(floor_y).min(half_y);
        // Shrink both proportionally until the rounded counts fit.
        let mut guard = 0;
        while count(half_x, half_y) > cap && guard < 64 {
            let scale = (cap / count(half_x, half_y)).sqrt().min(0.999);
            half_x *= scale;
            half_y *= scale;
            guard += 1;
        }
    }
    (half_x, half_y)
}

/// Default field grid for a rectangle: steps bounded by the band limit
/// (samples_per_freq per unit of frequency extent) and by the weight's own
/// resolution scale; extents from [`window_half_extents`].
pub fn window_grid(rect: &WeightRectangle, f1_max: f64, f2_max: f64, cfg: &LabConfig) -> GridSpec {
    let hx =
        (1.0 / (cfg.samples_per_freq * f1_max.max(1e-9))).min(rect.size.0 / cfg.weight_res_divisor);
    let hy =
        (1.0 / (cfg.samples_per_freq * f2_max.max(1e-9))).min(rect.size.1 / cfg.weight_res_divisor);
    let (half_x, half_y) = window_half_extents(rect, hx, hy, cfg);
    GridSpec::centered(rect.center, half_x, half_y, hx, hy)
}

/// Check that a field grid covers the evaluation window this configuration
/// would demand for `rect` at the grid's own steps.
fn check_coverage(field: &FieldGrid, rect: &WeightRectangle, cfg: &LabConfig) -> Result<()> {
    let spec = &field.spec;
    let (want_x, want_y) = window_half_extents(rect, spec.hx, spec.hy, cfg);
    let have_lo_x = rect.center.0 - spec.x0;
    let have_hi_x = spec.x(spec.nx - 1) - rect.center.0;
    let have_lo_y = rect.center.1 - spec.y0;
    let have_hi_y = spec.y(spec.ny - 1) - rect.center.1;
    let tol_x = 1.5 * spec.hx;
    let tol_y = 1.5 * spec.hy;
    if have_lo_x + tol_x < want_x
        || have_hi_x + tol_x < want_x
        || have_lo_y + tol_y < want_y
        || have_hi_y + tol_y < want_y
    {
        return Err(Error::Coverage {
            detail: format!(
                "window needs +/-({want_x:.3}, {want_y:.3}) around ({}, {}), grid spans [{:.3}, {:.3}] x [{:.3}, {:.3}]",
                rect.center.0,
                rect.center.1,
                spec.x0,
                spec.x(spec.nx - 1),
                spec.y0,
                spec.y(spec.ny - 1)
            ),
        });
    }
    Ok(())
}

/// Precomputed quadrature weights `omega_R(x) * hx * hy * edge` on a grid.
/// Shared across the many norms taken on one grid.
#[derive(Debug, Clone)]
pub struct WeightGrid {
    pub spec: GridSpec,
    pub quad: Vec<f64>,
    pub mass: f64,
}

impl WeightGrid {
    pub fn compute(rect: &WeightRectangle, spec: GridSpec, cfg: &LabConfig) -> WeightGrid {
        let nx = spec.nx;
        let ny = spec.ny;
        let exponent = cfg.weight_exponent;
        let mut quad = vec![0.0f64; nx * ny];
        quad.par_chunks_mut(nx).enumerate().for_each(|(iy, row)| {
            let y = spec.y(iy);
            let ey = if iy == 0 || iy == ny - 1 { 0.5 } else { 1.0 };
            for (ix, q) in row.iter_mut().enumerate() {
                let x = spec.x(ix);
                let ex = if ix == 0 || ix == nx - 1 { 0.5 } else { 1.0 };
                *q = rect.weight((x, y), exponent) * ex * ey * spec.hx * spec.hy;
            }
        });
        let mass = pairwise_sum(&quad);
        WeightGrid { spec, quad, mass }
    }
}

/// p-th power of the weighted norm from precomputed quadrature weights.
/// Row partials are summed sequentially and combined with a fixed pairwise
/// tree, so the value is independent of the worker count.
pub fn weighted_lp_pow_cached(values: &[num_complex::Complex64], wg: &WeightGrid, p: f64) -> f64 {
    let nx = wg.spec.nx;
    let ny = wg.spec.ny;
    debug_assert_eq!(values.len(), nx * ny);
    let half = 0.5 * p;
    let is_p2 = (p - 2.0).abs() < 1e-12;
    let is_p4 = (p - 4.0).abs() < 1e-12;
    let is_p6 = (p - 6.0).abs() < 1e-12;
    let rows: Vec<f64> = (0..ny)
        .into_par_iter()
        .map(|iy| {
            let base = iy * nx;
            pairwise_sum_by(0, nx, |ix| {
                let v = values[base + ix];
                let m2 = v.re * v.re + v.im * v.im;
                let mp = if is_p2 {
                    m2
                } else if is_p4 {
                    m2 * m2
                } else if is_p6 {
                    m2 * m2 * m2
                } else {
                    m2.powf(half)
                };
                mp * wg.quad[base + ix]
            })
        })
        .collect();
    pairwise_sum(&rows)
}

/// `(sum |field|^p omega_R hx hy)^(1/p)`.
pub fn weighted_lp_norm(
    field: &FieldGrid,
    p: f64,
    rect: &WeightRectangle,
    cfg: &LabConfig,
) -> Result<f64> {
    if !(2.0..=6.0).contains(&p) {
        return Err(Error::Domain(format!("p must be in [2, 6], got {p}")));
    }
    check_coverage(field, rect, cfg)?;
    let wg = WeightGrid::compute(rect, field.spec, cfg);
    Ok(weighted_lp_pow_cached(&field.values, &wg, p).powf(1.0 / p))
}

/// Outcome of the covering comparison between one large rectangle and a
/// family of translated tiles.
#[derive(Debug, Clone)]
pub struct MinkowskiCheck {
    pub holds: bool,
    /// sup over the grid of omega_big / sum of tile weights.
    pub cover_constant: f64,
    pub lhs: f64,
    /// `cover_constant^(1/p) * (sum_tiles norm^p)^(1/p)`.
    pub rhs: f64,
}

/// Verify `||f||_{L^p(w_big)} <= C^(1/p) (sum_tiles ||f||^p_{L^p(w_tile)})^(1/p)`
/// where C is the computed cover constant of the tile weights.
pub fn minkowski_transfer_check(
    field: &FieldGrid,
    p: f64,
    big: &WeightRectangle,
    tiles: &[WeightRectangle],
    cfg: &LabConfig,
) -> Result<MinkowskiCheck> {
    if tiles.is_empty() {
        return Err(Error::Domain(
            "minkowski check needs at least one tile".into(),
        ));
    }
    check_coverage(field, big, cfg)?;
    let spec = field.spec;
    let exponent = cfg.weight_exponent;
    // Cover constant on the grid.
    let cover: f64 = (0..spec.ny)
        .into_par_iter()
        .map(|iy| {
            let y = spec.y(iy);
            let mut worst: f64 = 0.0;
            for ix in 0..spec.nx {
                let x = spec.x(ix);
                let wb = big.weight((x, y), exponent);
                let ws: f64 = tiles.iter().map(|t| t.weight((x, y), exponent)).sum();
                if ws > 0.0 {
                    worst = worst.max(wb / ws);
                } else if wb > 0.0 {
                    worst = f64::INFINITY;
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    let wg_big = WeightGrid::compute(big, spec, cfg);
    let lhs_pow = weighted_lp_pow_cached(&field.values, &wg_big, p);
    let mut tile_pow_sum = 0.0;
    for t in tiles {
        let wg = WeightGrid::compute(t, spec, cfg);
        tile_pow_sum += weighted_lp_pow_cached(&field.values, &wg, p);
    }
    let lhs = lhs_pow.powf(1.0 / p);
    let rhs = (cover * tile_pow_sum).powf(1.0 / p);
    Ok(MinkowskiCheck {
        holds: lhs <= rhs * (1.0 + 1e-9),
        cover_constant: cover,
        lhs,
        rhs,
    })
}

/// Relative weight mass beyond `s0` rectangle-units from the center, from
/// the closed-form radial integral of (1+r)^(-E).
pub fn radial_tail_fraction(s0: f64, exponent: i32) -> f64 {
    let e = exponent as f64;
    let total = 1.0 / ((e - 1.0) * (e - 2.0));
    let u = 1.0 + s0;
    let tail = u.powf(2.0 - e) / (e - 2.0) - u.powf(1.0 - e) / (e - 1.0);
    tail / total
}
