//! Assembling the decoupling ratio: left side over the full interval,
//! right side as the l2 sum of per-cell norms, constant estimation by
//! extremizer search, and exponent scans in delta.
//!
//! For piecewise-constant g on the delta^(1/2) partition, every field is a
//! linear combination of the per-cell unit fields, so a workspace computes
//! those once per (curve, delta, rectangle) and reuses them across test
//! functions, strategies, and p values.

use crate::config::{LabConfig, Strategy};
use crate::curve::GraphCurve;
use crate::error::{Error, Result};
use crate::norms::{weighted_lp_pow_cached, window_grid, WeightGrid, WeightRectangle};
use crate::oscillatory::{cell_unit_fields, evaluate_field, FieldGrid, PlaneCurve, TestFunction};
use crate::partition::{dyadic_blocks, uniform_partition, Interval, Partition};
use crate::reduce::{pairwise_sum, pairwise_sum_by};
use crate::rescale::min_second_derivative;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Numerical slack on the exact discrete trivial bound sqrt(#cells).
pub const TRIVIAL_BOUND_TOL: f64 = 1e-6;

/// One evaluation of the decoupling inequality.
#[derive(Debug, Clone)]
pub struct DecouplingReport {
    pub curve_id: String,
    pub nu: Option<f64>,
    pub delta: f64,
    pub p: f64,
    pub r: f64,
    pub rect: WeightRectangle,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub cell_count: usize,
    pub nx: usize,
    pub ny: usize,
    pub nq: usize,
    pub g_descriptor: String,
}

impl DecouplingReport {
    /// ratio <= sqrt(#cells) (1 + tol): Minkowski plus Cauchy-Schwarz,
    /// which holds exactly on the shared quadrature grid.
    pub fn within_trivial_bound(&self) -> bool {
        self.ratio <= (self.cell_count as f64).sqrt() * (1.0 + TRIVIAL_BOUND_TOL)
    }
}

/// Unit fields and quadrature weights for one (curve, delta, rectangle).
pub struct RatioWorkspace {
    pub curve_id: String,
    pub nu: Option<f64>,
    pub delta: f64,
    pub r: f64,
    pub rect: WeightRectangle,
    pub partition: Partition,
    pub fields: Vec<FieldGrid>,
    pub weight_grid: WeightGrid,
    pub nq_total: usize,
}

impl RatioWorkspace {
    /// Build for the curve's default rectangle R_{delta, r} or an explicit
    /// one.
    pub fn new(
        curve: &GraphCurve,
        delta: f64,
        rect: Option<WeightRectangle>,
        cfg: &LabConfig,
    ) -> Result<RatioWorkspace> {
        let r = curve.decoupling_exponent_r()?;
        let rect = rect.unwrap_or_else(|| WeightRectangle::r_delta_r(delta, r));
        let whole = Interval::closed(0.0, 1.0);
        let partition = uniform_partition(whole, delta.sqrt())?;
        let (f1, f2) = curve.frequency_extents(whole);
        let spec = window_grid(&rect, f1, f2, cfg);
        let (fields, nq_total) = cell_unit_fields(curve, &partition, spec, rect, cfg)?;
        let weight_grid = WeightGrid::compute(&rect, spec, cfg);
        Ok(RatioWorkspace {
            curve_id: curve.id().to_string(),
            nu: curve.model_exponent(),
            delta,
            r,
            rect,
            partition,
            fields,
            weight_grid,
            nq_total,
        })
    }

    pub fn cell_count(&self) -> usize {
        self.partition.len()
    }

    /// ||U_c||_{L^p(w)} for every cell.
    pub fn unit_norms(&self, p: f64) -> Vec<f64> {
        self.fields
            .iter()
            .map(|f| weighted_lp_pow_cached(&f.values, &self.weight_grid, p).powf(1.0 / p))
            .collect()
    }

    fn rhs_from_coeffs(&self, coeffs: &[Complex64], unit_norms: &[f64]) -> f64 {
        let s: f64 = coeffs
            .iter()
            .zip(unit_norms.iter())
            .map(|(a, n)| a.norm_sqr() * n * n)
            .sum();
        s.sqrt()
    }

    /// Full ratio evaluation for one coefficient vector.
    pub fn ratio_for_coeffs(
        &self,
        coeffs: &[Complex64],
        p: f64,
        descriptor: &str,
    ) -> DecouplingReport {
        assert_eq!(coeffs.len(), self.cell_count());
        let unit_norms = self.unit_norms(p);
        let lhs_field = FieldGrid::linear_combination(&self.fields, coeffs);
        let lhs = weighted_lp_pow_cached(&lhs_field.values, &self.weight_grid, p).powf(1.0 / p);
        let rhs = self.rhs_from_coeffs(coeffs, &unit_norms);
        self.report(lhs, rhs, p, descriptor)
    }

    fn report(&self, lhs: f64, rhs: f64, p: f64, descriptor: &str) -> DecouplingReport {
        DecouplingReport {
            curve_id: self.curve_id.clone(),
            nu: self.nu,
            delta: self.delta,
            p,
            r: self.r,
            rect: self.rect,
            lhs,
            rhs,
            ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
            cell_count: self.cell_count(),
            nx: self.weight_grid.spec.nx,
            ny: self.weight_grid.spec.ny,
            nq: self.nq_total,
            g_descriptor: descriptor.to_string(),
        }
    }
}

/// `|| cur + da * unit ||^p_{L^p(w)}` without materializing the shifted
/// field; one read-only pass, fixed-order reduction.
fn lhs_pow_shifted(
    cur: &[Complex64],
    unit: &[Complex64],
    da: Complex64,
    wg: &WeightGrid,
    p: f64,
) -> f64 {
    let nx = wg.spec.nx;
    let ny = wg.spec.ny;
    let half = 0.5 * p;
    let is_p2 = (p - 2.0).abs() < 1e-12;
    let is_p4 = (p - 4.0).abs() < 1e-12;
    let is_p6 = (p - 6.0).abs() < 1e-12;
    let rows: Vec<f64> = (0..ny)
        .into_par_iter()
        .map(|iy| {
            let base = iy * nx;
            pairwise_sum_by(0, nx, |ix| {
                let i = base + ix;
                let re = cur[i].re + da.re * unit[i].re - da.im * unit[i].im;
                let im = cur[i].im + da.re * unit[i].im + da.im * unit[i].re;
                let m2 = re * re + im * im;
                let mp = if is_p2 {
                    m2
                } else if is_p4 {
                    m2 * m2
                } else if is_p6 {
                    m2 * m2 * m2
                } else {
                    m2.powf(half)
                };
                mp * wg.quad[i]
            })
        })
        .collect();
    pairwise_sum(&rows)
}

/// Both sides of the inequality for one test function, on one shared grid.
/// The right side sums over every cell of the delta^(1/2) partition,
/// including cells where g vanishes.
pub fn decoupling_ratio(
    curve: &GraphCurve,
    g: &TestFunction,
    delta: f64,
    p: f64,
    rect: Option<WeightRectangle>,
    cfg: &LabConfig,
    descriptor: &str,
) -> Result<DecouplingReport> {
    let r = curve.decoupling_exponent_r()?;
    let rect = rect.unwrap_or_else(|| WeightRectangle::r_delta_r(delta, r));
    let whole = Interval::closed(0.0, 1.0);
    let partition = uniform_partition(whole, delta.sqrt())?;
    let (f1, f2) = curve.frequency_extents(whole);
    let spec = window_grid(&rect, f1, f2, cfg);
    let wg = WeightGrid::compute(&rect, spec, cfg);
    let mut cell_fields = Vec::with_capacity(partition.len());
    let mut nq = 0usize;
    for cell in &partition.cells {
        nq += 8 * crate::oscillatory::oscillation_subcells(
            curve,
            *cell,
            spec.max_abs_x(),
            spec.max_abs_y(),
            cfg,
        )?;
        cell_fields.push(evaluate_field(curve, *cell, g, spec, rect, cfg)?);
    }
    let ones = vec![Complex64::new(1.0, 0.0); cell_fields.len()];
    let lhs_field = FieldGrid::linear_combination(&cell_fields, &ones);
    let lhs = weighted_lp_pow_cached(&lhs_field.values, &wg, p).powf(1.0 / p);
    let rhs_sq: f64 = cell_fields
        .iter()
        .map(|f| {
            let n = weighted_lp_pow_cached(&f.values, &wg, p).powf(1.0 / p);
            n * n
        })
        .sum();
    let rhs = rhs_sq.sqrt();
    Ok(DecouplingReport {
        curve_id: curve.id().to_string(),
        nu: curve.model_exponent(),
        delta,
        p,
        r,
        rect,
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
        cell_count: partition.len(),
        nx: spec.nx,
        ny: spec.ny,
        nq,
        g_descriptor: descriptor.to_string(),
    })
}

/// Outcome of the extremizer search for K_p(delta). K_hat is a lower bound
/// witness: the largest ratio any tried g achieved.
#[derive(Debug, Clone)]
pub struct ConstantEstimate {
    pub delta: f64,
    pub p: f64,
    pub k_hat: f64,
    pub trials: usize,
    pub best: DecouplingReport,
    pub per_strategy: Vec<(String, f64)>,
}

/// Random coefficients for the trivial-bound suite: magnitudes in
/// [0.5, 1.5], uniform phases.
pub fn random_g_coeffs(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let m: f64 = 0.5 + rng.random::<f64>();
            let th: f64 = std::f64::consts::TAU * rng.random::<f64>();
            Complex64::new(m * th.cos(), m * th.sin())
        })
        .collect()
}

/// Search for the decoupling constant at one (delta, p): runs the enabled
/// strategies in a fixed order against the shared workspace, spending at
/// most `budget` ratio evaluations. Deterministic given the seed.
pub fn estimate_constant(
    ws: &RatioWorkspace,
    p: f64,
    strategies: &[Strategy],
    budget: usize,
    seed: u64,
) -> Result<ConstantEstimate> {
    if budget == 0 {
        return Err(Error::Domain(
            "extremizer search budget must be positive".into(),
        ));
    }
    let n = ws.cell_count();
    let unit_norms = ws.unit_norms(p);
    let enabled = |s: Strategy| strategies.contains(&s);

    let mut evals = 0usize;
    let mut best_k = f64::NEG_INFINITY;
    let mut best_coeffs: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); n];
    let mut best_desc = String::from("constant");
    let mut per_strategy: Vec<(String, f64)> = Vec::new();

    // Evaluate one coefficient vector from scratch.
    let full_ratio = |coeffs: &[Complex64]| -> f64 {
        let lhs_field = FieldGrid::linear_combination(&ws.fields, coeffs);
        let lhs = weighted_lp_pow_cached(&lhs_field.values, &ws.weight_grid, p).powf(1.0 / p);
        let rhs = ws.rhs_from_coeffs(coeffs, &unit_norms);
        if rhs > 0.0 {
            lhs / rhs
        } else {
            0.0
        }
    };

    let consider = |k: f64,
                    coeffs: &[Complex64],
                    desc: String,
                    best_k: &mut f64,
                    best_coeffs: &mut Vec<Complex64>,
                    best_desc: &mut String| {
        if k > *best_k {
            *best_k = k;
            *best_coeffs = coeffs.to_vec();
            *best_desc = desc;
        }
    };

    if enabled(Strategy::Constant) && evals < budget {
        let coeffs = vec![Complex64::new(1.0, 0.0); n];
        let k = full_ratio(&coeffs);
        evals += 1;
        per_strategy.push(("constant".into(), k));
        consider(
            k,
            &coeffs,
            "constant".into(),
            &mut best_k,
            &mut best_coeffs,
            &mut best_desc,
        );
    }

    if enabled(Strategy::SingleCell) && evals < budget {
        // Single-cell ratios are 1 by construction; evaluate through the
        // cached norms so the witness costs one pass over the cells.
        let mut strat_best = f64::NEG_INFINITY;
        for c in 0..n {
            if evals >= budget {
                break;
            }
            evals += 1;
            let lhs = unit_norms[c];
            let k = if lhs > 0.0 { 1.0 } else { 0.0 };
            if k > strat_best {
                strat_best = k;
            }
            if k > best_k {
                let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
                coeffs[c] = Complex64::new(1.0, 0.0);
                consider(
                    k,
                    &coeffs,
                    format!("single_cell({c})"),
                    &mut best_k,
                    &mut best_coeffs,
                    &mut best_desc,
                );
            }
        }
        per_strategy.push(("single_cell".into(), strat_best));
    }

    // Random restarts pay a full linear combination each; cap their share
    // and leave the rest to the cheap incremental coordinate ascent.
    let share = budget.div_ceil(8).min(32);
    for (strategy, label) in [
        (Strategy::RandomPhase, "random_phase"),
        (Strategy::RandomSign, "random_sign"),
    ] {
        if !enabled(strategy) {
            continue;
        }
        // Dedicated stream per strategy so enabling one does not shift
        // another's draws.
        let stream = match strategy {
            Strategy::RandomPhase => 1,
            _ => 2,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(stream));
        let mut strat_best = f64::NEG_INFINITY;
        for trial in 0..share {
            if evals >= budget {
                break;
            }
            let coeffs: Vec<Complex64> = match strategy {
                Strategy::RandomPhase => (0..n)
                    .map(|_| {
                        let th: f64 = std::f64::consts::TAU * rng.random::<f64>();
                        Complex64::new(th.cos(), th.sin())
                    })
                    .collect(),
                _ => (0..n)
                    .map(|_| {
                        let s: f64 = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
                        Complex64::new(s, 0.0)
                    })
                    .collect(),
            };
            let k = full_ratio(&coeffs);
            evals += 1;
            if k > strat_best {
                strat_best = k;
            }
            consider(
                k,
                &coeffs,
                format!("{label}({trial})"),
                &mut best_k,
                &mut best_coeffs,
                &mut best_desc,
            );
        }
        per_strategy.push((label.into(), strat_best));
    }

    if enabled(Strategy::CoordinateAscent) && evals < budget {
        // Hill-climb from the best coefficients found so far, one cell at a
        // time: phase rotations first, then magnitude scalings, accepting
        // improvements. Steps shrink each full pass.
        let mut coeffs = best_coeffs.clone();
        let mut cur = FieldGrid::linear_combination(&ws.fields, &coeffs);
        let mut cur_lhs_pow = weighted_lp_pow_cached(&cur.values, &ws.weight_grid, p);
        let mut rhs = ws.rhs_from_coeffs(&coeffs, &unit_norms);
        let mut k_cur = if rhs > 0.0 {
            cur_lhs_pow.powf(1.0 / p) / rhs
        } else {
            0.0
        };
        let mut strat_best = k_cur;
        let mut phase_step = std::f64::consts::TAU / 12.0;
        let mut mag_step = 1.25f64;
        let mut accepts = 0usize;
        'outer: loop {
            let mut improved_pass = false;
            for c in 0..n {
                let rot_p = Complex64::from_polar(1.0, phase_step);
                let rot_m = Complex64::from_polar(1.0, -phase_step);
                let candidates = [
                    coeffs[c] * rot_p,
                    coeffs[c] * rot_m,
                    coeffs[c] * mag_step,
                    coeffs[c] / mag_step,
                ];
                for cand in candidates {
                    if evals >= budget {
                        break 'outer;
                    }
                    evals += 1;
                    let da = cand - coeffs[c];
                    if da.norm() == 0.0 {
                        continue;
                    }
                    let lhs_pow =
                        lhs_pow_shifted(&cur.values, &ws.fields[c].values, da, &ws.weight_grid, p);
                    let rhs_sq = rhs * rhs - coeffs[c].norm_sqr() * unit_norms[c] * unit_norms[c]
                        + cand.norm_sqr() * unit_norms[c] * unit_norms[c];
                    let rhs_new = rhs_sq.max(0.0).sqrt();
                    let k_new = if rhs_new > 0.0 {
                        lhs_pow.powf(1.0 / p) / rhs_new
                    } else {
                        0.0
                    };
                    if k_new > k_cur * (1.0 + 1e-12) {
                        cur.add_scaled(&ws.fields[c], da);
                        coeffs[c] = cand;
                        cur_lhs_pow = lhs_pow;
                        rhs = rhs_new;
                        k_cur = k_new;
                        improved_pass = true;
                        accepts += 1;
                        if accepts.is_multiple_of(64) {
                            // Rebuild to shed accumulated increment rounding.
                            cur = FieldGrid::linear_combination(&ws.fields, &coeffs);
                            cur_lhs_pow = weighted_lp_pow_cached(&cur.values, &ws.weight_grid, p);
                            k_cur = if rhs > 0.0 {
                                cur_lhs_pow.powf(1.0 / p) / rhs
                            } else {
                                0.0
                            };
                        }
                        if k_cur > strat_best {
                            strat_best = k_cur;
                        }
                    }
                }
            }
            if !improved_pass {
                phase_step *= 0.6;
                mag_step = 1.0 + (mag_step - 1.0) * 0.6;
                if phase_step < 1e-3 {
                    break;
                }
            }
        }
        let _ = cur_lhs_pow;
        per_strategy.push(("coordinate_ascent".into(), strat_best));
        consider(
            strat_best,
            &coeffs,
            "coordinate_ascent".into(),
            &mut best_k,
            &mut best_coeffs,
            &mut best_desc,
        );
    }

    let best = ws.ratio_for_coeffs(&best_coeffs, p, &best_desc);
    Ok(ConstantEstimate {
        delta: ws.delta,
        p,
        k_hat: best_k,
        trials: evals,
        best,
        per_strategy,
    })
}

/// Least-squares slope of `ln K` against `ln(1/delta)`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|(d, _)| (1.0 / d).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, k)| k.ln()).collect();
    let n = points.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys.iter()).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[derive(Debug, Clone)]
pub struct ExponentScan {
    pub p: f64,
    pub rows: Vec<ConstantEstimate>,
    /// Fitted slope of ln K_hat against ln(1/delta). The conjectured
    /// behavior is slope near 0; the trivial bound gives 1/4.
    pub slope: f64,
}

/// Estimate the constant at each delta and fit the growth exponent.
pub fn exponent_scan(
    curve: &GraphCurve,
    deltas: &[f64],
    p: f64,
    strategies: &[Strategy],
    budget: usize,
    seed: u64,
    cfg: &LabConfig,
) -> Result<ExponentScan> {
    if deltas.len() < 4 {
        return Err(Error::Domain(format!(
            "exponent scan needs at least 4 deltas, got {}",
            deltas.len()
        )));
    }
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let ws = RatioWorkspace::new(curve, delta, None, cfg)?;
        rows.push(estimate_constant(&ws, p, strategies, budget, seed)?);
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.delta, r.k_hat)).collect();
    let slope = fit_loglog_slope(&pts);
    Ok(ExponentScan { p, rows, slope })
}

/// Ratios along the dyadic block decomposition: one report per block over
/// its own rectangle R_{delta, phi''_a} of size delta^-1 x
/// delta^-1 / phi''_a, the head interval over the global rectangle, and the
/// combined full-interval report.
#[derive(Debug, Clone)]
pub struct BlockDecoupling {
    pub combined: DecouplingReport,
    pub head: DecouplingReport,
    pub blocks: Vec<DecouplingReport>,
    /// Per block: ratio over the global rectangle restricted to the cells
    /// meeting the block (for consistency checks against `combined`).
    pub block_global_ratios: Vec<f64>,
    pub max_block: usize,
    pub all_within_trivial_bound: bool,
}

pub fn block_decoupled_ratio(
    curve: &GraphCurve,
    g: &TestFunction,
    delta: f64,
    epsilon: f64,
    p: f64,
    cfg: &LabConfig,
    descriptor: &str,
) -> Result<BlockDecoupling> {
    let blocks = dyadic_blocks(delta, epsilon, 1.0)?;
    let combined = decoupling_ratio(curve, g, delta, p, None, cfg, descriptor)?;
    let global_bound = (combined.cell_count as f64).sqrt() * (1.0 + TRIVIAL_BOUND_TOL);

    // Head over the global rectangle.
    let head = block_ratio_on(
        curve,
        g,
        blocks.head,
        delta,
        p,
        combined.rect,
        cfg,
        descriptor,
    )?;

    let mut block_reports = Vec::new();
    let mut block_global_ratios = Vec::new();
    for b in &blocks.blocks {
        let phi2_a = min_second_derivative(curve, b.lo)?;
        let rect = WeightRectangle::generic((0.0, 0.0), (1.0 / delta, 1.0 / (delta * phi2_a)));
        block_reports.push(block_ratio_on(
            curve, g, *b, delta, p, rect, cfg, descriptor,
        )?);
        block_global_ratios.push(restricted_global_ratio(curve, g, *b, &combined, p, cfg)?);
    }
    let mut max_block = 0usize;
    for (i, rep) in block_reports.iter().enumerate() {
        if rep.ratio > block_reports[max_block].ratio {
            max_block = i;
        }
    }
    let all_within = block_reports
        .iter()
        .chain(std::iter::once(&head))
        .all(|rep| rep.ratio <= global_bound);
    Ok(BlockDecoupling {
        combined,
        head,
        blocks: block_reports,
        block_global_ratios,
        max_block,
        all_within_trivial_bound: all_within,
    })
}

/// Ratio of `E_block g` against the delta^(1/2) cells of one block, over
/// an explicit rectangle. This is the per-block object of the dyadic
/// decomposition, also usable standalone.
#[allow(clippy::too_many_arguments)]
pub fn block_ratio_on(
    curve: &GraphCurve,
    g: &TestFunction,
    block: Interval,
    delta: f64,
    p: f64,
    rect: WeightRectangle,
    cfg: &LabConfig,
    descriptor: &str,
) -> Result<DecouplingReport> {
    let partition = uniform_partition(block, delta.sqrt().min(block.length()))?;
    let (f1, f2) = curve.frequency_extents(block);
    let spec = window_grid(&rect, f1, f2, cfg);
    let wg = WeightGrid::compute(&rect, spec, cfg);
    let mut cell_fields = Vec::with_capacity(partition.len());
    for cell in &partition.cells {
        cell_fields.push(evaluate_field(curve, *cell, g, spec, rect, cfg)?);
    }
    let ones = vec![Complex64::new(1.0, 0.0); cell_fields.len()];
    let lhs_field = FieldGrid::linear_combination(&cell_fields, &ones);
    let lhs = weighted_lp_pow_cached(&lhs_field.values, &wg, p).powf(1.0 / p);
    let rhs_sq: f64 = cell_fields
        .iter()
        .map(|f| {
            let n = weighted_lp_pow_cached(&f.values, &wg, p).powf(1.0 / p);
            n * n
        })
        .sum();
    let rhs = rhs_sq.sqrt();
    Ok(DecouplingReport {
        curve_id: curve.id().to_string(),
        nu: curve.model_exponent(),
        delta,
        p,
        r: 0.0,
        rect,
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
        cell_count: partition.len(),
        nx: spec.nx,
        ny: spec.ny,
        nq: 0,
        g_descriptor: format!("{descriptor}@[{:.4},{:.4}]", block.lo, block.hi),
    })
}

/// Ratio of g over the global rectangle using only the global-partition
/// cells whose midpoint lies in the block.
fn restricted_global_ratio(
    curve: &GraphCurve,
    g: &TestFunction,
    block: Interval,
    combined: &DecouplingReport,
    p: f64,
    cfg: &LabConfig,
) -> Result<f64> {
    let whole = Interval::closed(0.0, 1.0);
    let partition = uniform_partition(whole, combined.delta.sqrt())?;
    let (f1, f2) = curve.frequency_extents(whole);
    let spec = window_grid(&combined.rect, f1, f2, cfg);
    let wg = WeightGrid::compute(&combined.rect, spec, cfg);
    let mut lhs_field: Option<FieldGrid> = None;
    let mut rhs_sq = 0.0;
    for cell in &partition.cells {
        if !block.contains(cell.midpoint()) {
            continue;
        }
        let f = evaluate_field(curve, *cell, g, spec, combined.rect, cfg)?;
        let n = weighted_lp_pow_cached(&f.values, &wg, p).powf(1.0 / p);
        rhs_sq += n * n;
        match &mut lhs_field {
            None => lhs_field = Some(f),
            Some(acc) => acc.add_scaled(&f, Complex64::new(1.0, 0.0)),
        }
    }
    let lhs = match &lhs_field {
        None => 0.0,
        Some(f) => weighted_lp_pow_cached(&f.values, &wg, p).powf(1.0 / p),
    };
    let rhs = rhs_sq.sqrt();
    Ok(if rhs > 0.0 { lhs / rhs } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_small() -> LabConfig {
        LabConfig {
            max_field_points: 300_000,
            ..LabConfig::default()
        }
    }

    #[test]
    fn single_cell_ratio_is_one() {
        let curve = GraphCurve::parabola();
        let delta = 0.25f64;
        let part = uniform_partition(Interval::closed(0.0, 1.0), delta.sqrt()).unwrap();
        for cell in 0..part.len() {
            let g = TestFunction::single_cell(part.clone(), cell);
            let rep =
                decoupling_ratio(&curve, &g, delta, 4.0, None, &cfg_small(), "single").unwrap();
            assert!(
                (rep.ratio - 1.0).abs() < 1e-6,
                "cell {cell}: ratio {}",
                rep.ratio
            );
        }
    }

    #[test]
    fn trivial_bound_holds_for_random_g() {
        let curve = GraphCurve::model(2.0);
        let delta = 2f64.powi(-4);
        let ws = RatioWorkspace::new(&curve, delta, None, &cfg_small()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in [2.0, 4.0, 6.0] {
            for trial in 0..5 {
                let coeffs = random_g_coeffs(ws.cell_count(), &mut rng);
                let rep = ws.ratio_for_coeffs(&coeffs, p, &format!("random({trial})"));
                assert!(rep.within_trivial_bound(), "p {p}: ratio {}", rep.ratio);
                assert!(rep.lhs >= 0.0 && rep.rhs >= 0.0);
            }
        }
    }

    #[test]
    fn workspace_and_direct_path_agree() {
        let curve = GraphCurve::sin_perturbed();
        let delta = 0.25;
        let ws = RatioWorkspace::new(&curve, delta, None, &cfg_small()).unwrap();
        let coeffs = vec![Complex64::new(0.7, -0.3), Complex64::new(-1.1, 0.4)];
        let from_ws = ws.ratio_for_coeffs(&coeffs, 4.0, "x");
        let g = TestFunction::piecewise(ws.partition.clone(), coeffs);
        let direct = decoupling_ratio(&curve, &g, delta, 4.0, None, &cfg_small(), "x").unwrap();
        assert!((from_ws.lhs - direct.lhs).abs() < 1e-9 * direct.lhs.max(1e-12));
        assert!((from_ws.rhs - direct.rhs).abs() < 1e-9 * direct.rhs.max(1e-12));
    }

    #[test]
    fn estimate_constant_single_cell_witness() {
        let curve = GraphCurve::parabola();
        let ws = RatioWorkspace::new(&curve, 0.25, None, &cfg_small()).unwrap();
        let est = estimate_constant(&ws, 4.0, &[Strategy::SingleCell], 10, 1).unwrap();
        assert!((est.k_hat - 1.0).abs() < 1e-6);
    }

    #[test]
    fn estimate_constant_respects_trivial_bound() {
        let curve = GraphCurve::parabola();
        let delta = 0.25; // two cells
        let ws = RatioWorkspace::new(&curve, delta, None, &cfg_small()).unwrap();
        let strategies = [
            Strategy::Constant,
            Strategy::SingleCell,
            Strategy::RandomPhase,
            Strategy::RandomSign,
            Strategy::CoordinateAscent,
        ];
        let est = estimate_constant(&ws, 6.0, &strategies, 120, 3).unwrap();
        let bound = (ws.cell_count() as f64).sqrt() * (1.0 + 1e-6);
        assert!(est.k_hat >= 1.0 - 1e-6);
        assert!(est.k_hat <= bound, "k_hat {} > bound {bound}", est.k_hat);
        assert!(est.trials <= 120);
    }

    #[test]
    fn estimate_constant_zero_budget_is_domain_error() {
        let curve = GraphCurve::parabola();
        let ws = RatioWorkspace::new(&curve, 0.25, None, &cfg_small()).unwrap();
        assert!(matches!(
            estimate_constant(&ws, 2.0, &[Strategy::Constant], 0, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn search_is_deterministic_and_monotone_in_budget() {
        let curve = GraphCurve::model(2.0);
        let ws = RatioWorkspace::new(&curve, 2f64.powi(-4), None, &cfg_small()).unwrap();
        let strategies = [
            Strategy::Constant,
            Strategy::SingleCell,
            Strategy::RandomPhase,
            Strategy::RandomSign,
            Strategy::CoordinateAscent,
        ];
        let a = estimate_constant(&ws, 6.0, &strategies, 60, 9).unwrap();
        let b = estimate_constant(&ws, 6.0, &strategies, 60, 9).unwrap();
        assert_eq!(a.k_hat.to_bits(), b.k_hat.to_bits());
        // Larger budget extends the same deterministic trial sequence.
        let c = estimate_constant(&ws, 6.0, &strategies, 120, 9).unwrap();
        assert!(c.k_hat >= a.k_hat - 1e-12);
    }

    #[test]
    fn slope_fit_recovers_synthetic_power_laws() {
        let deltas = [0.0625f64, 0.03125, 0.015625, 0.0078125];
        let trivial: Vec<(f64, f64)> = deltas.iter().map(|&d| (d, d.powf(-0.25))).collect();
        assert!((fit_loglog_slope(&trivial) - 0.25).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = deltas.iter().map(|&d| (d, 1.7)).collect();
        assert!(fit_loglog_slope(&flat).abs() < 1e-12);
    }

    #[test]
    fn exponent_scan_needs_four_deltas() {
        let curve = GraphCurve::parabola();
        assert!(matches!(
            exponent_scan(
                &curve,
                &[0.25, 0.125],
                6.0,
                &[Strategy::Constant],
                10,
                1,
                &cfg_small()
            ),
            Err(Error::Domain(_))
        ));
    }

    // Value recorded by print_regression_fixtures; see
    // extremizer_replay_never_regresses.
    const RECORDED_K_HAT: f64 = 2.3732956344;

    /// Recomputes the values frozen in the regression tests below. Run with
    /// `cargo test -p decouple-lab --lib print_regression_fixtures -- --ignored --nocapture`.
    #[test]
    #[ignore]
    fn print_regression_fixtures() {
        let cfg = LabConfig::default();
        let parabola = GraphCurve::parabola();
        let part = uniform_partition(Interval::closed(0.0, 1.0), 0.25).unwrap();
        let g = TestFunction::constant_on(part);
        let rep = decoupling_ratio(&parabola, &g, 0.0625, 2.0, None, &cfg, "constant").unwrap();
        println!(
            "parabola delta=1/16 p=2 constant-g ratio = {:.10}",
            rep.ratio
        );
        let ws = RatioWorkspace::new(&parabola, 2f64.powi(-6), None, &cfg).unwrap();
        let strategies = [
            Strategy::Constant,
            Strategy::SingleCell,
            Strategy::RandomPhase,
            Strategy::RandomSign,
            Strategy::CoordinateAscent,
        ];
        let est = estimate_constant(&ws, 6.0, &strategies, 200, 7).unwrap();
        println!(
            "parabola delta=2^-6 p=6 budget=200 seed=7 k_hat = {:.10}",
            est.k_hat
        );
        let gfull = TestFunction::constant_on(
            uniform_partition(Interval::closed(0.0, 1.0), 2f64.powi(-4)).unwrap(),
        );
        let blocks = block_decoupled_ratio(
            &parabola,
            &gfull,
            2f64.powi(-8),
            0.125,
            4.0,
            &cfg,
            "constant",
        )
        .unwrap();
        for (i, b) in blocks.blocks.iter().enumerate() {
            println!(
                "parabola block {i}: ratio {:.10} ({} cells)",
                b.ratio, b.cell_count
            );
        }
    }

    #[test]
    fn parabola_low_delta_ratio_regression() {
        // Frozen from a fine-grid oracle run (2x sampling, 1e-16 cutoff,
        // 1024-step weight resolution): ratio 1.89858 vs 1.89878 on the
        // default grid. The value is O(1), consistent with weighted-L^2
        // almost-orthogonality of the pieces.
        let cfg = LabConfig::default();
        let parabola = GraphCurve::parabola();
        let part = uniform_partition(Interval::closed(0.0, 1.0), 0.25).unwrap();
        let g = TestFunction::constant_on(part);
        let rep = decoupling_ratio(&parabola, &g, 0.0625, 2.0, None, &cfg, "constant").unwrap();
        assert!(
            (rep.ratio - 1.8987759281).abs() < 2e-3,
            "ratio {} drifted from the recorded reference",
            rep.ratio
        );
    }

    #[test]
    fn extremizer_replay_never_regresses() {
        // The search is deterministic, so with the recorded configuration it
        // must find at least the recorded constant (more search can only
        // improve the witness).
        let cfg = LabConfig::default();
        let parabola = GraphCurve::parabola();
        let ws = RatioWorkspace::new(&parabola, 2f64.powi(-6), None, &cfg).unwrap();
        let strategies = [
            Strategy::Constant,
            Strategy::SingleCell,
            Strategy::RandomPhase,
            Strategy::RandomSign,
            Strategy::CoordinateAscent,
        ];
        let est = estimate_constant(&ws, 6.0, &strategies, 200, 7).unwrap();
        assert!(
            est.k_hat >= RECORDED_K_HAT - 1e-6,
            "k_hat {} fell below the recorded extremizer {}",
            est.k_hat,
            RECORDED_K_HAT
        );
    }

    #[test]
    fn parabola_blocks_equivalent_under_rescaling() {
        // Parabolic rescaling maps the block [a, 2a] at scale delta to
        // [2a, 4a] at 4*delta with the same cell count; for the parabola the
        // normalized problems are affinely identical, so the ratios agree.
        let cfg = LabConfig {
            max_field_points: 400_000,
            ..LabConfig::default()
        };
        let parabola = GraphCurve::parabola();
        let g =
            TestFunction::constant_on(uniform_partition(Interval::closed(0.0, 1.0), 1.0).unwrap());
        let mut ratios = Vec::new();
        for (a, dexp) in [(0.125f64, -8), (0.25, -6), (0.5, -4)] {
            let delta = 2f64.powi(dexp);
            let phi2_a = min_second_derivative(&parabola, a).unwrap();
            let rect = WeightRectangle::generic((0.0, 0.0), (1.0 / delta, 1.0 / (delta * phi2_a)));
            let rep = block_ratio_on(
                &parabola,
                &g,
                Interval::closed(a, 2.0 * a),
                delta,
                4.0,
                rect,
                &cfg,
                "rescale-equiv",
            )
            .unwrap();
            assert_eq!(rep.cell_count, 2);
            ratios.push(rep.ratio);
        }
        for w in ratios.windows(2) {
            assert!(
                (w[0] - w[1]).abs() / w[0] < 0.05,
                "block ratios not rescaling-equivalent: {ratios:?}"
            );
        }
    }

    #[test]
    fn block_ratios_respect_bounds_and_support_locality() {
        let curve = GraphCurve::model(2.0);
        // delta = 2^-8, eps = 1/8: block boundaries 1/8, 1/4, 1/2 align with
        // the 1/16-wide cells, so the top block owns whole cells.
        let delta = 2f64.powi(-8);
        let epsilon = 0.125;
        let part = uniform_partition(Interval::closed(0.0, 1.0), delta.sqrt()).unwrap();
        // g supported on cells inside the top block [1/2, 1].
        let mut coeffs = vec![Complex64::new(0.0, 0.0); part.len()];
        for (i, cell) in part.cells.iter().enumerate() {
            if cell.midpoint() > 0.5 {
                coeffs[i] = Complex64::new(1.0, 0.25);
            }
        }
        let g = TestFunction::piecewise(part, coeffs);
        let out = block_decoupled_ratio(&curve, &g, delta, epsilon, 4.0, &cfg_small(), "top-block")
            .unwrap();
        assert!(out.all_within_trivial_bound);
        // Each block also satisfies its own (tighter) discrete bound.
        for rep in &out.blocks {
            assert!(
                rep.ratio <= (rep.cell_count as f64).sqrt() * (1.0 + 1e-6),
                "block ratio {} exceeds sqrt({})",
                rep.ratio,
                rep.cell_count
            );
        }
        // Combined ratio equals the global-rectangle ratio restricted to the
        // supporting block's cells.
        let top = out.block_global_ratios.last().copied().unwrap();
        assert!(
            (out.combined.ratio - top).abs() < 1e-6,
            "combined {} vs restricted {}",
            out.combined.ratio,
            top
        );
    }
}
