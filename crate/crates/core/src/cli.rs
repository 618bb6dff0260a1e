//! Batch experiment runner: subcommand dispatch, CSV/JSON artifacts,
//! reproducibility metadata.
//!
//! Every artifact embeds the config hash and crate version. Files are
//! written atomically (temp file, then rename). Value columns in CSVs are
//! bit-reproducible for a fixed (config, seed) at any worker count; the
//! trailing wall_ms / runtime columns are timing metadata and are excluded
//! from that contract.

use crate::config::{ExperimentConfig, PointKind};
use crate::curve::curve_info;
use crate::decoupling::{decoupling_ratio, exponent_scan, RatioWorkspace};
use crate::error::{Error, Result};
use crate::expsum::{l6_average, PointSystem};
use crate::oscillatory::TestFunction;
use crate::partition::{uniform_partition, Interval};
use crate::rescale::tmax_scan;
use num_complex::Complex64;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    CurveInfo,
    Ratio,
    Scan,
    RescaleCheck,
    Expsum,
    Selftest,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::CurveInfo => "curve-info",
            Subcommand::Ratio => "ratio",
            Subcommand::Scan => "scan",
            Subcommand::RescaleCheck => "rescale-check",
            Subcommand::Expsum => "expsum",
            Subcommand::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            out_dir: PathBuf::from("out"),
            workers: None,
            seed: None,
            quiet: true,
        }
    }
}

/// Write a file atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn artifact_header(cfg: &ExperimentConfig) -> String {
    format!("# config_hash={} version={}\n", cfg.hash(), VERSION)
}

fn opt_to_string(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Dispatch a subcommand inside a dedicated worker pool.
pub fn run(sub: Subcommand, mut cfg: ExperimentConfig, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    if let Some(seed) = opts.seed {
        cfg.search.seed = seed;
        cfg.expsum.seed = seed;
    }
    let workers = opts
        .workers
        .or_else(|| {
            std::env::var("DECOUPLE_LAB_WORKERS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| run_inner(sub, &cfg, opts))
}

fn run_inner(sub: Subcommand, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    match sub {
        Subcommand::CurveInfo => run_curve_info(cfg, opts),
        Subcommand::Ratio => run_ratio(cfg, opts),
        Subcommand::Scan => run_scan(cfg, opts),
        Subcommand::RescaleCheck => run_rescale_check(cfg, opts),
        Subcommand::Expsum => run_expsum(cfg, opts),
        Subcommand::Selftest => run_selftest(cfg, opts),
    }
}

fn run_curve_info(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    let curve = cfg.curve.build_graph()?;
    let info = curve_info(&curve, cfg.alpha)?;
    let mut orders = Vec::new();
    for e in &info.order_estimates {
        orders.push(serde_json::json!({
            "z": e.base_point,
            "side": e.side.to_string(),
            "derivative_order": e.derivative_order,
            "order": e.order,
            "fit_residual": e.fit_residual,
            "suspect_mismatch": e.suspect_mismatch,
        }));
    }
    let mut holders = Vec::new();
    for e in &info.holder_estimates {
        holders.push(serde_json::json!({
            "beta": e.alpha,
            "order": e.order,
            "fit_residual": e.fit_residual,
        }));
    }
    let doc = serde_json::json!({
        "version": VERSION,
        "config_hash": cfg.hash(),
        "subcommand": "curve-info",
        "curve": info.id,
        "nu": info.nu,
        "r": info.r,
        "orders_clean": info.orders_clean,
        "order_estimates": orders,
        "holder_order_estimates": holders,
    });
    let path = opts.out_dir.join("curve_info.json");
    write_atomic(&path, &serde_json::to_string_pretty(&doc).unwrap())?;
    if !opts.quiet {
        println!("curve {}: r = {}", info.id, info.r);
    }
    Ok(vec![path])
}

pub const RATIO_CSV_COLUMNS: &str =
    "curve,nu,delta,p,r,strategy,seed,lhs,rhs,ratio,cells,nx,ny,nq,wall_ms";

fn run_ratio(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    let curve = cfg.curve.build_graph()?;
    let mut csv = artifact_header(cfg);
    csv.push_str(RATIO_CSV_COLUMNS);
    csv.push('\n');
    for &delta in &cfg.deltas {
        let part = uniform_partition(Interval::closed(0.0, 1.0), delta.sqrt())?;
        let g = TestFunction::constant_on(part);
        for &p in &cfg.ps {
            let t0 = Instant::now();
            let rep = decoupling_ratio(&curve, &g, delta, p, None, &cfg.grid, "constant")?;
            let ms = t0.elapsed().as_millis();
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                rep.curve_id,
                opt_to_string(rep.nu),
                rep.delta,
                rep.p,
                rep.r,
                rep.g_descriptor,
                cfg.search.seed,
                rep.lhs,
                rep.rhs,
                rep.ratio,
                rep.cell_count,
                rep.nx,
                rep.ny,
                rep.nq,
                ms
            )
            .unwrap();
        }
    }
    let path = opts.out_dir.join("ratio.csv");
    write_atomic(&path, &csv)?;
    Ok(vec![path])
}

fn run_scan(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    let curve = cfg.curve.build_graph()?;
    let mut csv = artifact_header(cfg);
    csv.push_str(RATIO_CSV_COLUMNS);
    csv.push('\n');
    let mut slopes = Vec::new();
    for &p in &cfg.ps {
        let t0 = Instant::now();
        let scan = exponent_scan(
            &curve,
            &cfg.deltas,
            p,
            &cfg.search.strategies,
            cfg.search.budget,
            cfg.search.seed,
            &cfg.grid,
        )?;
        let ms = t0.elapsed().as_millis();
        for row in &scan.rows {
            let rep = &row.best;
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                rep.curve_id,
                opt_to_string(rep.nu),
                rep.delta,
                rep.p,
                rep.r,
                rep.g_descriptor,
                cfg.search.seed,
                rep.lhs,
                rep.rhs,
                row.k_hat,
                rep.cell_count,
                rep.nx,
                rep.ny,
                rep.nq,
                ms
            )
            .unwrap();
        }
        slopes.push(serde_json::json!({"p": p, "slope": scan.slope}));
        if !opts.quiet {
            println!("scan p = {p}: fitted slope {:.4}", scan.slope);
        }
    }
    let csv_path = opts.out_dir.join("scan.csv");
    write_atomic(&csv_path, &csv)?;
    let summary = serde_json::json!({
        "version": VERSION,
        "config_hash": cfg.hash(),
        "subcommand": "scan",
        "slopes": slopes,
    });
    let json_path = opts.out_dir.join("scan_summary.json");
    write_atomic(&json_path, &serde_json::to_string_pretty(&summary).unwrap())?;
    Ok(vec![csv_path, json_path])
}

fn run_rescale_check(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    let curve = cfg.curve.build_graph()?;
    let beta = cfg.beta();
    let rows = tmax_scan(
        &curve,
        &cfg.deltas,
        cfg.epsilon,
        beta,
        cfg.rescale.a_exponent,
    )?;
    let mut csv = artifact_header(cfg);
    csv.push_str("nu,a,delta,epsilon,beta,tmax,bound,margin\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            opt_to_string(r.nu),
            r.a,
            r.delta,
            r.epsilon,
            r.beta,
            r.tmax,
            r.bound,
            r.margin
        )
        .unwrap();
    }
    let path = opts.out_dir.join("rescale.csv");
    write_atomic(&path, &csv)?;
    Ok(vec![path])
}

fn run_expsum(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    let curve = cfg.curve.build_graph()?;
    let r = curve.decoupling_exponent_r()?;
    let mut csv = artifact_header(cfg);
    csv.push_str("N,R,ratio,l6avg,l2norm,runtime\n");
    for &n in &cfg.expsum.n_values {
        let ps = match cfg.expsum.points {
            PointKind::Lattice => PointSystem::lattice(n),
            PointKind::Random => PointSystem::random(n, cfg.expsum.seed),
            PointKind::Perturbed => PointSystem::perturbed(n, cfg.expsum.seed),
        };
        let radius = cfg.expsum.radius.unwrap_or((n as f64).powf(r));
        let t0 = Instant::now();
        let rep = l6_average(&curve, &ps, radius, &cfg.grid)?;
        let ms = t0.elapsed().as_millis();
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            rep.n, rep.radius, rep.ratio, rep.l6_average, rep.l2_norm, ms
        )
        .unwrap();
        if !opts.quiet {
            println!(
                "expsum N = {n}: ratio {:.4}{}",
                rep.ratio,
                if rep.radius_ok { "" } else { " (R below N^r)" }
            );
        }
    }
    let path = opts.out_dir.join("expsum.csv");
    write_atomic(&path, &csv)?;
    Ok(vec![path])
}

fn run_selftest(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !opts.quiet {
            println!("selftest: {name} ... {}", if ok { "ok" } else { "FAILED" });
        }
        if !ok {
            failures.push(name.to_string());
        }
    };

    // Derivatives.
    let sq = crate::curve::GraphCurve::from_expr("sq", "t^2", vec![]).unwrap();
    check(
        "second derivative of t^2",
        (sq.second_derivative(0.3).unwrap() - 2.0).abs() < 1e-6,
    );
    let cubic = crate::curve::GraphCurve::model(2.0);
    check(
        "second derivative of model nu=2",
        (cubic.second_derivative(0.5).unwrap() - 3.0).abs() < 1e-12,
    );

    // Partitions.
    let part = uniform_partition(Interval::closed(0.0, 1.0), 0.25).unwrap();
    check("uniform partition cell count", part.len() == 4);
    let blocks = crate::partition::dyadic_blocks(2f64.powi(-8), 0.125, 1.0).unwrap();
    check("dyadic block count", blocks.block_count() == 3);

    // Weights.
    let b = crate::norms::WeightRectangle::generic((0.0, 0.0), (1.0, 1.0));
    check(
        "weight normalization",
        (b.weight((0.0, 0.0), 200) - 1.0).abs() == 0.0
            && (b.weight((1.0, 0.0), 200) - 2f64.powi(-200)).abs() < 1e-70,
    );

    // Extension operator.
    let g1 = TestFunction::constant_on(uniform_partition(Interval::closed(0.0, 1.0), 1.0).unwrap());
    let v = crate::oscillatory::extension_eval(
        &crate::curve::GraphCurve::parabola(),
        Interval::closed(0.0, 1.0),
        &g1,
        (0.0, 0.0),
        &cfg.grid,
    )
    .unwrap();
    check(
        "extension at origin",
        (v.re - 1.0).abs() < 1e-12 && v.im.abs() < 1e-12,
    );

    // Exponential sums and counting.
    let one = crate::oscillatory::expsum_eval(
        &crate::curve::GraphCurve::parabola(),
        &[1.0],
        &[Complex64::new(1.0, 0.0)],
        (2.0, 5.0),
    )
    .unwrap();
    check(
        "unimodular single-point sum",
        (one.norm() - 1.0).abs() < 1e-12,
    );
    check(
        "vinogradov count N=2",
        crate::expsum::vinogradov_count(2).unwrap() == 20,
    );
    let torus = crate::expsum::torus_l6_integral(2, 8).unwrap();
    check(
        "torus integral matches count",
        (torus - 20.0).abs() / 20.0 < 1e-6,
    );

    // Decoupling single-cell identity at delta = 1/4.
    let curve = crate::curve::GraphCurve::parabola();
    let ws = RatioWorkspace::new(&curve, 0.25, None, &cfg.grid)?;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); ws.cell_count()];
    coeffs[0] = Complex64::new(1.0, 0.0);
    let rep = ws.ratio_for_coeffs(&coeffs, 4.0, "single_cell(0)");
    check("single-cell ratio is 1", (rep.ratio - 1.0).abs() < 1e-6);

    // Curve analysis of the model with nu = 2.
    let info = curve_info(&crate::curve::GraphCurve::model(2.0), 1.0)?;
    let r2 = info
        .order_estimates
        .first()
        .map(|e| e.order)
        .unwrap_or(f64::NAN);
    check("model nu=2 vanishing order", (r2 - 1.0).abs() < 0.05);
    check("model nu=2 exponent r", (info.r - 3.0).abs() < 1e-12);

    let doc = serde_json::json!({
        "version": VERSION,
        "config_hash": cfg.hash(),
        "subcommand": "selftest",
        "failures": failures,
    });
    let path = opts.out_dir.join("selftest.json");
    write_atomic(&path, &serde_json::to_string_pretty(&doc).unwrap())?;
    if failures.is_empty() {
        Ok(vec![path])
    } else {
        Err(Error::Domain(format!("selftest failures: {failures:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::LabConfig;

    fn tmp_dir(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("declab-test-{}-{name}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn selftest_passes_and_writes_artifact() {
        let out = tmp_dir("selftest");
        let opts = RunOptions {
            out_dir: out.clone(),
            ..RunOptions::default()
        };
        let cfg = ExperimentConfig::default();
        let paths = run(Subcommand::Selftest, cfg, &opts).unwrap();
        assert!(paths[0].exists());
        let body = std::fs::read_to_string(&paths[0]).unwrap();
        assert!(body.contains("\"failures\": []"));
    }

    #[test]
    fn curve_info_artifact_reports_r() {
        let out = tmp_dir("curveinfo");
        let opts = RunOptions {
            out_dir: out.clone(),
            ..RunOptions::default()
        };
        let cfg = ExperimentConfig {
            curve: crate::config::CurveSpec::Model { nu: 2.0 },
            ..ExperimentConfig::default()
        };
        let paths = run(Subcommand::CurveInfo, cfg, &opts).unwrap();
        let body = std::fs::read_to_string(&paths[0]).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&body).unwrap();
        assert_eq!(doc["r"], 3.0);
        let order = doc["order_estimates"][0]["order"].as_f64().unwrap();
        assert!((order - 1.0).abs() < 0.05);
    }

    #[test]
    fn rescale_check_emits_csv() {
        let out = tmp_dir("rescale");
        let opts = RunOptions {
            out_dir: out.clone(),
            ..RunOptions::default()
        };
        let cfg = ExperimentConfig {
            curve: crate::config::CurveSpec::Model { nu: 2.0 },
            deltas: vec![2f64.powi(-6), 2f64.powi(-8)],
            ..ExperimentConfig::default()
        };
        let paths = run(Subcommand::RescaleCheck, cfg, &opts).unwrap();
        let body = std::fs::read_to_string(&paths[0]).unwrap();
        assert!(body.starts_with("# config_hash="));
        assert!(body.contains("nu,a,delta,epsilon,beta,tmax,bound,margin"));
        assert_eq!(body.lines().count(), 2 + 2); // header comment + columns + 2 rows
    }

    #[test]
    fn ratio_csv_is_deterministic_across_worker_counts() {
        let cfg = ExperimentConfig {
            deltas: vec![0.25, 0.125],
            ps: vec![2.0, 4.0],
            grid: LabConfig {
                max_field_points: 200_000,
                ..LabConfig::default()
            },
            ..ExperimentConfig::default()
        };
        let strip_timing = |s: &str| -> String {
            s.lines()
                .map(|l| {
                    if l.starts_with('#') || l.starts_with("curve") {
                        l.to_string()
                    } else {
                        l.rsplit_once(',')
                            .map(|(head, _)| head.to_string())
                            .unwrap_or_default()
                    }
                })
                .collect::<Vec<_>>()
                .join("\n")
        };
        let mut outputs = Vec::new();
        for workers in [1usize, 4] {
            let out = tmp_dir(&format!("ratio-w{workers}"));
            let opts = RunOptions {
                out_dir: out.clone(),
                workers: Some(workers),
                ..RunOptions::default()
            };
            let paths = run(Subcommand::Ratio, cfg.clone(), &opts).unwrap();
            outputs.push(strip_timing(&std::fs::read_to_string(&paths[0]).unwrap()));
        }
        assert_eq!(outputs[0], outputs[1]);
    }

    #[test]
    fn scan_emits_csv_rows_and_slope_summary() {
        let out = tmp_dir("scan");
        let opts = RunOptions {
            out_dir: out.clone(),
            ..RunOptions::default()
        };
        let cfg = ExperimentConfig {
            deltas: (4..=7).map(|k| 2f64.powi(-k)).collect(),
            ps: vec![6.0],
            search: crate::config::SearchConfig {
                budget: 40,
                ..Default::default()
            },
            grid: LabConfig {
                max_field_points: 150_000,
                ..LabConfig::default()
            },
            ..ExperimentConfig::default()
        };
        let paths = run(Subcommand::Scan, cfg, &opts).unwrap();
        let csv = std::fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(csv.lines().count(), 2 + 4); // header comment + columns + 4 deltas
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&paths[1]).unwrap()).unwrap();
        let slope = summary["slopes"][0]["slope"].as_f64().unwrap();
        assert!(slope.is_finite());
        // Well below the trivial-bound growth of 1/4 even at a tiny budget.
        assert!(slope < 0.25);
    }

    #[test]
    fn expsum_csv_has_expected_columns() {
        let out = tmp_dir("expsum");
        let opts = RunOptions {
            out_dir: out.clone(),
            ..RunOptions::default()
        };
        let cfg = ExperimentConfig {
            expsum: crate::config::ExpsumConfig {
                n_values: vec![2, 4],
                ..Default::default()
            },
            grid: LabConfig {
                max_field_points: 200_000,
                ..LabConfig::default()
            },
            ..ExperimentConfig::default()
        };
        let paths = run(Subcommand::Expsum, cfg, &opts).unwrap();
        let body = std::fs::read_to_string(&paths[0]).unwrap();
        assert!(body.contains("N,R,ratio,l6avg,l2norm,runtime"));
        assert_eq!(body.lines().count(), 4);
    }
}
