//! Runtime tuning knobs and the JSON experiment configuration.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Numerical tuning knobs shared by the field, norm, and ratio machinery.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct LabConfig {
    /// Decay exponent of the localizing weight (1 + |T_R(x - x0)|)^(-E).
    pub weight_exponent: i32,
    /// Weight values below this fraction of the peak are outside the
    /// evaluation window; the omitted tail carries ~1e-9 of the mass.
    pub weight_cutoff: f64,
    /// Hard ceiling on the evaluation window, as a multiple of the
    /// rectangle. The weight mass beyond lambda*R is far below double
    /// precision.
    pub lambda: f64,
    /// Spatial samples per unit of frequency extent (field band limit).
    pub samples_per_freq: f64,
    /// Additional step bound: h <= side / weight_res_divisor, so the grid
    /// also resolves the weight's own scale.
    pub weight_res_divisor: f64,
    /// Budget for one field grid; default windows shrink to fit it.
    pub max_field_points: usize,
    /// Budget for oscillatory quadrature nodes per interval.
    pub nq_max: usize,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            weight_exponent: 200,
            weight_cutoff: 1e-12,
            lambda: 4.0,
            samples_per_freq: 4.0,
            weight_res_divisor: 512.0,
            max_field_points: 2_000_000,
            nq_max: 1 << 21,
        }
    }
}

impl LabConfig {
    /// Radius of the evaluation window in weight-normalized coordinates:
    /// where the weight falls to `weight_cutoff`, capped at lambda/2.
    pub fn window_radius(&self) -> f64 {
        let s = (1.0 / self.weight_cutoff).powf(1.0 / self.weight_exponent as f64) - 1.0;
        s.min(self.lambda / 2.0)
    }
}

/// Curve specification as it appears in experiment configs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CurveSpec {
    Model {
        nu: f64,
    },
    Graph {
        expr: String,
        #[serde(default)]
        singular_set: Vec<f64>,
    },
    Param {
        expr1: String,
        expr2: String,
    },
}

impl CurveSpec {
    pub fn build_graph(&self) -> Result<crate::curve::GraphCurve> {
        match self {
            CurveSpec::Model { nu } => {
                if nu.is_nan() || *nu <= 0.0 {
                    return Err(Error::Config(format!(
                        "model nu must be positive, got {nu}"
                    )));
                }
                Ok(crate::curve::GraphCurve::model(*nu))
            }
            CurveSpec::Graph { expr, singular_set } => {
                crate::curve::GraphCurve::from_expr("graph-expr", expr, singular_set.clone())
            }
            CurveSpec::Param { expr1, expr2 } => {
                let p = crate::curve::ParamCurve::from_exprs("param-expr", expr1, expr2)?;
                crate::curve::reparametrize_to_graph(&p, crate::partition::Interval::new(0.0, 1.0))
            }
        }
    }
}

/// Extremizer search strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Constant,
    RandomPhase,
    RandomSign,
    SingleCell,
    CoordinateAscent,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Constant => "constant",
            Strategy::RandomPhase => "random_phase",
            Strategy::RandomSign => "random_sign",
            Strategy::SingleCell => "single_cell",
            Strategy::CoordinateAscent => "coordinate_ascent",
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Strategy::RandomPhase | Strategy::RandomSign)
    }
}

/// Point placement presets for exponential-sum experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Lattice,
    Random,
    Perturbed,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SearchConfig {
    pub strategies: Vec<Strategy>,
    pub budget: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            strategies: vec![
                Strategy::Constant,
                Strategy::SingleCell,
                Strategy::RandomPhase,
                Strategy::RandomSign,
                Strategy::CoordinateAscent,
            ],
            budget: 500,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ExpsumConfig {
    pub n_values: Vec<usize>,
    pub points: PointKind,
    /// Ball radius R; if absent, R = N^r with r from curve analysis.
    pub radius: Option<f64>,
    pub seed: u64,
}

impl Default for ExpsumConfig {
    fn default() -> Self {
        ExpsumConfig {
            n_values: vec![8, 16, 32],
            points: PointKind::Lattice,
            radius: None,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct RescaleScanConfig {
    /// a = delta^a_exponent for each delta in the scan.
    pub a_exponent: f64,
    pub beta: Option<f64>,
}

impl Default for RescaleScanConfig {
    fn default() -> Self {
        RescaleScanConfig {
            a_exponent: 0.4,
            beta: None,
        }
    }
}

/// The experiment configuration file (JSON).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ExperimentConfig {
    pub curve: CurveSpec,
    pub deltas: Vec<f64>,
    pub ps: Vec<f64>,
    pub epsilon: f64,
    /// Hölder exponent assumed for the curve; beta defaults to
    /// min(alpha, epsilon).
    pub alpha: f64,
    pub grid: LabConfig,
    pub search: SearchConfig,
    pub expsum: ExpsumConfig,
    pub rescale: RescaleScanConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            curve: CurveSpec::Model { nu: 1.0 },
            deltas: vec![
                2f64.powi(-4),
                2f64.powi(-5),
                2f64.powi(-6),
                2f64.powi(-7),
                2f64.powi(-8),
            ],
            ps: vec![2.0, 4.0, 6.0],
            epsilon: 0.125,
            alpha: 1.0,
            grid: LabConfig::default(),
            search: SearchConfig::default(),
            expsum: ExpsumConfig::default(),
            rescale: RescaleScanConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(src: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            serde_json::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        for &d in &self.deltas {
            if !(d > 0.0 && d <= 0.25) {
                return Err(Error::Config(format!("delta must be in (0, 1/4], got {d}")));
            }
        }
        if self.deltas.is_empty() {
            return Err(Error::Config("deltas must be nonempty".into()));
        }
        for &p in &self.ps {
            if !(2.0..=6.0).contains(&p) {
                return Err(Error::Config(format!("p must be in [2, 6], got {p}")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::Config(format!(
                "epsilon must be in (0, 1/2), got {}",
                self.epsilon
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.grid.weight_exponent < 4 {
            return Err(Error::Config("weight_exponent must be at least 4".into()));
        }
        if !(self.grid.weight_cutoff > 0.0 && self.grid.weight_cutoff < 1.0) {
            return Err(Error::Config("weight_cutoff must be in (0, 1)".into()));
        }
        Ok(())
    }

    /// The beta(epsilon) rule used by scans: beta = min(alpha, epsilon).
    pub fn beta(&self) -> f64 {
        self.rescale.beta.unwrap_or(self.alpha.min(self.epsilon))
    }

    /// FNV-1a hash of the canonical JSON, embedded in artifacts.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in canon.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}
