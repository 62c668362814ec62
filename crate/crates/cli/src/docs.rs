//! Document schemas and parsers for the command-line surface: run
//! configuration, gain specifications, scenario files, sweep axes, and the
//! emitted result documents.
//!
//! Config files are flat key-value JSON; results are JSON; time series are
//! CSV with a one-line header.

use serde::{Deserialize, Serialize};

use platoon_hinf::model::{Gains, StabilityReport, VehicleParams};
use platoon_hinf::norms::ScanConfig;
use platoon_hinf::param::BoxBounds;
use platoon_hinf::sim::{LeaderProfile, PlatoonScenario, VehicleKind, VehicleSpec};
use platoon_hinf::synthesis::{Stage1Mode, SynthesisConfig, SynthesisResult};

/// A document failed to parse or validate.
#[derive(Debug)]
pub struct DocError(pub String);

impl std::fmt::Display for DocError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for DocError {}

fn default_tau() -> f64 {
    1.0
}
fn default_t_lag() -> f64 {
    0.45
}
fn default_k_ratio() -> f64 {
    1.0
}
fn default_theta() -> f64 {
    0.1
}
fn default_omega1() -> f64 {
    0.5
}
fn default_omega2() -> f64 {
    2.5
}
fn default_bound_lower() -> [f64; 4] {
    [0.0, -1.32, -1.32, -1.32]
}
fn default_bound_upper() -> [f64; 4] {
    [1.32; 4]
}
fn default_alpha() -> f64 {
    1.05
}
fn default_squash() -> f64 {
    5.0
}
fn default_epsilon() -> f64 {
    1e-9
}
fn default_pade_order() -> usize {
    5
}
fn default_eps_ss() -> f64 {
    1e-3
}
fn default_stage1_mode() -> Stage1Mode {
    Stage1Mode::Optimize
}
fn default_stage1_starts() -> usize {
    8
}
fn default_sample_count() -> usize {
    10_000
}
fn default_kappa_max() -> f64 {
    3.0
}
fn default_max_iters() -> usize {
    2000
}
fn default_opt_tol() -> f64 {
    1e-10
}
fn default_restarts() -> usize {
    1
}
fn default_grid_points() -> usize {
    4000
}

/// Flat run configuration; every key is optional and defaults to the
/// benchmark setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_t_lag")]
    pub t_lag: f64,
    #[serde(default = "default_k_ratio")]
    pub k_ratio: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_omega1")]
    pub omega1: f64,
    #[serde(default = "default_omega2")]
    pub omega2: f64,
    #[serde(default = "default_bound_lower")]
    pub k_lower: [f64; 4],
    #[serde(default = "default_bound_upper")]
    pub k_upper: [f64; 4],
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_squash")]
    pub zeta: f64,
    #[serde(default = "default_squash")]
    pub nu: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_pade_order")]
    pub pade_order: usize,
    #[serde(default = "default_eps_ss")]
    pub eps_ss: f64,
    #[serde(default = "default_stage1_mode")]
    pub stage1_mode: Stage1Mode,
    #[serde(default = "default_stage1_starts")]
    pub stage1_starts: usize,
    #[serde(default = "default_sample_count")]
    pub sample_count: usize,
    #[serde(default = "default_kappa_max")]
    pub kappa_max: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_opt_tol")]
    pub x_tol: f64,
    #[serde(default = "default_opt_tol")]
    pub f_tol: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

impl RunConfig {
    /// Builds the synthesis configuration, validating plant and box values.
    /// Infeasible boxes keep their error class so callers can report it.
    pub fn to_synthesis_config(
        &self,
        threads: usize,
    ) -> Result<SynthesisConfig, platoon_hinf::Error> {
        let params = VehicleParams::new(self.tau, self.t_lag, self.k_ratio, self.theta)?;
        let bounds = BoxBounds::new(self.k_lower, self.k_upper)?;
        let mut cfg = SynthesisConfig::new(params, bounds);
        cfg.omega1 = self.omega1;
        cfg.omega2 = self.omega2;
        cfg.alpha = self.alpha;
        cfg.zeta = self.zeta;
        cfg.nu = self.nu;
        cfg.epsilon = self.epsilon;
        cfg.pade_order = self.pade_order;
        cfg.eps_ss = self.eps_ss;
        cfg.stage1_mode = self.stage1_mode;
        cfg.stage1_starts = self.stage1_starts;
        cfg.sample_count = self.sample_count;
        cfg.kappa_max = self.kappa_max;
        cfg.seed = self.seed;
        cfg.optimizer.max_iters = self.max_iters;
        cfg.optimizer.x_tol = self.x_tol;
        cfg.optimizer.f_tol = self.f_tol;
        cfg.optimizer.restarts = self.restarts;
        cfg.scan = ScanConfig {
            grid_points: self.grid_points,
            ..ScanConfig::default()
        };
        cfg.threads = threads;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses a flat key-value JSON run configuration.
pub fn parse_run_config(text: &str) -> Result<RunConfig, DocError> {
    serde_json::from_str(text).map_err(|e| DocError(format!("config: {e}")))
}

/// Parses an inline gain vector `"k1,k2,k3,k4"`.
pub fn parse_gains_inline(text: &str) -> Result<Gains, DocError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(DocError(format!(
            "expected four comma-separated gains, got {}",
            parts.len()
        )));
    }
    let mut values = [0.0; 4];
    for (v, part) in values.iter_mut().zip(&parts) {
        *v = part
            .parse::<f64>()
            .map_err(|e| DocError(format!("gain value {part:?}: {e}")))?;
        if !v.is_finite() {
            return Err(DocError(format!("gain value {part:?} is not finite")));
        }
    }
    Ok(Gains::from_array(values))
}

/// Gain-file payload: either a bare array `[k1,k2,k3,k4]` or an object
/// `{"k1":..,"k2":..,"k3":..,"k4":..}`.
#[derive(Deserialize)]
#[serde(untagged)]
enum GainsDoc {
    Array([f64; 4]),
    Object { k1: f64, k2: f64, k3: f64, k4: f64 },
}

/// Parses a JSON gain file.
pub fn parse_gains_doc(text: &str) -> Result<Gains, DocError> {
    let doc: GainsDoc = serde_json::from_str(text).map_err(|e| DocError(format!("gains: {e}")))?;
    let g = match doc {
        GainsDoc::Array(a) => Gains::from_array(a),
        GainsDoc::Object { k1, k2, k3, k4 } => Gains::new(k1, k2, k3, k4),
    };
    if g.as_array().iter().any(|v| !v.is_finite()) {
        return Err(DocError("gains must be finite".into()));
    }
    Ok(g)
}

/// One vehicle of a scenario document; optional fields fall back to the
/// benchmark plant and the default gains of the kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleDoc {
    pub kind: VehicleKind,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub t_lag: Option<f64>,
    #[serde(default)]
    pub k_ratio: Option<f64>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub gains: Option<[f64; 4]>,
}

/// Scenario document: platoon, leader profile and integration setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub vehicles: Vec<VehicleDoc>,
    #[serde(default)]
    pub leader: Option<LeaderProfile>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub horizon: Option<f64>,
}

/// Default CAV gains: the published small-delay optimum.
const DEFAULT_CAV_GAINS: [f64; 4] = [0.4212, 0.4775, -1.0078, 1.3197];

impl ScenarioDoc {
    pub fn to_scenario(&self) -> Result<PlatoonScenario, DocError> {
        let mut vehicles = Vec::with_capacity(self.vehicles.len());
        for (i, v) in self.vehicles.iter().enumerate() {
            let defaults = match v.kind {
                VehicleKind::Cav => VehicleParams::default(),
                VehicleKind::Hdv => VehicleParams {
                    theta: 0.0,
                    ..VehicleParams::default()
                },
            };
            let params = VehicleParams::new(
                v.tau.unwrap_or(defaults.tau),
                v.t_lag.unwrap_or(defaults.t_lag),
                v.k_ratio.unwrap_or(defaults.k_ratio),
                v.theta.unwrap_or(defaults.theta),
            )
            .map_err(|e| DocError(format!("vehicle {}: {e}", i + 1)))?;
            let gains = v
                .gains
                .map(Gains::from_array)
                .unwrap_or_else(|| match v.kind {
                    VehicleKind::Cav => Gains::from_array(DEFAULT_CAV_GAINS),
                    VehicleKind::Hdv => platoon_hinf::sim::VehicleSpec::default_hdv().gains,
                });
            vehicles.push(VehicleSpec {
                kind: v.kind,
                params,
                gains,
            });
        }
        let leader = self
            .leader
            .clone()
            .unwrap_or_else(platoon_hinf::sim::default_stop_and_go);
        let dt = self
            .dt
            .unwrap_or_else(|| PlatoonScenario::default_dt(&vehicles));
        let horizon = self.horizon.unwrap_or(80.0);
        let scenario = PlatoonScenario {
            vehicles,
            leader,
            dt,
            horizon,
        };
        scenario.validate().map_err(|e| DocError(e.to_string()))?;
        Ok(scenario)
    }
}

/// Parses a scenario document (without running the dynamics validation).
pub fn parse_scenario(text: &str) -> Result<ScenarioDoc, DocError> {
    serde_json::from_str(text).map_err(|e| DocError(format!("scenario: {e}")))
}

/// One sweep axis `"index:min:max:count"` with the axis index in 1..=4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub axis: usize,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Parses a sweep axis specification.
pub fn parse_axis_spec(text: &str) -> Result<AxisSpec, DocError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(DocError(format!(
            "axis {text:?}: expected index:min:max:count"
        )));
    }
    let axis: usize = parts[0]
        .trim()
        .parse()
        .map_err(|e| DocError(format!("axis index {:?}: {e}", parts[0])))?;
    if !(1..=4).contains(&axis) {
        return Err(DocError(format!("axis index {axis} out of range 1..=4")));
    }
    let min: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| DocError(format!("axis min {:?}: {e}", parts[1])))?;
    let max: f64 = parts[2]
        .trim()
        .parse()
        .map_err(|e| DocError(format!("axis max {:?}: {e}", parts[2])))?;
    let count: usize = parts[3]
        .trim()
        .parse()
        .map_err(|e| DocError(format!("axis count {:?}: {e}", parts[3])))?;
    if !min.is_finite() || !max.is_finite() || min > max {
        return Err(DocError(format!("axis range [{min}, {max}] is invalid")));
    }
    if count == 0 {
        return Err(DocError("axis count must be >= 1".into()));
    }
    Ok(AxisSpec {
        axis,
        min,
        max,
        count,
    })
}

/// Document header; the timestamp is the only field allowed to differ
/// between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub generated_unix_ms: u128,
}

impl Header {
    pub fn now() -> Self {
        Self {
            tool: "platoon-hinf".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            generated_unix_ms: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
        }
    }
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Synthesis result document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDoc {
    pub header: Header,
    pub feasible: bool,
    pub k_star: [f64; 4],
    pub kappa_star: [f64; 4],
    pub kappa0: [f64; 4],
    pub k0: [f64; 4],
    pub mu0: Option<[f64; 4]>,
    pub banded_norm: f64,
    pub banded_omega_star: f64,
    /// `null` when the exact-model tail check failed (non-finite norm).
    pub global_norm: Option<f64>,
    pub margins: [f64; 4],
    pub hurwitz: bool,
    pub eigenvalues: [[f64; 2]; 3],
    pub stage1_mode: Stage1Mode,
    pub stage1_used: usize,
    pub stage1_best_norm: Option<f64>,
    pub stage2_iterations: usize,
    pub stage2_evaluations: usize,
    pub objective_initial: f64,
    pub objective_final: f64,
    pub seed: u64,
}

impl ResultDoc {
    pub fn new(r: &SynthesisResult, mode: Stage1Mode, seed: u64) -> Self {
        Self {
            header: Header::now(),
            feasible: r.feasible,
            k_star: r.k_star.as_array(),
            kappa_star: r.kappa_star.0,
            kappa0: r.kappa0.0,
            k0: r.k0.as_array(),
            mu0: r.mu0.map(|m| m.0),
            banded_norm: r.banded_norm,
            banded_omega_star: r.banded_omega_star,
            global_norm: finite_or_none(r.global_norm),
            margins: r.stability.margins,
            hurwitz: r.stability.hurwitz,
            eigenvalues: r.stability.eigenvalues.map(|(re, im)| [re, im]),
            stage1_mode: mode,
            stage1_used: r.diagnostics.stage1_used,
            stage1_best_norm: finite_or_none(r.diagnostics.stage1_best_norm),
            stage2_iterations: r.diagnostics.stage2_iterations,
            stage2_evaluations: r.diagnostics.stage2_evaluations,
            objective_initial: r.diagnostics.objective_initial,
            objective_final: r.diagnostics.objective_final,
            seed,
        }
    }
}

/// Gain-verification report document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyDoc {
    pub header: Header,
    pub gains: [f64; 4],
    pub margins: [f64; 4],
    pub hurwitz: bool,
    pub eigenvalues: [[f64; 2]; 3],
    pub eta: f64,
    /// `null` when undefined (zero spacing gain).
    pub zero_frequency_curvature: Option<f64>,
    pub taylor_p: f64,
    pub taylor_q: f64,
    pub taylor_r: f64,
    pub taylor_case1_ok: bool,
    pub taylor_case2_ok: bool,
    /// Norms are reported only for locally stable gains.
    pub banded_norm: Option<f64>,
    pub banded_omega_star: Option<f64>,
    pub global_norm: Option<f64>,
    pub string_stable: Option<bool>,
    pub verdict: String,
}

impl VerifyDoc {
    pub fn stability_fields(&mut self, report: &StabilityReport) {
        self.margins = report.margins;
        self.hurwitz = report.hurwitz;
        self.eigenvalues = report.eigenvalues.map(|(re, im)| [re, im]);
    }
}

/// Sweep grid document (JSON form).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDoc {
    pub header: Header,
    pub center: [f64; 4],
    pub axes: Vec<AxisSpec>,
    /// Branch-objective values in row-major order (last axis fastest).
    pub values: Vec<f64>,
}

/// Approximation-error series document (JSON form).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PadeErrorDoc {
    pub header: Header,
    pub gains: [f64; 4],
    pub theta: f64,
    pub pade_order: usize,
    pub omega: Vec<f64>,
    pub taylor_pct: Vec<f64>,
    pub pade_pct: Vec<f64>,
    pub max_abs_taylor_pct: f64,
    pub max_abs_pade_pct: f64,
}

/// Serializes any document as pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("serializable document");
    s.push('\n');
    s
}
