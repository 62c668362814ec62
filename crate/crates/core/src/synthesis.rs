//! Two-stage banded-peak-gain synthesis.
//!
//! Stage 1 finds a string-stable starting point: either by minimizing the
//! global peak of the rational approximant over the box-interpolating chart
//! (multi-start simplex), or by rejection sampling in the constrained chart.
//! Stage 2 minimizes the banded peak subject to the global-peak constraint
//! through a branch objective, then the result is certified against the
//! exact delay model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{local_stability, DelayTF, Gains, StabilityReport, VehicleParams};
use crate::norms::{hinf_global, peak_on_band, GlobalConfig, ScanConfig};
use crate::optimize::{nelder_mead, run_starts, OptimResult, OptimizerOptions};
use crate::pade::approx_tf;
use crate::param::{
    box_interp_gains, constrained_gains, extract_kappa, BoxBounds, KappaVector, MuVector,
};

/// How stage 1 produces its starting point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage1Mode {
    /// Multi-start simplex on the global peak of the box-interpolated
    /// surrogate.
    Optimize,
    /// Uniform sampling of the constrained chart, keeping the best feasible
    /// draw.
    Sample,
}

/// All tunables of the synthesis procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub params: VehicleParams,
    pub bounds: BoxBounds,
    /// Lower edge of the minimized band (rad/s).
    pub omega1: f64,
    /// Upper edge of the minimized band (rad/s).
    pub omega2: f64,
    /// Penalty value returned by the branch objective outside the feasible
    /// set; must exceed 1.
    pub alpha: f64,
    /// Logistic growth rate of the sigmoid squash.
    pub zeta: f64,
    /// Curvature of the rational squash.
    pub nu: f64,
    /// Strict-inequality margin of the chart.
    pub epsilon: f64,
    /// Order of the delay approximant.
    pub pade_order: usize,
    /// Slack on the global-peak constraint: feasible designs sit exactly on
    /// the unit boundary, so a strict numeric `<= 1` would reject nearly
    /// everything.
    pub eps_ss: f64,
    pub stage1_mode: Stage1Mode,
    /// Simplex starts in optimize mode.
    pub stage1_starts: usize,
    /// Draws in sample mode.
    pub sample_count: usize,
    /// Sample box half-width in the unconstrained chart.
    pub kappa_max: f64,
    pub seed: u64,
    pub optimizer: OptimizerOptions,
    pub scan: ScanConfig,
    /// Worker threads for the multi-start stage.
    pub threads: usize,
}

impl SynthesisConfig {
    pub fn new(params: VehicleParams, bounds: BoxBounds) -> Self {
        Self {
            params,
            bounds,
            omega1: 0.5,
            omega2: 2.5,
            alpha: 1.05,
            zeta: 5.0,
            nu: 5.0,
            epsilon: 1e-9,
            pade_order: 5,
            eps_ss: 1e-3,
            stage1_mode: Stage1Mode::Optimize,
            stage1_starts: 8,
            sample_count: 10_000,
            kappa_max: 3.0,
            seed: 0,
            optimizer: OptimizerOptions::default(),
            scan: ScanConfig::default(),
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega1 > 0.0 && self.omega2 > self.omega1) {
            return Err(Error::InvalidArgument(format!(
                "band must satisfy 0 < omega1 < omega2, got [{}, {}]",
                self.omega1, self.omega2
            )));
        }
        if !(self.alpha > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be > 1, got {}",
                self.alpha
            )));
        }
        if self.pade_order == 0 {
            return Err(Error::InvalidArgument("pade_order must be >= 1".into()));
        }
        if !(self.zeta > 0.0) || !(self.nu > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(
                "zeta, nu and epsilon must be > 0".into(),
            ));
        }
        if !(self.eps_ss >= 0.0) {
            return Err(Error::InvalidArgument("eps_ss must be >= 0".into()));
        }
        self.optimizer.validate()
    }

    fn global_cfg(&self) -> GlobalConfig {
        GlobalConfig::for_plant(&self.params, self.omega2).with_scan(self.scan)
    }
}

/// Per-stage counters reported with the result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Starts consumed (optimize mode) or draws taken (sample mode).
    pub stage1_used: usize,
    /// Best surrogate global norm seen in stage 1.
    pub stage1_best_norm: f64,
    pub stage2_iterations: usize,
    pub stage2_evaluations: usize,
    /// Branch objective at the stage-1 point.
    pub objective_initial: f64,
    /// Branch objective at the returned point (surrogate model).
    pub objective_final: f64,
}

/// Output of the full procedure, certified on the exact delay model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub k_star: Gains,
    pub kappa_star: KappaVector,
    pub kappa0: KappaVector,
    pub k0: Gains,
    /// Stage-1 chart point (optimize mode only).
    pub mu0: Option<MuVector>,
    /// Banded peak of the exact magnitude at `k_star`.
    pub banded_norm: f64,
    /// Frequency of the banded peak.
    pub banded_omega_star: f64,
    /// Global peak of the exact magnitude at `k_star`.
    pub global_norm: f64,
    pub stability: StabilityReport,
    /// All certificates passed: Hurwitz, box containment, global peak within
    /// the string-stability slack.
    pub feasible: bool,
    pub diagnostics: Diagnostics,
}

/// Rational surrogate of the delay transfer function at the given gains.
fn surrogate(cfg: &SynthesisConfig, k: &Gains) -> crate::pade::RationalTF {
    let tf = DelayTF::from_gains(&cfg.params, k);
    approx_tf(&tf, cfg.pade_order).expect("validated pade order and theta")
}

/// Global peak of the surrogate magnitude; infeasibilities map to infinity.
fn surrogate_global(cfg: &SynthesisConfig, k: &Gains) -> f64 {
    let rt = surrogate(cfg, k);
    let mag = move |w: f64| rt.magnitude(w).unwrap_or(f64::INFINITY);
    match hinf_global(mag, &cfg.global_cfg()) {
        Ok(r) => r.peak,
        Err(_) => f64::INFINITY,
    }
}

/// Banded peak of the surrogate magnitude.
fn surrogate_banded(cfg: &SynthesisConfig, k: &Gains) -> f64 {
    let rt = surrogate(cfg, k);
    let mag = move |w: f64| rt.magnitude(w).unwrap_or(f64::INFINITY);
    match peak_on_band(mag, cfg.omega1, cfg.omega2, &cfg.scan) {
        Ok(r) => r.peak,
        Err(_) => f64::INFINITY,
    }
}

/// Feasibility and banded value of one chart point.
struct KappaEval {
    feasible: bool,
    banded: f64,
    global: f64,
}

fn eval_kappa(kappa: &KappaVector, cfg: &SynthesisConfig) -> Option<KappaEval> {
    let k = constrained_gains(kappa, &cfg.params, &cfg.bounds, cfg.zeta, cfg.epsilon).ok()?;
    let global = surrogate_global(cfg, &k);
    if global <= 1.0 + cfg.eps_ss {
        Some(KappaEval {
            feasible: true,
            banded: surrogate_banded(cfg, &k),
            global,
        })
    } else {
        Some(KappaEval {
            feasible: false,
            banded: f64::INFINITY,
            global,
        })
    }
}

/// Branch objective: the banded surrogate peak when the global-peak
/// constraint holds, the penalty `alpha` otherwise (including chart
/// infeasibilities). Total on all of `R^4`.
pub fn branch_objective(kappa: &KappaVector, cfg: &SynthesisConfig) -> f64 {
    match eval_kappa(kappa, cfg) {
        Some(e) if e.feasible => e.banded,
        _ => cfg.alpha,
    }
}

/// Stage-1 output in optimize mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Point {
    pub mu0: Option<MuVector>,
    pub k0: Gains,
    pub kappa0: KappaVector,
    /// Surrogate global norm at the accepted candidate.
    pub norm: f64,
    /// Starts or draws consumed.
    pub used: usize,
    /// Best surrogate global norm seen overall.
    pub best_norm: f64,
}

/// Minimizes the surrogate global peak over the box-interpolating chart by
/// multi-start simplex and accepts the first start (in index order) whose
/// result is string stable within the slack and extractable into the
/// constrained chart.
pub fn stage1_optimize(cfg: &SynthesisConfig) -> Result<Stage1Point> {
    cfg.validate()?;
    let objective = |x: &[f64]| {
        let mu = MuVector([x[0], x[1], x[2], x[3]]);
        surrogate_global(
            cfg,
            &box_interp_gains(&mu, &cfg.bounds, cfg.nu, cfg.epsilon),
        )
    };
    // draw all starting points up front so parallel chunking cannot affect
    // the sequence
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<Vec<f64>> = (0..cfg.stage1_starts)
        .map(|_| (0..4).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();

    let threads = cfg.threads.max(1);
    let mut best_norm = f64::INFINITY;
    let mut used = 0usize;
    let mut done = 0usize;
    while done < cfg.stage1_starts {
        let hi = (done + threads).min(cfg.stage1_starts);
        let batch: Vec<OptimResult> = run_starts(
            &objective,
            &|i| starts[i].clone(),
            done..hi,
            &cfg.optimizer,
            threads,
        )?;
        for r in &batch {
            used += 1;
            best_norm = best_norm.min(r.f);
            if r.f > 1.0 + cfg.eps_ss {
                continue;
            }
            let mu = MuVector([r.x[0], r.x[1], r.x[2], r.x[3]]);
            let k0 = box_interp_gains(&mu, &cfg.bounds, cfg.nu, cfg.epsilon);
            // candidates outside the constrained chart are rejected and the
            // search continues
            match extract_kappa(&k0, &cfg.params, &cfg.bounds, cfg.zeta, cfg.epsilon) {
                Ok(kappa0) => {
                    return Ok(Stage1Point {
                        mu0: Some(mu),
                        k0,
                        kappa0,
                        norm: r.f,
                        used,
                        best_norm,
                    });
                }
                Err(_) => continue,
            }
        }
        done = hi;
    }
    Err(Error::Stage1Failed { best_norm })
}

/// Uniform rejection sampling in the constrained chart: draws from
/// `[-kappa_max, kappa_max]^4`, keeps draws whose surrogate global peak is
/// within the slack, and returns the one with the smallest banded peak.
pub fn stage1_sample(cfg: &SynthesisConfig) -> Result<Stage1Point> {
    cfg.validate()?;
    if cfg.sample_count == 0 {
        return Err(Error::InvalidArgument("sample_count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(KappaVector, f64)> = None;
    let mut best_norm = f64::INFINITY;
    for _ in 0..cfg.sample_count {
        let kappa = KappaVector(std::array::from_fn(|_| {
            rng.gen_range(-cfg.kappa_max..=cfg.kappa_max)
        }));
        let Some(eval) = eval_kappa(&kappa, cfg) else {
            continue;
        };
        best_norm = best_norm.min(eval.global);
        if !eval.feasible {
            continue;
        }
        if best.as_ref().is_none_or(|(_, h)| eval.banded < *h) {
            best = Some((kappa, eval.banded));
        }
    }
    match best {
        Some((kappa0, _)) => {
            let k0 = constrained_gains(&kappa0, &cfg.params, &cfg.bounds, cfg.zeta, cfg.epsilon)?;
            let norm = surrogate_global(cfg, &k0);
            Ok(Stage1Point {
                mu0: None,
                k0,
                kappa0,
                norm,
                used: cfg.sample_count,
                best_norm,
            })
        }
        None => Err(Error::Stage1Failed { best_norm }),
    }
}

/// Runs the full two-stage procedure and certifies the result on the exact
/// delay model.
///
/// A result that fails certification (surrogate-feasible but exact-infeasible)
/// is returned with `feasible = false` rather than as an error.
pub fn synthesize(cfg: &SynthesisConfig) -> Result<SynthesisResult> {
    cfg.validate()?;
    let stage1 = match cfg.stage1_mode {
        Stage1Mode::Optimize => stage1_optimize(cfg)?,
        Stage1Mode::Sample => stage1_sample(cfg)?,
    };

    let objective_initial = branch_objective(&stage1.kappa0, cfg);
    let opt = nelder_mead(
        |x| branch_objective(&KappaVector([x[0], x[1], x[2], x[3]]), cfg),
        &stage1.kappa0.0,
        &cfg.optimizer,
    )?;
    let kappa_star = KappaVector([opt.x[0], opt.x[1], opt.x[2], opt.x[3]]);
    let k_star = constrained_gains(&kappa_star, &cfg.params, &cfg.bounds, cfg.zeta, cfg.epsilon)
        .map_err(|e| Error::Internal(format!("chart failed at the returned point: {e}")))?;

    // certify against the exact delay model, never the surrogate alone
    let tf = DelayTF::from_gains(&cfg.params, &k_star);
    let exact = move |w: f64| tf.exact_magnitude(w).unwrap_or(f64::INFINITY);
    let banded = peak_on_band(exact, cfg.omega1, cfg.omega2, &cfg.scan)?;
    let (global_norm, tail_ok) = match hinf_global(exact, &cfg.global_cfg()) {
        Ok(r) => (r.peak, true),
        Err(_) => (f64::INFINITY, false),
    };
    let stability = local_stability(&cfg.params, &k_star);
    let feasible = stability.hurwitz
        && cfg.bounds.contains(&k_star, 1e-12)
        && tail_ok
        && global_norm <= 1.0 + cfg.eps_ss;

    Ok(SynthesisResult {
        k_star,
        kappa_star,
        kappa0: stage1.kappa0,
        k0: stage1.k0,
        mu0: stage1.mu0,
        banded_norm: banded.peak,
        banded_omega_star: banded.omega_star,
        global_norm,
        stability,
        feasible,
        diagnostics: Diagnostics {
            stage1_used: stage1.used,
            stage1_best_norm: stage1.best_norm,
            stage2_iterations: opt.iterations,
            stage2_evaluations: opt.evaluations,
            objective_initial,
            objective_final: opt.f,
        },
    })
}
