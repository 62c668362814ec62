//! Implementations of the five subcommands. Each returns the document text
//! to emit plus the process exit code; I/O stays in `main`.

use platoon_hinf::model::{
    local_stability, string_stability_eta, taylor_string_stability, zero_frequency_curvature,
    DelayTF, Gains,
};
use platoon_hinf::norms::{hinf_global, peak_on_band, GlobalConfig};
use platoon_hinf::pade::approx_tf;
use platoon_hinf::param::KappaVector;
use platoon_hinf::sim::{amplification_report, simulate, PlatoonScenario, Trajectory};
use platoon_hinf::synthesis::{branch_objective, synthesize};

use crate::docs::{
    to_json, AxisSpec, DocError, Header, PadeErrorDoc, ResultDoc, RunConfig, SweepDoc, VerifyDoc,
};

/// Exit codes: 0 feasible/ok, 2 infeasible or failed synthesis, 1 usage or
/// parse error.
pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;

/// A failed command: machine-readable class, message, and exit code.
#[derive(Debug)]
pub struct CmdError {
    pub class: &'static str,
    pub message: String,
    pub exit: u8,
}

impl CmdError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            class: "ParseError",
            message: message.into(),
            exit: EXIT_USAGE,
        }
    }

    /// JSON error document for the output sink.
    pub fn document(&self) -> String {
        to_json(&serde_json::json!({
            "error": { "class": self.class, "message": self.message }
        }))
    }
}

impl From<DocError> for CmdError {
    fn from(e: DocError) -> Self {
        CmdError::usage(e.0)
    }
}

impl From<platoon_hinf::Error> for CmdError {
    fn from(e: platoon_hinf::Error) -> Self {
        use platoon_hinf::Error::*;
        let (class, exit) = match &e {
            InvalidArgument(_) => ("InvalidArgument", EXIT_USAGE),
            NonHurwitz { .. } => ("NonHurwitz", EXIT_INFEASIBLE),
            InfeasibleBox(_) => ("InfeasibleBox", EXIT_INFEASIBLE),
            NotInManifold { .. } => ("NotInManifold", EXIT_INFEASIBLE),
            Stage1Failed { .. } => ("Stage1Failed", EXIT_INFEASIBLE),
            Internal(_) => ("Internal", EXIT_INFEASIBLE),
        };
        Self {
            class,
            message: e.to_string(),
            exit,
        }
    }
}

pub type CmdResult = Result<(String, u8), CmdError>;

/// Runs the two-stage synthesis and emits the result document; exit 0 only
/// for a certified-feasible result.
pub fn cmd_synth(config: &RunConfig, seed: Option<u64>, threads: usize) -> CmdResult {
    let mut config = config.clone();
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let cfg = config.to_synthesis_config(threads)?;
    let result = synthesize(&cfg)?;
    let doc = ResultDoc::new(&result, cfg.stage1_mode, cfg.seed);
    if result.feasible {
        Ok((to_json(&doc), EXIT_OK))
    } else {
        // surrogate-feasible but exact-infeasible: report, do not error
        Err(CmdError {
            class: "CertificationFailed",
            message: format!(
                "synthesis result failed exact-model certification: {}",
                to_json(&doc).trim_end()
            ),
            exit: EXIT_INFEASIBLE,
        })
    }
}

/// Evaluates stability margins, eigenvalues, string-stability indicators and
/// (for locally stable gains) the banded and global peak norms.
pub fn cmd_verify(config: &RunConfig, gains: Gains, threads: usize) -> CmdResult {
    let cfg = config.to_synthesis_config(threads)?;
    let p = &cfg.params;
    let report = local_stability(p, &gains);
    let taylor = taylor_string_stability(p, &gains);
    let mut doc = VerifyDoc {
        header: Header::now(),
        gains: gains.as_array(),
        margins: [0.0; 4],
        hurwitz: false,
        eigenvalues: [[0.0; 2]; 3],
        eta: string_stability_eta(p, &gains),
        zero_frequency_curvature: {
            let c = zero_frequency_curvature(p, &gains);
            c.is_finite().then_some(c)
        },
        taylor_p: taylor.p,
        taylor_q: taylor.q,
        taylor_r: taylor.r,
        taylor_case1_ok: taylor.case1_ok,
        taylor_case2_ok: taylor.case2_ok,
        banded_norm: None,
        banded_omega_star: None,
        global_norm: None,
        string_stable: None,
        verdict: String::new(),
    };
    doc.stability_fields(&report);
    if report.hurwitz {
        let tf = DelayTF::from_gains(p, &gains);
        let mag = move |w: f64| tf.exact_magnitude(w).unwrap_or(f64::INFINITY);
        let banded = peak_on_band(mag, cfg.omega1, cfg.omega2, &cfg.scan)?;
        let global = hinf_global(
            mag,
            &GlobalConfig::for_plant(p, cfg.omega2).with_scan(cfg.scan),
        )?;
        let stable = global.peak <= 1.0 + cfg.eps_ss;
        doc.banded_norm = Some(banded.peak);
        doc.banded_omega_star = Some(banded.omega_star);
        doc.global_norm = Some(global.peak);
        doc.string_stable = Some(stable);
        doc.verdict = if stable {
            "string-stable".into()
        } else {
            "string-unstable".into()
        };
    } else {
        doc.verdict = "locally-unstable".into();
    }
    Ok((to_json(&doc), EXIT_OK))
}

const MAX_SWEEP_CELLS: usize = 10_000_000;

/// Evaluates the branch objective over a 1-3 axis grid around a center
/// point (default: a fresh synthesis optimum).
pub fn cmd_sweep(
    config: &RunConfig,
    axes: &[AxisSpec],
    center: Option<[f64; 4]>,
    seed: Option<u64>,
    format: OutputFormat,
    threads: usize,
) -> CmdResult {
    if axes.is_empty() || axes.len() > 3 {
        return Err(CmdError::usage(format!(
            "need 1 to 3 axes, got {}",
            axes.len()
        )));
    }
    let mut seen = [false; 4];
    let mut cells = 1usize;
    for a in axes {
        if seen[a.axis - 1] {
            return Err(CmdError::usage(format!("axis {} specified twice", a.axis)));
        }
        seen[a.axis - 1] = true;
        cells = cells.saturating_mul(a.count);
    }
    if cells > MAX_SWEEP_CELLS {
        return Err(CmdError::usage(format!(
            "grid of {cells} cells exceeds the {MAX_SWEEP_CELLS} limit"
        )));
    }
    let mut config = config.clone();
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let cfg = config.to_synthesis_config(threads)?;
    let center = match center {
        Some(c) => c,
        None => synthesize(&cfg)?.kappa_star.0,
    };

    let mut values = Vec::with_capacity(cells);
    let mut points = Vec::with_capacity(cells);
    let mut index = vec![0usize; axes.len()];
    loop {
        let mut kappa = center;
        for (a, &i) in axes.iter().zip(&index) {
            let t = if a.count == 1 {
                0.0
            } else {
                i as f64 / (a.count - 1) as f64
            };
            kappa[a.axis - 1] = a.min + (a.max - a.min) * t;
        }
        values.push(branch_objective(&KappaVector(kappa), &cfg));
        points.push(kappa);
        // odometer increment, last axis fastest
        let mut carry = axes.len();
        while carry > 0 {
            index[carry - 1] += 1;
            if index[carry - 1] < axes[carry - 1].count {
                break;
            }
            index[carry - 1] = 0;
            carry -= 1;
        }
        if carry == 0 {
            break;
        }
    }

    match format {
        OutputFormat::Json => {
            let doc = SweepDoc {
                header: Header::now(),
                center,
                axes: axes.to_vec(),
                values,
            };
            Ok((to_json(&doc), EXIT_OK))
        }
        OutputFormat::Csv => {
            let mut out = String::from("kappa1,kappa2,kappa3,kappa4,objective\n");
            for (kappa, value) in points.iter().zip(&values) {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    kappa[0], kappa[1], kappa[2], kappa[3], value
                ));
            }
            Ok((out, EXIT_OK))
        }
    }
}

/// Relative-error series of the truncated-series and rational delay
/// approximations against the exact magnitude on the plotting band.
pub fn cmd_pade_error(
    config: &RunConfig,
    gains: Gains,
    points: usize,
    format: OutputFormat,
    threads: usize,
) -> CmdResult {
    let cfg = config.to_synthesis_config(threads)?;
    let tf = DelayTF::from_gains(&cfg.params, &gains);
    let rt = approx_tf(&tf, cfg.pade_order)?;
    let (lo, hi) = (0.01, 5.01);
    let n = points.max(2);
    let mut omega = Vec::with_capacity(n);
    let mut taylor_pct = Vec::with_capacity(n);
    let mut pade_pct = Vec::with_capacity(n);
    for i in 0..n {
        let w = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let exact = tf.exact_magnitude(w)?;
        omega.push(w);
        taylor_pct.push(100.0 * (exact - tf.taylor_magnitude(w)?) / exact);
        pade_pct.push(100.0 * (exact - rt.magnitude(w)?) / exact);
    }
    let max_abs = |s: &[f64]| s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    match format {
        OutputFormat::Json => {
            let doc = PadeErrorDoc {
                header: Header::now(),
                gains: gains.as_array(),
                theta: cfg.params.theta,
                pade_order: cfg.pade_order,
                max_abs_taylor_pct: max_abs(&taylor_pct),
                max_abs_pade_pct: max_abs(&pade_pct),
                omega,
                taylor_pct,
                pade_pct,
            };
            Ok((to_json(&doc), EXIT_OK))
        }
        OutputFormat::Csv => {
            let mut out = String::from("omega,taylor_pct,pade_pct\n");
            for i in 0..n {
                out.push_str(&format!("{},{},{}\n", omega[i], taylor_pct[i], pade_pct[i]));
            }
            Ok((out, EXIT_OK))
        }
    }
}

/// Time-series CSV: `t`, then `sigma_i, dv_i, a_i` per vehicle.
pub fn trajectory_csv(tr: &Trajectory) -> String {
    let mut header = String::from("t");
    for i in 1..=tr.vehicles.len() {
        header.push_str(&format!(",sigma_{i},dv_{i},a_{i}"));
    }
    header.push('\n');
    let mut out = header;
    for (row, t) in tr.times.iter().enumerate() {
        out.push_str(&format!("{t}"));
        for v in &tr.vehicles {
            out.push_str(&format!(",{},{},{}", v.sigma[row], v.dv[row], v.accel[row]));
        }
        out.push('\n');
    }
    out
}

/// Runs a scenario; returns the trajectory CSV and the amplification report
/// JSON.
pub fn cmd_simulate(scenario: &PlatoonScenario) -> Result<(String, String), CmdError> {
    let tr = simulate(scenario)?;
    let report = amplification_report(&tr);
    let report_doc = to_json(&serde_json::json!({
        "header": Header::now(),
        "window_start": tr.window_start,
        "leader_l2": tr.leader_l2,
        "leader_peak": tr.leader_peak,
        "vehicle_l2": tr.vehicles.iter().map(|v| v.l2_accel).collect::<Vec<_>>(),
        "vehicle_peak": tr.vehicles.iter().map(|v| v.peak_accel).collect::<Vec<_>>(),
        "leader_link": report.leader_link,
        "links": report.links,
        "attenuating": report.attenuating,
    }));
    Ok((trajectory_csv(&tr), report_doc))
}

/// Output format for series and grid documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}
