//! Acceptance suite: one test per release criterion, each printing a single
//! PASS/FAIL line. Reference values that are deterministic are asserted at
//! their stated tolerances; optimizer-dependent criteria are property-based
//! over fixed seeds.

use std::time::Instant;

use platoon_hinf::model::{local_stability, string_stability_eta, DelayTF, Gains, VehicleParams};
use platoon_hinf::norms::{hinf_global, peak_on_band, GlobalConfig, ScanConfig};
use platoon_hinf::pade::{approx_tf, pade_exp};
use platoon_hinf::param::{
    box_interp_gains, constrained_gains, extract_kappa, BoxBounds, KappaVector, MuVector,
};
use platoon_hinf::sim::{
    amplification_report, default_stop_and_go, simulate, LeaderProfile, PlatoonScenario,
    VehicleSpec,
};
use platoon_hinf::synthesis::{synthesize, SynthesisConfig};

const ZETA: f64 = 5.0;
const NU: f64 = 5.0;
const EPS: f64 = 1e-9;

fn table_params() -> VehicleParams {
    VehicleParams::default()
}

fn k_unc() -> Gains {
    Gains::new(0.92, 1.32, -0.92, 0.72)
}

fn k_star_case1() -> Gains {
    Gains::new(0.4212, 0.4775, -1.0078, 1.3197)
}

fn k_star_case2() -> Gains {
    Gains::new(1.9696, 1.9953, -0.2273, 0.0234)
}

fn exact_mag(p: &VehicleParams, k: &Gains) -> impl Fn(f64) -> f64 {
    let tf = DelayTF::from_gains(p, k);
    move |w| tf.exact_magnitude(w).unwrap_or(f64::INFINITY)
}

fn case1_config(seed: u64) -> SynthesisConfig {
    let mut cfg = SynthesisConfig::new(table_params(), BoxBounds::symmetric(1.32).unwrap());
    cfg.seed = seed;
    cfg
}

fn case2_config(seed: u64) -> SynthesisConfig {
    let params = table_params().with_theta(1.5);
    let bounds = BoxBounds::new([0.0, -2.0, -2.0, -2.0], [2.0; 4]).unwrap();
    let mut cfg = SynthesisConfig::new(params, bounds);
    cfg.seed = seed;
    cfg
}

struct Criterion {
    number: usize,
    name: &'static str,
    started: Instant,
}

impl Criterion {
    fn new(number: usize, name: &'static str) -> Self {
        Self {
            number,
            name,
            started: Instant::now(),
        }
    }

    fn pass(&self, detail: &str) {
        println!(
            "acceptance {} ({}): PASS — {} [{:.2?}]",
            self.number,
            self.name,
            detail,
            self.started.elapsed()
        );
    }

    fn fail(&self, detail: &str) -> ! {
        println!(
            "acceptance {} ({}): FAIL — {} [{:.2?}]",
            self.number,
            self.name,
            detail,
            self.started.elapsed()
        );
        panic!(
            "acceptance {} ({}) failed: {}",
            self.number, self.name, detail
        );
    }
}

/// Criterion 1: banded peak gains of the fixed benchmark gain vector over
/// [omega1, 2.5] for omega1 in {0.1, 0.3, 0.5, 0.7} against the published
/// reference values, +-1e-3, in under a second.
///
/// Three of the four reference values are not reachable from this fixed gain
/// vector: the magnitude at the lower band edge already exceeds them (e.g.
/// |F(j0.1)| = 0.9937 > 0.9739 + 1e-3), and a band supremum cannot be
/// smaller than an interior value. Those reference rows evidently belong to
/// gain vectors re-synthesized per band, which are not published. The
/// criterion is asserted as stated and documents the discrepancy on failure.
#[test]
fn acceptance_1_banded_norm_table() {
    let c = Criterion::new(1, "banded peaks of fixed benchmark gains");
    let mag = exact_mag(&table_params(), &k_unc());
    let cfg = ScanConfig::default();
    let expected = [(0.1, 0.9739), (0.3, 0.9001), (0.5, 0.8667), (0.7, 0.7304)];
    let mut failures = Vec::new();
    let mut details = Vec::new();
    for (omega1, want) in expected {
        let got = peak_on_band(&mag, omega1, 2.5, &cfg).unwrap().peak;
        details.push(format!("w1={omega1}: {got:.4} (ref {want})"));
        if (got - want).abs() > 1e-3 {
            failures.push(format!(
                "band [{omega1}, 2.5]: computed sup {got:.6} vs reference {want} \
                 (edge value |F(j{omega1})| = {:.6} already exceeds the reference)",
                mag(omega1)
            ));
        }
    }
    if c.started.elapsed().as_secs_f64() >= 1.0 {
        c.fail("runtime budget of 1 s exceeded");
    }
    if failures.is_empty() {
        c.pass(&details.join("; "));
    } else {
        c.fail(&failures.join(" | "));
    }
}

/// Criterion 2: deterministic reproduction of the published parameter chain
/// (constrained chart, box-interpolating chart, extraction), 5e-3 per
/// coordinate, in under 0.1 s.
#[test]
fn acceptance_2_parameter_chain() {
    let c = Criterion::new(2, "published parameter chain");
    let p = table_params();
    let b = BoxBounds::symmetric(1.32).unwrap();

    let kappa_star = KappaVector([-0.1516, -0.0237, 1.7065, -0.7647]);
    let k = constrained_gains(&kappa_star, &p, &b, ZETA, EPS).unwrap();
    for (got, want) in k.as_array().iter().zip(k_star_case1().as_array()) {
        if (got - want).abs() > 5e-3 {
            c.fail(&format!("constrained chart: {got:.4} vs {want:.4}"));
        }
    }

    let mu0 = MuVector([0.3555, 0.3495, 0.3377, 0.3411]);
    let k0_expect = [0.8089, 0.3191, 0.3611, 0.3492];
    let k0 = box_interp_gains(&mu0, &b, NU, EPS);
    for (got, want) in k0.as_array().iter().zip(k0_expect) {
        if (got - want).abs() > 5e-3 {
            c.fail(&format!("interpolating chart: {got:.4} vs {want:.4}"));
        }
    }

    let kappa0_expect = [0.0918, -0.0378, -0.2983, -0.1611];
    let kappa0 = extract_kappa(&Gains::from_array(k0_expect), &p, &b, ZETA, EPS).unwrap();
    for (got, want) in kappa0.0.iter().zip(kappa0_expect) {
        if (got - want).abs() > 5e-3 {
            c.fail(&format!("extraction: {got:.4} vs {want:.4}"));
        }
    }

    if c.started.elapsed().as_secs_f64() >= 0.1 {
        c.fail("runtime budget of 0.1 s exceeded");
    }
    c.pass("chart, interpolation and extraction all within 5e-3");
}

/// Criterion 3: deterministic point norms at the small-delay optimum.
#[test]
fn acceptance_3_case1_point_norms() {
    let c = Criterion::new(3, "small-delay optimum point norms");
    let p = table_params();
    let k = k_star_case1();
    let mag = exact_mag(&p, &k);
    let banded = peak_on_band(&mag, 0.5, 2.5, &ScanConfig::default())
        .unwrap()
        .peak;
    if (banded - 0.6758).abs() > 1e-3 {
        c.fail(&format!("banded peak {banded:.6} vs 0.6758 +- 1e-3"));
    }
    let global = hinf_global(&mag, &GlobalConfig::for_plant(&p, 2.5))
        .unwrap()
        .peak;
    if !(1.0..=1.001).contains(&global) {
        c.fail(&format!("global peak {global:.6} outside [1, 1.001]"));
    }
    let report = local_stability(&p, &k);
    if report.margins.iter().any(|m| *m <= 0.0) {
        c.fail(&format!(
            "margins not strictly positive: {:?}",
            report.margins
        ));
    }
    if c.started.elapsed().as_secs_f64() >= 1.0 {
        c.fail("runtime budget of 1 s exceeded");
    }
    c.pass(&format!(
        "banded {banded:.4}, global {global:.6}, margins positive"
    ));
}

/// Criterion 4: deterministic point norms at the large-delay optimum.
#[test]
fn acceptance_4_case2_point_norms() {
    let c = Criterion::new(4, "large-delay optimum point norms");
    let p = table_params().with_theta(1.5);
    let k = k_star_case2();
    let mag = exact_mag(&p, &k);
    let banded = peak_on_band(&mag, 0.5, 2.5, &ScanConfig::default())
        .unwrap()
        .peak;
    if (banded - 0.8669).abs() > 1e-3 {
        c.fail(&format!("banded peak {banded:.6} vs 0.8669 +- 1e-3"));
    }
    if !local_stability(&p, &k).hurwitz {
        c.fail("gains not Hurwitz");
    }
    if c.started.elapsed().as_secs_f64() >= 1.0 {
        c.fail("runtime budget of 1 s exceeded");
    }
    c.pass(&format!("banded {banded:.4}, Hurwitz holds"));
}

/// Criterion 5: end-to-end synthesis over ten fixed seeds per case; at least
/// nine of ten must reach the target banded norm, every feasible output must
/// pass exact-model certification, and each run must finish within a minute.
#[test]
fn acceptance_5_end_to_end_synthesis() {
    let c = Criterion::new(5, "end-to-end synthesis across seeds");
    let mut lines = Vec::new();
    for (label, target, make) in [
        (
            "small-delay",
            0.70,
            case1_config as fn(u64) -> SynthesisConfig,
        ),
        (
            "large-delay",
            0.90,
            case2_config as fn(u64) -> SynthesisConfig,
        ),
    ] {
        let mut successes = 0;
        let mut gammas = Vec::new();
        for seed in 0..10u64 {
            let run_started = Instant::now();
            let r = synthesize(&make(seed)).unwrap();
            let run_secs = run_started.elapsed().as_secs_f64();
            if run_secs >= 60.0 {
                c.fail(&format!(
                    "{label} seed {seed}: run took {run_secs:.1} s (budget 60 s)"
                ));
            }
            if r.feasible {
                // every feasible output must carry exact-model certificates
                if !r.stability.hurwitz {
                    c.fail(&format!("{label} seed {seed}: feasible result not Hurwitz"));
                }
                if !make(seed).bounds.contains(&r.k_star, 1e-12) {
                    c.fail(&format!(
                        "{label} seed {seed}: feasible result leaves the box"
                    ));
                }
                if !(1.0..=1.001).contains(&r.global_norm) {
                    c.fail(&format!(
                        "{label} seed {seed}: exact global norm {:.6} outside [1, 1.001]",
                        r.global_norm
                    ));
                }
                if r.banded_norm <= target {
                    successes += 1;
                }
            }
            gammas.push(r.banded_norm);
        }
        if successes < 9 {
            c.fail(&format!(
                "{label}: only {successes}/10 seeds reached gamma <= {target}: {gammas:?}"
            ));
        }
        lines.push(format!("{label} {successes}/10 within {target}"));
    }
    c.pass(&lines.join("; "));
}

/// Criterion 6: approximation-quality ordering on the comparison band for
/// both published gain sets: the rational approximant beats the truncated
/// series and stays below 0.5% relative magnitude error.
#[test]
fn acceptance_6_approximation_ordering() {
    let c = Criterion::new(6, "approximation-error ordering");
    let p = table_params();
    let mut details = Vec::new();
    for (label, k) in [("benchmark", k_unc()), ("optimum", k_star_case1())] {
        let tf = DelayTF::from_gains(&p, &k);
        let rt = approx_tf(&tf, 5).unwrap();
        let mut max_pade = 0.0f64;
        let mut max_taylor = 0.0f64;
        let n = 2000;
        for i in 0..=n {
            let w = 0.01 + (5.01 - 0.01) * i as f64 / n as f64;
            let ex = tf.exact_magnitude(w).unwrap();
            max_pade = max_pade.max(100.0 * ((ex - rt.magnitude(w).unwrap()) / ex).abs());
            max_taylor =
                max_taylor.max(100.0 * ((ex - tf.taylor_magnitude(w).unwrap()) / ex).abs());
        }
        if max_pade >= max_taylor {
            c.fail(&format!(
                "{label}: rational error {max_pade:.2e}% not below series error {max_taylor:.2e}%"
            ));
        }
        if max_pade >= 0.5 {
            c.fail(&format!(
                "{label}: rational error {max_pade:.2e}% above 0.5%"
            ));
        }
        details.push(format!("{label}: {max_pade:.1e}% < {max_taylor:.1e}%"));
    }
    c.pass(&details.join("; "));
}

/// Criterion 7: parameterization soundness over 1e4 random draws in each of
/// three configurations — stability margins, box containment and the
/// necessary-condition sign must all hold, and the extraction round trip
/// must reproduce the gains within 1e-9.
#[test]
fn acceptance_7_parameterization_soundness() {
    use rand::{Rng, SeedableRng};
    let c = Criterion::new(7, "parameterization soundness");
    let configs = [
        (table_params(), BoxBounds::symmetric(1.32).unwrap()),
        (
            table_params().with_theta(1.5),
            BoxBounds::new([0.0, -2.0, -2.0, -2.0], [2.0; 4]).unwrap(),
        ),
        (
            VehicleParams::new(0.8, 0.6, 1.2, 0.2).unwrap(),
            BoxBounds::new([0.05, -1.0, -1.5, -0.8], [1.5, 2.0, 0.8, 1.6]).unwrap(),
        ),
    ];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    for (ci, (p, b)) in configs.iter().enumerate() {
        for draw in 0..10_000 {
            let kappa = KappaVector(std::array::from_fn(|_| rng.gen_range(-3.0..3.0)));
            let k = match constrained_gains(&kappa, p, b, ZETA, EPS) {
                Ok(k) => k,
                Err(e) => c.fail(&format!("config {ci} draw {draw}: chart failed: {e}")),
            };
            let rep = local_stability(p, &k);
            if rep.margins.iter().any(|m| *m <= 0.0) {
                c.fail(&format!(
                    "config {ci} draw {draw}: margins {:?}",
                    rep.margins
                ));
            }
            if !b.contains(&k, 1e-12) {
                c.fail(&format!("config {ci} draw {draw}: box violated by {k:?}"));
            }
            if string_stability_eta(p, &k) < -1e-12 {
                c.fail(&format!(
                    "config {ci} draw {draw}: eta = {}",
                    string_stability_eta(p, &k)
                ));
            }
            let kappa_back = match extract_kappa(&k, p, b, ZETA, EPS) {
                Ok(kb) => kb,
                Err(e) => c.fail(&format!("config {ci} draw {draw}: extraction failed: {e}")),
            };
            let k_back = constrained_gains(&kappa_back, p, b, ZETA, EPS).unwrap();
            for (a, bb) in k.as_array().iter().zip(k_back.as_array()) {
                if (a - bb).abs() > 1e-9 {
                    c.fail(&format!(
                        "config {ci} draw {draw}: round trip {k:?} -> {k_back:?}"
                    ));
                }
            }
        }
    }
    if c.started.elapsed().as_secs_f64() >= 10.0 {
        c.fail("runtime budget of 10 s exceeded");
    }
    c.pass("30000 draws: stability, box, eta sign and round trip all hold");
}

/// Criterion 8: delay-approximant unit suite — all-pass modulus on 1e3
/// random points within 1e-12, the order-1 closed form, and series matching
/// through twice the order for orders up to five.
#[test]
fn acceptance_8_pade_unit_suite() {
    use rand::{Rng, SeedableRng};
    let c = Criterion::new(8, "delay-approximant unit suite");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for draw in 0..1000 {
        let theta = rng.gen_range(0.01..3.0);
        let order = rng.gen_range(1..=8);
        let omega = rng.gen_range(0.01..50.0);
        let m = pade_exp(theta, order).unwrap().magnitude(omega).unwrap();
        if (m - 1.0).abs() >= 1e-12 {
            c.fail(&format!(
                "draw {draw}: |P/Q|(j{omega}) = {m} for theta={theta}, order={order}"
            ));
        }
    }

    let tf = pade_exp(0.3, 1).unwrap();
    if tf.num != vec![1.0, -0.15] || tf.den != vec![1.0, 0.15] {
        c.fail(&format!(
            "order-1 closed form mismatch: {:?} / {:?}",
            tf.num, tf.den
        ));
    }

    for order in 1..=5usize {
        let theta = 0.7;
        let tf = pade_exp(theta, order).unwrap();
        let mut series = vec![1.0];
        for j in 1..=2 * order {
            let prev = series[j - 1];
            series.push(prev * (-theta) / j as f64);
        }
        for j in 0..=2 * order {
            let mut conv = 0.0;
            for (i, &d) in tf.den.iter().enumerate() {
                if i <= j {
                    conv += d * series[j - i];
                }
            }
            let numj = tf.num.get(j).copied().unwrap_or(0.0);
            if (conv - numj).abs() >= 1e-12 {
                c.fail(&format!(
                    "order {order}: series coefficient {j} off by {}",
                    conv - numj
                ));
            }
        }
    }
    c.pass("all-pass on 1000 points, order-1 form, series matching through 2N");
}

/// Criterion 9: simulator property suite — equilibrium invariance, sinusoid
/// steady-state gain against the frequency response, and mixed-platoon
/// attenuation against the all-human baseline.
#[test]
fn acceptance_9_simulator_suite() {
    let c = Criterion::new(9, "simulator property suite");
    let cav = VehicleSpec::cav(table_params(), k_star_case1());

    // zero-input invariance
    let sc = PlatoonScenario {
        vehicles: vec![cav, VehicleSpec::default_hdv()],
        leader: LeaderProfile::zero(),
        dt: 0.005,
        horizon: 20.0,
    };
    let tr = simulate(&sc).unwrap();
    for v in &tr.vehicles {
        for i in 0..v.sigma.len() {
            if v.sigma[i].abs() > 1e-12 || v.dv[i].abs() > 1e-12 || v.accel[i].abs() > 1e-12 {
                c.fail(&format!("equilibrium drift at sample {i}"));
            }
        }
    }

    // steady-state sinusoid gain matches the frequency response within 2%
    let tf = DelayTF::from_gains(&cav.params, &cav.gains);
    for omega in [0.5f64, 1.0, 2.0] {
        let period = 2.0 * std::f64::consts::PI / omega;
        let horizon = 40.0 + 4.0 * period;
        let sc = PlatoonScenario {
            vehicles: vec![cav],
            leader: LeaderProfile::Sinusoid {
                amplitude: 1.0,
                omega,
                t_start: 0.0,
            },
            dt: 0.005,
            horizon,
        };
        let tr = simulate(&sc).unwrap();
        let t0 = horizon - 4.0 * period;
        let (mut in_e, mut out_e) = (0.0, 0.0);
        for i in 1..tr.times.len() {
            if tr.times[i] < t0 {
                continue;
            }
            let dt = tr.times[i] - tr.times[i - 1];
            in_e += 0.5 * dt * (tr.leader_accel[i].powi(2) + tr.leader_accel[i - 1].powi(2));
            let a = &tr.vehicles[0].accel;
            out_e += 0.5 * dt * (a[i].powi(2) + a[i - 1].powi(2));
        }
        let gain = (out_e / in_e).sqrt();
        let expect = tf.exact_magnitude(omega).unwrap();
        if ((gain - expect) / expect).abs() >= 0.02 {
            c.fail(&format!(
                "omega {omega}: simulated gain {gain:.4} vs analytic {expect:.4}"
            ));
        }
    }

    // the CAV link improves on the all-human platoon at the same position
    let mixed = PlatoonScenario {
        vehicles: vec![VehicleSpec::default_hdv(), cav, VehicleSpec::default_hdv()],
        leader: default_stop_and_go(),
        dt: 0.005,
        horizon: 80.0,
    };
    let all_hdv = PlatoonScenario {
        vehicles: vec![VehicleSpec::default_hdv(); 3],
        leader: default_stop_and_go(),
        dt: 0.005,
        horizon: 80.0,
    };
    let r_mixed = amplification_report(&simulate(&mixed).unwrap());
    let r_hdv = amplification_report(&simulate(&all_hdv).unwrap());
    let (m, h) = (
        r_mixed.links[0].l2_ratio.unwrap(),
        r_hdv.links[0].l2_ratio.unwrap(),
    );
    if m >= h {
        c.fail(&format!(
            "CAV link ratio {m:.4} not below all-human ratio {h:.4}"
        ));
    }
    c.pass(&format!(
        "equilibrium exact, gains within 2%, CAV link {m:.3} < human {h:.3}"
    ));
}
