//! Whole-procedure properties that need end-to-end runs: the band trend over
//! the lower frequency edge, boundary behavior of the global norm, and
//! monotone improvement of the branch objective.

use platoon_hinf::model::VehicleParams;
use platoon_hinf::param::{BoxBounds, KappaVector};
use platoon_hinf::synthesis::{branch_objective, synthesize, Stage1Mode, SynthesisConfig};

fn case1_config(seed: u64) -> SynthesisConfig {
    let mut cfg = SynthesisConfig::new(
        VehicleParams::default(),
        BoxBounds::symmetric(1.32).unwrap(),
    );
    cfg.seed = seed;
    cfg
}

/// Widening the band toward zero can only raise the optimal banded norm, and
/// every synthesized norm must dominate the published fixed-gain benchmark
/// value for the same band.
#[test]
fn band_trend_over_lower_edge() {
    let benchmark = [(0.1, 0.9739), (0.3, 0.9001), (0.5, 0.8667), (0.7, 0.7304)];
    let mut prev = f64::INFINITY;
    for (omega1, unconstrained_value) in benchmark {
        let mut cfg = case1_config(0);
        cfg.omega1 = omega1;
        let r = synthesize(&cfg).unwrap();
        assert!(r.feasible, "omega1 = {omega1}: infeasible result");
        assert!(
            r.banded_norm <= prev + 1e-6,
            "omega1 = {omega1}: gamma {} above previous {prev}",
            r.banded_norm
        );
        assert!(
            r.banded_norm <= unconstrained_value,
            "omega1 = {omega1}: gamma {} does not dominate the benchmark {unconstrained_value}",
            r.banded_norm
        );
        prev = r.banded_norm;
    }
}

/// Feasible designs sit on the unit boundary of the global norm: the exact
/// supremum is attained in the zero-frequency limit.
#[test]
fn feasible_results_sit_on_unit_boundary() {
    for seed in [0u64, 3, 7] {
        let r = synthesize(&case1_config(seed)).unwrap();
        assert!(r.feasible);
        assert!(
            (1.0..=1.001).contains(&r.global_norm),
            "seed {seed}: global norm {}",
            r.global_norm
        );
    }
}

/// The second stage never worsens the branch objective it starts from.
#[test]
fn stage2_improves_on_stage1() {
    for seed in [0u64, 5] {
        let cfg = case1_config(seed);
        let r = synthesize(&cfg).unwrap();
        let h0 = branch_objective(&r.kappa0, &cfg);
        let h_star = branch_objective(&r.kappa_star, &cfg);
        assert!(h_star <= h0 + 1e-12, "seed {seed}: {h_star} > {h0}");
        assert!((h0 - r.diagnostics.objective_initial).abs() < 1e-12);
    }
}

/// The simplex search started from the published stage-1 point reaches the
/// published objective region.
#[test]
fn simplex_from_published_start() {
    use platoon_hinf::optimize::{nelder_mead, OptimizerOptions};
    let cfg = case1_config(0);
    let kappa0 = [0.0918, -0.0378, -0.2983, -0.1611];
    let r = nelder_mead(
        |x| branch_objective(&KappaVector([x[0], x[1], x[2], x[3]]), &cfg),
        &kappa0,
        &OptimizerOptions::default(),
    )
    .unwrap();
    assert!(r.f <= 0.70, "objective {}", r.f);
}

/// Results are a function of the seed only: the worker-thread count must not
/// change a single bit of the outcome.
#[test]
fn thread_count_does_not_change_results() {
    let mut serial = case1_config(2);
    serial.threads = 1;
    let mut parallel = case1_config(2);
    parallel.threads = 3;
    let a = synthesize(&serial).unwrap();
    let b = synthesize(&parallel).unwrap();
    assert_eq!(a.k_star, b.k_star);
    assert_eq!(a.kappa_star, b.kappa_star);
    assert_eq!(a.kappa0, b.kappa0);
    assert_eq!(a.banded_norm, b.banded_norm);
    assert_eq!(a.global_norm, b.global_norm);
}

/// Sampling mode is a drop-in replacement for the optimize mode: it finds a
/// feasible start and the full pipeline still certifies.
#[test]
fn sample_mode_synthesizes() {
    let mut cfg = case1_config(42);
    cfg.stage1_mode = Stage1Mode::Sample;
    cfg.sample_count = 2000;
    let r = synthesize(&cfg).unwrap();
    assert!(r.feasible);
    assert!(r.mu0.is_none());
    assert!(r.banded_norm <= 0.70, "gamma {}", r.banded_norm);
}

/// A collapsing band degenerates to a point evaluation: the banded norm
/// approaches the magnitude at the upper edge.
#[test]
fn degenerate_band_is_point_evaluation() {
    use platoon_hinf::model::{DelayTF, Gains};
    let p = VehicleParams::default();
    let k = Gains::new(0.4212, 0.4775, -1.0078, 1.3197);
    let mut cfg = case1_config(0);
    cfg.omega1 = 2.5 * (1.0 - 1e-9);
    let kappa = KappaVector([-0.1516, -0.0237, 1.7065, -0.7647]);
    let h = branch_objective(&kappa, &cfg);
    let point = DelayTF::from_gains(&p, &k).exact_magnitude(2.5).unwrap();
    assert!((h - point).abs() < 1e-4, "{h} vs {point}");
}

/// Delay-free feasibility with the feedforward pinned to zero: stage 1 must
/// still find a string-stable point (one is known to exist in this box).
#[test]
fn delay_free_box_without_feedforward() {
    let params = VehicleParams::new(1.0, 0.45, 1.0, 0.0).unwrap();
    let bounds = BoxBounds::new([0.0, -3.0, -2.0, 0.0], [1.0, 3.0, 2.0, 0.0]).unwrap();
    let mut cfg = SynthesisConfig::new(params, bounds);
    cfg.seed = 1;
    let r = synthesize(&cfg).unwrap();
    assert!(r.feasible, "delay-free synthesis failed: {r:?}");
    assert_eq!(r.k_star.k4, 0.0);
}
