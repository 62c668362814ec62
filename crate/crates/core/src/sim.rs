//! Time-domain mixed-platoon simulator with delayed feedforward.
//!
//! Integrates every vehicle's third-order longitudinal dynamics with the
//! classical fixed-step Runge-Kutta scheme. The delayed predecessor
//! acceleration is read from a per-vehicle history buffer with linear
//! interpolation; the leader profile is evaluated analytically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{local_stability, Gains, VehicleParams};

/// Delays below this are treated as zero: they are far below any usable step
/// size, and the dynamics are continuous in the delay.
pub const THETA_ZERO: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleKind {
    Cav,
    Hdv,
}

/// One platoon member: plant constants plus its control gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleSpec {
    pub kind: VehicleKind,
    pub params: VehicleParams,
    pub gains: Gains,
}

impl VehicleSpec {
    pub fn cav(params: VehicleParams, gains: Gains) -> Self {
        Self {
            kind: VehicleKind::Cav,
            params,
            gains,
        }
    }

    /// Human-driven vehicle: same third-order structure without feedforward.
    /// The default gains are locally stable but amplify low-frequency
    /// disturbances, which reproduces the characteristic string-unstable
    /// behavior.
    pub fn default_hdv() -> Self {
        Self {
            kind: VehicleKind::Hdv,
            params: VehicleParams {
                theta: 0.0,
                ..VehicleParams::default()
            },
            gains: Gains::new(0.5, 0.2, 0.0, 0.0),
        }
    }
}

/// Exogenous leader acceleration profile; zero before its start time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LeaderProfile {
    /// Value of each step holds from its start time until the next step.
    PiecewiseConstant { steps: Vec<ProfileStep> },
    Sinusoid {
        amplitude: f64,
        omega: f64,
        t_start: f64,
    },
    /// Linear frequency sweep from `omega_start` to `omega_end` over
    /// `duration`.
    Chirp {
        amplitude: f64,
        omega_start: f64,
        omega_end: f64,
        t_start: f64,
        duration: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileStep {
    pub t: f64,
    pub accel: f64,
}

impl LeaderProfile {
    pub fn zero() -> Self {
        Self::PiecewiseConstant { steps: vec![] }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::PiecewiseConstant { steps } => {
                let mut value = 0.0;
                for s in steps {
                    if t >= s.t {
                        value = s.accel;
                    } else {
                        break;
                    }
                }
                value
            }
            Self::Sinusoid {
                amplitude,
                omega,
                t_start,
            } => {
                if t < *t_start {
                    0.0
                } else {
                    amplitude * (omega * (t - t_start)).sin()
                }
            }
            Self::Chirp {
                amplitude,
                omega_start,
                omega_end,
                t_start,
                duration,
            } => {
                let dt = t - t_start;
                if dt < 0.0 || dt > *duration {
                    return 0.0;
                }
                // instantaneous frequency sweeps linearly; phase is its
                // integral
                let rate = (omega_end - omega_start) / duration;
                amplitude * (omega_start * dt + 0.5 * rate * dt * dt).sin()
            }
        }
    }

    /// First time the profile can be nonzero; the energy window starts here.
    pub fn activity_start(&self) -> f64 {
        match self {
            Self::PiecewiseConstant { steps } => steps
                .iter()
                .find(|s| s.accel != 0.0)
                .map(|s| s.t)
                .unwrap_or(0.0),
            Self::Sinusoid { t_start, .. } => *t_start,
            Self::Chirp { t_start, .. } => *t_start,
        }
    }

    /// Earliest horizon that contains the whole disturbance.
    pub fn min_horizon(&self) -> f64 {
        match self {
            Self::PiecewiseConstant { steps } => steps.last().map(|s| s.t).unwrap_or(0.0),
            Self::Sinusoid { t_start, .. } => *t_start,
            Self::Chirp {
                t_start, duration, ..
            } => t_start + duration,
        }
    }
}

/// Single stop-and-go cycle: a deceleration pulse followed by an
/// acceleration pulse.
pub fn stop_and_go_profile(
    a_dec: f64,
    t_dec: f64,
    a_acc: f64,
    t_acc: f64,
    t_start: f64,
) -> Result<LeaderProfile> {
    if t_dec == 0.0 && t_acc == 0.0 {
        return Ok(LeaderProfile::zero());
    }
    if !(a_dec < 0.0) || !(a_acc > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need a_dec < 0 < a_acc, got {a_dec} and {a_acc}"
        )));
    }
    if !(t_dec > 0.0) || !(t_acc > 0.0) {
        return Err(Error::InvalidArgument("pulse durations must be > 0".into()));
    }
    Ok(LeaderProfile::PiecewiseConstant {
        steps: vec![
            ProfileStep {
                t: t_start,
                accel: a_dec,
            },
            ProfileStep {
                t: t_start + t_dec,
                accel: a_acc,
            },
            ProfileStep {
                t: t_start + t_dec + t_acc,
                accel: 0.0,
            },
        ],
    })
}

/// The default disturbance: -1 m/s^2 for 3 s, +1 m/s^2 for 3 s, starting at
/// t = 5 s (zero net velocity change).
pub fn default_stop_and_go() -> LeaderProfile {
    stop_and_go_profile(-1.0, 3.0, 1.0, 3.0, 5.0).expect("valid defaults")
}

/// A platoon, its leader profile, and the integration setup. Vehicle 1 is
/// the most preceding follower (directly behind the leader).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatoonScenario {
    pub vehicles: Vec<VehicleSpec>,
    pub leader: LeaderProfile,
    pub dt: f64,
    pub horizon: f64,
}

impl PlatoonScenario {
    /// Step size resolving both the delay buffer and the actuation lag:
    /// `min(0.01, theta/20)` over the delayed vehicles.
    pub fn default_dt(vehicles: &[VehicleSpec]) -> f64 {
        let mut dt: f64 = 0.01;
        for v in vehicles {
            if v.params.theta >= THETA_ZERO {
                dt = dt.min(v.params.theta / 20.0);
            }
        }
        dt
    }

    pub fn validate(&self) -> Result<()> {
        if self.vehicles.is_empty() {
            return Err(Error::InvalidArgument(
                "scenario needs at least one vehicle".into(),
            ));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        if !(self.horizon >= self.dt) {
            return Err(Error::InvalidArgument(
                "horizon must cover at least one step".into(),
            ));
        }
        if self.horizon < self.leader.min_horizon() {
            return Err(Error::InvalidArgument(format!(
                "horizon {} ends before the disturbance ({})",
                self.horizon,
                self.leader.min_horizon()
            )));
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            let label = i + 1;
            if v.kind == VehicleKind::Hdv && v.gains.k4 != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "vehicle {label}: a human-driven vehicle has no feedforward (k4 = {})",
                    v.gains.k4
                )));
            }
            if !local_stability(&v.params, &v.gains).hurwitz {
                return Err(Error::InvalidArgument(format!(
                    "vehicle {label}: gains are not locally stable"
                )));
            }
            if v.params.theta >= THETA_ZERO && self.dt > v.params.theta / 10.0 {
                return Err(Error::InvalidArgument(format!(
                    "vehicle {label}: dt = {} does not resolve the delay {} (need dt <= theta/10)",
                    self.dt, v.params.theta
                )));
            }
            if self.dt > v.params.t_lag / 2.0 {
                return Err(Error::InvalidArgument(format!(
                    "vehicle {label}: dt = {} too large for actuation lag {}",
                    self.dt, v.params.t_lag
                )));
            }
        }
        Ok(())
    }
}

/// Uniformly sampled signal history with linear interpolation.
///
/// Samples are pushed at grid times `0, dt, 2 dt, ...`; queries before the
/// first sample return zero (pre-start equilibrium).
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    dt: f64,
    samples: Vec<f64>,
}

impl HistoryBuffer {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, value: f64) {
        self.samples.push(value);
    }

    /// Linear interpolation at time `t`; clamped to the last sample beyond
    /// the recorded range.
    pub fn value_at(&self, t: f64) -> f64 {
        if t <= 0.0 || self.samples.is_empty() {
            return 0.0;
        }
        let pos = t / self.dt;
        let i = pos.floor() as usize;
        if i + 1 >= self.samples.len() {
            return *self.samples.last().expect("nonempty");
        }
        let frac = pos - i as f64;
        self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac
    }
}

/// Per-vehicle state series plus energy metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSeries {
    pub kind: VehicleKind,
    pub sigma: Vec<f64>,
    pub dv: Vec<f64>,
    pub accel: Vec<f64>,
    /// Trapezoid-rule L2 norm of the acceleration over the energy window.
    pub l2_accel: f64,
    /// Peak |acceleration| over the energy window.
    pub peak_accel: f64,
}

/// Full simulation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub leader_accel: Vec<f64>,
    pub vehicles: Vec<VehicleSeries>,
    pub leader_l2: f64,
    pub leader_peak: f64,
    /// Start of the energy window (disturbance onset).
    pub window_start: f64,
}

#[derive(Clone, Copy, Default)]
struct State {
    sigma: f64,
    dv: f64,
    accel: f64,
}

impl State {
    fn axpy(&self, h: f64, d: &Deriv) -> State {
        State {
            sigma: self.sigma + h * d.sigma,
            dv: self.dv + h * d.dv,
            accel: self.accel + h * d.accel,
        }
    }
}

#[derive(Clone, Copy, Default)]
struct Deriv {
    sigma: f64,
    dv: f64,
    accel: f64,
}

/// Integrates the platoon over the horizon with classical 4-stage
/// Runge-Kutta from the zero (equilibrium) initial state.
pub fn simulate(sc: &PlatoonScenario) -> Result<Trajectory> {
    sc.validate()?;
    let n = sc.vehicles.len();
    let dt = sc.dt;
    let steps = (sc.horizon / dt).round() as usize;

    let mut states = vec![State::default(); n];
    let mut histories: Vec<HistoryBuffer> = (0..n).map(|_| HistoryBuffer::new(dt)).collect();
    for h in &mut histories {
        h.push(0.0);
    }

    let mut times = Vec::with_capacity(steps + 1);
    let mut leader_accel = Vec::with_capacity(steps + 1);
    let mut series: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = vec![
        (
            Vec::with_capacity(steps + 1),
            Vec::with_capacity(steps + 1),
            Vec::with_capacity(steps + 1)
        );
        n
    ];

    let record = |t: f64,
                  states: &[State],
                  times: &mut Vec<f64>,
                  leader_accel: &mut Vec<f64>,
                  series: &mut Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>| {
        times.push(t);
        leader_accel.push(sc.leader.eval(t));
        for (s, (sig, dv, acc)) in states.iter().zip(series.iter_mut()) {
            sig.push(s.sigma);
            dv.push(s.dv);
            acc.push(s.accel);
        }
    };
    record(0.0, &states, &mut times, &mut leader_accel, &mut series);

    let derivs = |t_stage: f64, x: &[State], hist: &[HistoryBuffer], out: &mut [Deriv]| {
        for (i, v) in sc.vehicles.iter().enumerate() {
            let pred_now = if i == 0 {
                sc.leader.eval(t_stage)
            } else {
                x[i - 1].accel
            };
            let theta = v.params.theta;
            let pred_delayed = if theta < THETA_ZERO {
                pred_now
            } else if i == 0 {
                sc.leader.eval(t_stage - theta)
            } else {
                hist[i - 1].value_at(t_stage - theta)
            };
            let s = &x[i];
            let g = &v.gains;
            let u = g.k1 * s.sigma + g.k2 * s.dv + g.k3 * s.accel + g.k4 * pred_delayed;
            out[i] = Deriv {
                sigma: s.dv - v.params.tau * s.accel,
                dv: pred_now - s.accel,
                accel: (-s.accel + v.params.k_ratio * u) / v.params.t_lag,
            };
        }
    };

    let mut k1 = vec![Deriv::default(); n];
    let mut k2 = vec![Deriv::default(); n];
    let mut k3 = vec![Deriv::default(); n];
    let mut k4 = vec![Deriv::default(); n];
    let mut stage = vec![State::default(); n];

    for step in 0..steps {
        let t = step as f64 * dt;
        derivs(t, &states, &histories, &mut k1);
        for i in 0..n {
            stage[i] = states[i].axpy(0.5 * dt, &k1[i]);
        }
        derivs(t + 0.5 * dt, &stage, &histories, &mut k2);
        for i in 0..n {
            stage[i] = states[i].axpy(0.5 * dt, &k2[i]);
        }
        derivs(t + 0.5 * dt, &stage, &histories, &mut k3);
        for i in 0..n {
            stage[i] = states[i].axpy(dt, &k3[i]);
        }
        derivs(t + dt, &stage, &histories, &mut k4);
        for i in 0..n {
            states[i] = State {
                sigma: states[i].sigma
                    + dt / 6.0
                        * (k1[i].sigma + 2.0 * k2[i].sigma + 2.0 * k3[i].sigma + k4[i].sigma),
                dv: states[i].dv
                    + dt / 6.0 * (k1[i].dv + 2.0 * k2[i].dv + 2.0 * k3[i].dv + k4[i].dv),
                accel: states[i].accel
                    + dt / 6.0
                        * (k1[i].accel + 2.0 * k2[i].accel + 2.0 * k3[i].accel + k4[i].accel),
            };
        }
        for (h, s) in histories.iter_mut().zip(&states) {
            h.push(s.accel);
        }
        record(
            (step + 1) as f64 * dt,
            &states,
            &mut times,
            &mut leader_accel,
            &mut series,
        );
    }

    let window_start = sc.leader.activity_start().min(sc.horizon);
    let (leader_l2, leader_peak) = window_metrics(&times, &leader_accel, window_start);
    let vehicles = sc
        .vehicles
        .iter()
        .zip(series)
        .map(|(v, (sigma, dv, accel))| {
            let (l2_accel, peak_accel) = window_metrics(&times, &accel, window_start);
            VehicleSeries {
                kind: v.kind,
                sigma,
                dv,
                accel,
                l2_accel,
                peak_accel,
            }
        })
        .collect();

    Ok(Trajectory {
        times,
        leader_accel,
        vehicles,
        leader_l2,
        leader_peak,
        window_start,
    })
}

/// Trapezoid-rule L2 norm and peak magnitude over `[window_start, end]`.
fn window_metrics(times: &[f64], signal: &[f64], window_start: f64) -> (f64, f64) {
    let mut energy = 0.0;
    let mut peak = 0.0f64;
    for i in 1..times.len() {
        if times[i] < window_start {
            continue;
        }
        let dt = times[i] - times[i - 1];
        energy += 0.5 * dt * (signal[i] * signal[i] + signal[i - 1] * signal[i - 1]);
        peak = peak.max(signal[i].abs());
    }
    (energy.sqrt(), peak)
}

/// One leader-follower link of the amplification report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkRatio {
    /// 1-based index of the following vehicle.
    pub follower: usize,
    pub kind: VehicleKind,
    /// `None` marks an undefined ratio (zero upstream energy).
    pub l2_ratio: Option<f64>,
    pub peak_ratio: Option<f64>,
}

/// Per-link energy and peak amplification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplificationReport {
    /// Leader-to-first-vehicle link (absent for an empty platoon).
    pub leader_link: Option<LinkRatio>,
    /// Vehicle-to-vehicle links in platoon order.
    pub links: Vec<LinkRatio>,
    /// True when every CAV link (including the leader link when vehicle 1 is
    /// a CAV) attenuates within 1%.
    pub attenuating: bool,
}

const ZERO_ENERGY: f64 = 1e-300;
const ATTENUATION_SLACK: f64 = 1e-2;

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > ZERO_ENERGY).then(|| num / den)
}

/// Builds the per-link amplification ratios from a trajectory.
pub fn amplification_report(tr: &Trajectory) -> AmplificationReport {
    let leader_link = tr.vehicles.first().map(|v| LinkRatio {
        follower: 1,
        kind: v.kind,
        l2_ratio: ratio(v.l2_accel, tr.leader_l2),
        peak_ratio: ratio(v.peak_accel, tr.leader_peak),
    });
    let links: Vec<LinkRatio> = tr
        .vehicles
        .windows(2)
        .enumerate()
        .map(|(i, pair)| LinkRatio {
            follower: i + 2,
            kind: pair[1].kind,
            l2_ratio: ratio(pair[1].l2_accel, pair[0].l2_accel),
            peak_ratio: ratio(pair[1].peak_accel, pair[0].peak_accel),
        })
        .collect();
    let cav_ok = |l: &LinkRatio| {
        l.kind != VehicleKind::Cav
            || l.l2_ratio
                .map(|r| r <= 1.0 + ATTENUATION_SLACK)
                .unwrap_or(true)
    };
    let attenuating = leader_link.iter().all(cav_ok) && links.iter().all(cav_ok);
    AmplificationReport {
        leader_link,
        links,
        attenuating,
    }
}
