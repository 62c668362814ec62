//! Longitudinal CAV plant, decentralized control law, exact delay transfer
//! function and the analytic stability conditions.
//!
//! The plant state is `[sigma, dv, a]`: deviation from equilibrium spacing,
//! speed difference with the preceding vehicle, and realized acceleration.
//! The control law is `u = k1*sigma + k2*dv + k3*a + k4*a_prev(t - theta)`,
//! where `a_prev` is the preceding vehicle's acceleration received over V2V
//! with delay `theta`.

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Margins below this are not considered strictly positive.
pub const MARGIN_TOL: f64 = 1e-12;

/// Plant constants of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Constant time gap (s).
    pub tau: f64,
    /// Actuation lag: time to realize a demanded acceleration (s).
    pub t_lag: f64,
    /// Ratio of demanded acceleration that is realized (dimensionless).
    pub k_ratio: f64,
    /// V2V/V2I communication delay (s).
    pub theta: f64,
}

impl VehicleParams {
    pub fn new(tau: f64, t_lag: f64, k_ratio: f64, theta: f64) -> Result<Self> {
        if !(t_lag > 0.0) || !t_lag.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "t_lag must be > 0, got {t_lag}"
            )));
        }
        if !(k_ratio > 0.0) || !k_ratio.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "k_ratio must be > 0, got {k_ratio}"
            )));
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "tau must be >= 0, got {tau}"
            )));
        }
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "theta must be >= 0, got {theta}"
            )));
        }
        Ok(Self {
            tau,
            t_lag,
            k_ratio,
            theta,
        })
    }

    /// Same parameters with a different delay.
    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }
}

/// The benchmark setting: tau = 1 s, T = 0.45 s, K = 1, theta = 0.1 s.
impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            tau: 1.0,
            t_lag: 0.45,
            k_ratio: 1.0,
            theta: 0.1,
        }
    }
}

/// The four control parameters: spacing, speed-difference and acceleration
/// feedback gains plus the feedforward gain on the delayed predecessor
/// acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

impl Gains {
    pub fn new(k1: f64, k2: f64, k3: f64, k4: f64) -> Self {
        Self { k1, k2, k3, k4 }
    }

    pub fn from_array(k: [f64; 4]) -> Self {
        Self {
            k1: k[0],
            k2: k[1],
            k3: k[2],
            k4: k[3],
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.k1, self.k2, self.k3, self.k4]
    }
}

/// Open-loop state-space matrices of one vehicle.
///
/// `x = [sigma, dv, a]`, `dx = A x + B u + D a_prev`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: Matrix3<f64>,
    pub b: [f64; 3],
    pub d: [f64; 3],
}

/// Builds the open-loop matrices for the given plant constants.
pub fn build_state_space(p: &VehicleParams) -> StateSpace {
    let a = Matrix3::new(0.0, 1.0, -p.tau, 0.0, 0.0, -1.0, 0.0, 0.0, -1.0 / p.t_lag);
    StateSpace {
        a,
        b: [0.0, 0.0, p.k_ratio / p.t_lag],
        d: [0.0, 1.0, 0.0],
    }
}

/// Local-stability verdict for one gain set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Left-hand sides of the four Hurwitz inequalities:
    /// `k1`, `tau*k1 + k2`, `1/K - k3`,
    /// `(1/K - k3)(tau*k1 + k2) - (T/K) k1`.
    pub margins: [f64; 4],
    /// True iff every margin is strictly positive.
    pub hurwitz: bool,
    /// Closed-loop eigenvalues as (re, im) pairs (roots of the
    /// characteristic cubic).
    pub eigenvalues: [(f64, f64); 3],
}

impl StabilityReport {
    /// Maximum real part over the closed-loop eigenvalues.
    pub fn spectral_abscissa(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| e.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Coefficients of the monic characteristic cubic
/// `s^3 + a2 s^2 + a1 s + a0` of the closed loop. The feedforward gain does
/// not appear: it multiplies the exogenous delayed disturbance and does not
/// move the poles.
fn monic_cubic(p: &VehicleParams, k: &Gains) -> [f64; 3] {
    let scale = p.k_ratio / p.t_lag;
    let a2 = (1.0 / p.k_ratio - k.k3) * scale;
    let a1 = (p.tau * k.k1 + k.k2) * scale;
    let a0 = k.k1 * scale;
    [a2, a1, a0]
}

/// Roots of `s^3 + a2 s^2 + a1 s + a0` via the eigenvalues of the companion
/// matrix, sorted by real part then imaginary part.
fn cubic_roots(a2: f64, a1: f64, a0: f64) -> [(f64, f64); 3] {
    let companion = Matrix3::new(0.0, 0.0, -a0, 1.0, 0.0, -a1, 0.0, 1.0, -a2);
    let eig = companion.complex_eigenvalues();
    let mut roots = [
        (eig[0].re, eig[0].im),
        (eig[1].re, eig[1].im),
        (eig[2].re, eig[2].im),
    ];
    roots.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    roots
}

/// Evaluates the four Hurwitz margins and the closed-loop eigenvalues.
pub fn local_stability(p: &VehicleParams, k: &Gains) -> StabilityReport {
    let inv_k = 1.0 / p.k_ratio;
    let m1 = k.k1;
    let m2 = p.tau * k.k1 + k.k2;
    let m3 = inv_k - k.k3;
    let m4 = m3 * m2 - (p.t_lag / p.k_ratio) * k.k1;
    let margins = [m1, m2, m3, m4];
    let hurwitz = margins.iter().all(|m| *m > MARGIN_TOL);
    let [a2, a1, a0] = monic_cubic(p, k);
    StabilityReport {
        margins,
        hurwitz,
        eigenvalues: cubic_roots(a2, a1, a0),
    }
}

/// Exact disturbance-propagation transfer function
/// `F(s) = K (k4 s^2 e^{-theta s} + k2 s + k1) / (c3 s^3 + c2 s^2 + c1 s + c0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayTF {
    /// Denominator coefficients, ascending powers of `s`.
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Delay-free numerator part `(K k1, K k2)`.
    pub num_static: (f64, f64),
    /// Coefficient of `s^2 e^{-theta s}`, i.e. `K k4`.
    pub num_delayed: f64,
    /// Communication delay (s).
    pub theta: f64,
}

impl DelayTF {
    pub fn from_gains(p: &VehicleParams, k: &Gains) -> Self {
        let kk = p.k_ratio;
        Self {
            c0: kk * k.k1,
            c1: kk * (p.tau * k.k1 + k.k2),
            c2: 1.0 - kk * k.k3,
            c3: p.t_lag,
            num_static: (kk * k.k1, kk * k.k2),
            num_delayed: kk * k.k4,
            theta: p.theta,
        }
    }

    /// Squared-magnitude numerator and denominator at `omega`, with the
    /// delay factor supplied through `(cos_tw, sin_tw)`.
    fn mag_squared_parts(&self, omega: f64, cos_tw: f64, sin_tw: f64) -> (f64, f64) {
        let (kk1, kk2) = self.num_static; // K*k1, K*k2
        let kk4 = self.num_delayed; // K*k4
        let n4 = kk4 * kk4;
        let n2 = kk2 * kk2;
        let n0 = kk1 * kk1;
        let g = 2.0 * kk4 * (-kk1 * cos_tw + kk2 * omega * sin_tw);
        let w2 = omega * omega;
        let num = ((n4 * w2) + n2 + g) * w2 + n0;

        let d6 = self.c3 * self.c3;
        let d4 = self.c2 * self.c2 - 2.0 * self.c1 * self.c3;
        let d2 = self.c1 * self.c1 - 2.0 * self.c0 * self.c2;
        let d0 = self.c0 * self.c0;
        let den = (((d6 * w2) + d4) * w2 + d2) * w2 + d0;
        (num, den)
    }

    /// `|F(j omega)|` by the closed-form magnitude expression.
    ///
    /// Errors with [`Error::NonHurwitz`] when the squared denominator is not
    /// positive (imaginary-axis pole or degenerate plant).
    pub fn exact_magnitude(&self, omega: f64) -> Result<f64> {
        let tw = self.theta * omega;
        let (num, den) = self.mag_squared_parts(omega, tw.cos(), tw.sin());
        if !(den > 0.0) {
            return Err(Error::NonHurwitz { omega });
        }
        Ok((num.max(0.0) / den).sqrt())
    }

    /// `|F(j omega)|` with the delay factor replaced by its low-order series:
    /// `cos(theta w) ~ 1 - (theta w)^2/2`, `sin(theta w) ~ theta w - (theta w)^3/6`.
    ///
    /// A diagnostic for approximation-error comparisons; never used inside
    /// synthesis.
    pub fn taylor_magnitude(&self, omega: f64) -> Result<f64> {
        let tw = self.theta * omega;
        let cos_tw = 1.0 - tw * tw / 2.0;
        let sin_tw = tw - tw * tw * tw / 6.0;
        let (num, den) = self.mag_squared_parts(omega, cos_tw, sin_tw);
        if !(den > 0.0) {
            return Err(Error::NonHurwitz { omega });
        }
        Ok((num.max(0.0) / den).sqrt())
    }

    /// `F(j omega)` by direct complex evaluation including the delay factor.
    pub fn freq_response(&self, omega: f64) -> Result<Complex64> {
        let s = Complex64::new(0.0, omega);
        let (kk1, kk2) = self.num_static;
        let delay = (-s * self.theta).exp();
        let num = self.num_delayed * s * s * delay + kk2 * s + kk1;
        let den = ((self.c3 * s + self.c2) * s + self.c1) * s + self.c0;
        if den.norm_sqr() == 0.0 {
            return Err(Error::NonHurwitz { omega });
        }
        Ok(num / den)
    }
}

/// Quartic-coefficient string-stability check based on the truncated-series
/// delay model (valid for small delays only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorStringCheck {
    /// Coefficient of `omega^4` in the nonnegativity quartic.
    pub p: f64,
    /// Coefficient of `omega^2`.
    pub q: f64,
    /// Constant coefficient (equals [`string_stability_eta`]).
    pub r: f64,
    /// All three coefficients nonnegative.
    pub case1_ok: bool,
    /// `p >= 0`, `q < 0`, `r >= 0` and the quartic discriminant
    /// `q^2 - 4 p r <= 0`.
    pub case2_ok: bool,
}

impl TaylorStringCheck {
    pub fn string_stable(&self) -> bool {
        self.case1_ok || self.case2_ok
    }
}

/// Evaluates the quartic coefficients `p, q, r` whose nonnegativity (case 1)
/// or bounded dip (case 2) is sufficient for string stability under a small
/// delay.
pub fn taylor_string_stability(p: &VehicleParams, k: &Gains) -> TaylorStringCheck {
    let kk = p.k_ratio;
    let th = p.theta;
    let pc = p.t_lag * p.t_lag + kk * kk * k.k4 * k.k2 * th * th * th / 3.0;
    let qc = -2.0 * kk * p.t_lag * (p.tau * k.k1 + k.k2) + (kk * k.k3 - 1.0).powi(2)
        - kk * kk * k.k4 * (k.k1 * th * th + 2.0 * k.k2 * th + k.k4);
    let rc = string_stability_eta(p, k);
    let case1_ok = pc >= 0.0 && qc >= 0.0 && rc >= 0.0;
    let case2_ok = pc >= 0.0 && qc < 0.0 && rc >= 0.0 && qc * qc - 4.0 * pc * rc <= 0.0;
    TaylorStringCheck {
        p: pc,
        q: qc,
        r: rc,
        case1_ok,
        case2_ok,
    }
}

/// `eta = 2 K k1 (K (k4 + k3 + tau k2 + tau^2 k1 / 2) - 1)`.
///
/// Nonnegativity of `eta` is necessary for `sup |F(j w)| <= 1`: the magnitude
/// is 1 at zero frequency with zero slope, and its curvature there is
/// `-eta / (K k1)^2`.
pub fn string_stability_eta(p: &VehicleParams, k: &Gains) -> f64 {
    let kk = p.k_ratio;
    2.0 * kk * k.k1 * (kk * (k.k4 + k.k3 + p.tau * k.k2 + p.tau * p.tau * k.k1 / 2.0) - 1.0)
}

/// Curvature of `|F(j w)|` in the `w -> 0+` limit: `-eta / (K k1)^2`.
pub fn zero_frequency_curvature(p: &VehicleParams, k: &Gains) -> f64 {
    let kk1 = p.k_ratio * k.k1;
    -string_stability_eta(p, k) / (kk1 * kk1)
}
