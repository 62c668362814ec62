//! Parameterizations of the locally stabilizing, box-constrained gain set.
//!
//! The stability region is charted by positive coordinates `(x, y, z)`
//! (plus `w >= 0` when the string-stability necessary condition is included):
//!
//! ```text
//! k1 = x,   k2 = -tau x + y,   k3 = (-T x + y)/(K y) - z,
//! k4 = tau^2 x / 2 - tau y + T x/(K y) + z + w        (constrained chart)
//! ```
//!
//! Each coordinate is a convex combination of sequentially computed lower and
//! upper bounds driven by a unit-interval parameter `psi_i`; squashing maps
//! turn unconstrained reals into unit-interval parameters. The inverse chart
//! recovers the unconstrained parameters from a gain vector strictly inside
//! the manifold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Gains, VehicleParams};

/// Clamp floor for the squashing-ratio argument before the logarithm.
const RATIO_CLAMP: f64 = 1e-12;
/// Relative overshoot beyond a bound interval that still counts as a
/// boundary hit rather than an off-manifold point.
const BOUNDARY_TOL: f64 = 1e-9;

/// Lower and upper bounds on the four control parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    pub lower: [f64; 4],
    pub upper: [f64; 4],
}

impl BoxBounds {
    /// Validates `lower_i <= upper_i` and that the spacing-gain interval
    /// reaches above zero (otherwise no locally stable gain exists at all).
    pub fn new(lower: [f64; 4], upper: [f64; 4]) -> Result<Self> {
        for i in 0..4 {
            if !lower[i].is_finite() || !upper[i].is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "bounds for k{} must be finite",
                    i + 1
                )));
            }
            if lower[i] > upper[i] {
                return Err(Error::InvalidArgument(format!(
                    "lower bound {} exceeds upper bound {} for k{}",
                    lower[i],
                    upper[i],
                    i + 1
                )));
            }
        }
        if upper[0] <= 0.0 {
            return Err(Error::InfeasibleBox(format!(
                "k1 upper bound {} is not positive; the local-stability region is empty",
                upper[0]
            )));
        }
        Ok(Self { lower, upper })
    }

    /// Symmetric box `[-m, m]` on `k2..k4` with `k1` in `[0, m]` — the shape
    /// used by the benchmark experiments.
    pub fn symmetric(m: f64) -> Result<Self> {
        Self::new([0.0, -m, -m, -m], [m, m, m, m])
    }

    /// True when every gain lies inside the box within `tol`.
    pub fn contains(&self, k: &Gains, tol: f64) -> bool {
        k.as_array()
            .iter()
            .enumerate()
            .all(|(i, v)| *v >= self.lower[i] - tol && *v <= self.upper[i] + tol)
    }
}

/// Unit-interval coordinates of the stability-region chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiVector(pub [f64; 4]);

impl PsiVector {
    pub fn new(psi: [f64; 4]) -> Result<Self> {
        if psi.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument(format!(
                "psi must lie in [0, 1]^4, got {psi:?}"
            )));
        }
        Ok(Self(psi))
    }
}

/// Unconstrained coordinates feeding the sigmoid squash.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaVector(pub [f64; 4]);

/// Unconstrained coordinates feeding the rational squash (stage-1 chart).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuVector(pub [f64; 4]);

/// Positive chart coordinates for the feedback gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Xyz {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Chart coordinates including the string-stability slack `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Xyzw {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

/// Logistic squash `1 / (1 + e^{-zeta beta})`.
pub fn sigmoid(beta: f64, zeta: f64) -> f64 {
    1.0 / (1.0 + (-zeta * beta).exp())
}

/// Inverse of [`sigmoid`]: `(1/zeta) ln(psi / (1 - psi))`, with the argument
/// clamped away from 0 and 1.
pub fn sigmoid_inv(psi: f64, zeta: f64) -> f64 {
    let t = psi.clamp(RATIO_CLAMP, 1.0 - RATIO_CLAMP);
    (t / (1.0 - t)).ln() / zeta
}

/// Rational squash `1 / (1 + nu beta^2)`, mapping the reals onto `(0, 1]`.
pub fn rho(beta: f64, nu: f64) -> f64 {
    1.0 / (1.0 + nu * beta * beta)
}

fn convex(psi: f64, lo: f64, hi: f64) -> f64 {
    (1.0 - psi) * lo + psi * hi
}

/// Validates a bound interval. Chart boundaries can make an interval
/// degenerate up to rounding; such intervals collapse to their lower point
/// instead of reporting a spurious infeasibility.
fn check_interval(name: &str, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if lo <= hi {
        return Ok((lo, hi));
    }
    if lo - hi <= 1e-12 * lo.abs().max(hi.abs()).max(1.0) {
        return Ok((lo, lo));
    }
    Err(Error::InfeasibleBox(format!(
        "{name} interval is empty: lower {lo} exceeds upper {hi}"
    )))
}

/// Bounds for `x` given the box.
fn x_bounds(b: &BoxBounds, eps: f64) -> (f64, f64) {
    (eps.max(b.lower[0]), b.upper[0])
}

/// Bounds for `y` given `x`. When `with_quadratic` is set, the lower bound
/// additionally keeps the `z` interval of the constrained chart nonempty via
/// the positive root of `tau y^2 - xi(x) y - T x / K`.
fn y_bounds(
    x: f64,
    p: &VehicleParams,
    b: &BoxBounds,
    eps: f64,
    with_quadratic: bool,
) -> Result<(f64, f64)> {
    let kk = p.k_ratio;
    let denom = -kk * b.lower[2] + 1.0 - kk * eps;
    if denom <= 0.0 {
        return Err(Error::InfeasibleBox(format!(
            "k3 lower bound {} reaches the acceleration-feedback limit 1/K = {}",
            b.lower[2],
            1.0 / kk
        )));
    }
    let mut lo = eps.max(p.tau * x + b.lower[1]).max(p.t_lag * x / denom);
    if with_quadratic {
        lo = lo.max(positive_quadratic_root(x, p, b, eps));
    }
    let hi = p.tau * x + b.upper[1];
    Ok((lo, hi))
}

/// Positive root of `tau y^2 - xi(x) y - T x / K` with
/// `xi(x) = tau^2 x / 2 + eps - k4_upper`. The discriminant is a square plus
/// a positive term, so the root always exists; the `tau -> 0` limit is the
/// linear-case solution.
fn positive_quadratic_root(x: f64, p: &VehicleParams, b: &BoxBounds, eps: f64) -> f64 {
    let xi = p.tau * p.tau * x / 2.0 + eps - b.upper[3];
    let tx_over_k = p.t_lag * x / p.k_ratio;
    if p.tau == 0.0 {
        // tau y^2 degenerates: -xi y - Tx/K >= 0 needs xi < 0 and
        // y >= Tx/(-K xi); otherwise no positive y qualifies
        return if xi < 0.0 {
            tx_over_k / (-xi)
        } else {
            f64::INFINITY
        };
    }
    (xi + (xi * xi + 4.0 * p.tau * tx_over_k).sqrt()) / (2.0 * p.tau)
}

/// `(-T x + y) / (K y)`: the term `z` is subtracted from to produce `k3`.
/// Shared by the bounds, the chart, and the inverse chart so that rounding
/// cancels between them.
fn k3_base(x: f64, y: f64, p: &VehicleParams) -> f64 {
    (-p.t_lag * x + y) / (p.k_ratio * y)
}

/// `-tau^2 x / 2 + tau y - T x/(K y) - z`: the term `w` is added to (with the
/// feedforward bound) to produce `k4`. Shared like [`k3_base`].
fn w_base(x: f64, y: f64, z: f64, p: &VehicleParams) -> f64 {
    -p.tau * p.tau * x / 2.0 + p.tau * y - p.t_lag * x / (p.k_ratio * y) - z
}

/// Bounds for `z` given `x` and `y`. When `with_feedforward` is set, the
/// upper bound additionally keeps the `w` interval nonempty.
fn z_bounds(
    x: f64,
    y: f64,
    p: &VehicleParams,
    b: &BoxBounds,
    eps: f64,
    with_feedforward: bool,
) -> (f64, f64) {
    let base = k3_base(x, y, p);
    let lo = eps.max(base - b.upper[2]);
    let mut hi = base - b.lower[2];
    if with_feedforward {
        hi = hi.min(w_base(x, y, 0.0, p) + b.upper[3]);
    }
    (lo, hi)
}

/// Bounds for the string-stability slack `w` given `x, y, z`.
fn w_bounds(x: f64, y: f64, z: f64, p: &VehicleParams, b: &BoxBounds) -> (f64, f64) {
    let base = w_base(x, y, z, p);
    ((base + b.lower[3]).max(0.0), base + b.upper[3])
}

/// Chart from unit-interval parameters to `(x, y, z)` honoring the box on
/// the three feedback gains.
pub fn stability_chart(psi: &PsiVector, p: &VehicleParams, b: &BoxBounds, eps: f64) -> Result<Xyz> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must be > 0, got {eps}"
        )));
    }
    let (xl, xu) = x_bounds(b, eps);
    let (xl, xu) = check_interval("x", xl, xu)?;
    let x = convex(psi.0[0], xl, xu);
    let (yl, yu) = y_bounds(x, p, b, eps, false)?;
    let (yl, yu) = check_interval("y", yl, yu)?;
    let y = convex(psi.0[1], yl, yu);
    let (zl, zu) = z_bounds(x, y, p, b, eps, false);
    let (zl, zu) = check_interval("z", zl, zu)?;
    let z = convex(psi.0[2], zl, zu);
    Ok(Xyz { x, y, z })
}

/// Chart from unit-interval parameters to `(x, y, z, w)`, honoring the full
/// box and the string-stability necessary condition `w >= 0`.
pub fn constrained_chart(
    psi: &PsiVector,
    p: &VehicleParams,
    b: &BoxBounds,
    eps: f64,
) -> Result<Xyzw> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must be > 0, got {eps}"
        )));
    }
    let (xl, xu) = x_bounds(b, eps);
    let (xl, xu) = check_interval("x", xl, xu)?;
    let x = convex(psi.0[0], xl, xu);
    let (yl, yu) = y_bounds(x, p, b, eps, true)?;
    let (yl, yu) = check_interval("y", yl, yu)?;
    let y = convex(psi.0[1], yl, yu);
    let (zl, zu) = z_bounds(x, y, p, b, eps, true);
    let (zl, zu) = check_interval("z", zl, zu)?;
    let z = convex(psi.0[2], zl, zu);
    let (wl, wu) = w_bounds(x, y, z, p, b);
    let (wl, wu) = check_interval("w", wl, wu)?;
    let w = convex(psi.0[3], wl, wu);
    Ok(Xyzw { x, y, z, w })
}

fn gains_from_xyz(x: f64, y: f64, z: f64, k4: f64, p: &VehicleParams) -> Gains {
    Gains {
        k1: x,
        k2: -p.tau * x + y,
        k3: k3_base(x, y, p) - z,
        k4,
    }
}

/// Locally stabilizing box-constrained gains from unconstrained parameters;
/// the feedforward gain is squashed independently onto its box interval.
pub fn stabilizing_gains(
    kappa: &KappaVector,
    p: &VehicleParams,
    b: &BoxBounds,
    zeta: f64,
    eps: f64,
) -> Result<Gains> {
    let psi = PsiVector(kappa.0.map(|k| sigmoid(k, zeta)));
    let xyz = stability_chart(&psi, p, b, eps)?;
    let k4 = convex(psi.0[3], b.lower[3], b.upper[3]);
    Ok(gains_from_xyz(xyz.x, xyz.y, xyz.z, k4, p))
}

/// Locally stabilizing box-constrained gains that additionally satisfy the
/// string-stability necessary condition; the feedforward gain is determined
/// by the chart.
pub fn constrained_gains(
    kappa: &KappaVector,
    p: &VehicleParams,
    b: &BoxBounds,
    zeta: f64,
    eps: f64,
) -> Result<Gains> {
    let psi = PsiVector(kappa.0.map(|k| sigmoid(k, zeta)));
    let xyzw = constrained_chart(&psi, p, b, eps)?;
    let Xyzw { x, y, z, w } = xyzw;
    let k4 = w - w_base(x, y, z, p);
    Ok(gains_from_xyz(x, y, z, k4, p))
}

/// Normalized position of `value` inside `[lo, hi]`, clamped near the
/// boundary; positions beyond the tolerance are off-manifold.
///
/// The boundary tolerance is relative to the interval, floored by the
/// absolute rounding noise of the gain arithmetic — tight chart corners can
/// shrink an interval to within a few ulps of the gains themselves.
fn interval_position(coordinate: usize, value: f64, lo: f64, hi: f64) -> Result<f64> {
    let span = hi - lo;
    let slack = (BOUNDARY_TOL * span).max(1e-12 * value.abs().max(hi.abs()).max(1.0));
    if value < lo - slack || value > hi + slack {
        return Err(Error::NotInManifold {
            coordinate,
            detail: format!("value {value} outside bound interval [{lo}, {hi}]"),
        });
    }
    if !(span > 0.0) {
        // a pinned coordinate: any parameter reproduces the point interval
        return Ok(0.5);
    }
    let t = (value - lo) / span;
    Ok(t.clamp(RATIO_CLAMP, 1.0 - RATIO_CLAMP))
}

/// Inverse chart: recovers the unconstrained parameters from gains strictly
/// inside the constrained manifold. Bounds are recomputed sequentially, each
/// from the previously extracted coordinates, and every manifold coordinate
/// is rebuilt with the same base expressions as the forward chart so that
/// rounding cancels in the position ratios.
pub fn extract_kappa(
    k: &Gains,
    p: &VehicleParams,
    b: &BoxBounds,
    zeta: f64,
    eps: f64,
) -> Result<KappaVector> {
    let (xl, xu) = x_bounds(b, eps);
    let (xl, xu) = check_interval("x", xl, xu)?;
    // phi1 = k1
    let t1 = interval_position(1, k.k1, xl, xu)?;
    let kappa1 = sigmoid_inv(t1, zeta);
    let x = convex(sigmoid(kappa1, zeta), xl, xu);

    // phi2 = tau k1 + k2, the chart's y
    let phi2 = p.tau * x + k.k2;
    if phi2 <= 0.0 {
        return Err(Error::NotInManifold {
            coordinate: 2,
            detail: format!("tau k1 + k2 = {phi2} is not positive"),
        });
    }
    let (yl, yu) = y_bounds(x, p, b, eps, true)?;
    let (yl, yu) = check_interval("y", yl, yu)?;
    let t2 = interval_position(2, phi2, yl, yu)?;
    let kappa2 = sigmoid_inv(t2, zeta);
    let y = convex(sigmoid(kappa2, zeta), yl, yu);

    // phi3 = -T k1 / (K (tau k1 + k2)) + 1/K - k3, the chart's z
    let phi3 = k3_base(x, y, p) - k.k3;
    let (zl, zu) = z_bounds(x, y, p, b, eps, true);
    let (zl, zu) = check_interval("z", zl, zu)?;
    let t3 = interval_position(3, phi3, zl, zu)?;
    let kappa3 = sigmoid_inv(t3, zeta);
    let z = convex(sigmoid(kappa3, zeta), zl, zu);

    // phi4 = tau^2 k1 / 2 + tau k2 + k3 + k4 - 1/K, the chart's w
    let phi4 = k.k4 + w_base(x, y, z, p);
    let (wl, wu) = w_bounds(x, y, z, p, b);
    let (wl, wu) = check_interval("w", wl, wu)?;
    let t4 = interval_position(4, phi4, wl, wu)?;
    let kappa4 = sigmoid_inv(t4, zeta);

    Ok(KappaVector([kappa1, kappa2, kappa3, kappa4]))
}

/// Box-interpolating chart for the first synthesis stage: every gain is an
/// independent rational-squash interpolation between its bounds. Satisfies
/// the box only; stability is the optimizer's job here.
pub fn box_interp_gains(mu: &MuVector, b: &BoxBounds, nu: f64, eps: f64) -> Gains {
    let l1 = eps.max(b.lower[0]);
    let r = mu.0.map(|m| rho(m, nu));
    Gains {
        k1: convex(r[0], l1, b.upper[0]),
        k2: convex(r[1], b.lower[1], b.upper[1]),
        k3: convex(r[2], b.lower[2], b.upper[2]),
        k4: convex(r[3], b.lower[3], b.upper[3]),
    }
}
