//! Banded and global peak-gain computation for magnitude functions.
//!
//! Works identically for the exact delay magnitude (which is not rational)
//! and for rational approximants: a coarse scan on a mixed linear/log grid
//! brackets every local maximum, each bracket is refined by golden-section
//! search, and the largest refined value wins.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::VehicleParams;

/// Location and value of a band peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakResult {
    /// Frequency of the peak (rad/s).
    pub omega_star: f64,
    /// Peak magnitude.
    pub peak: f64,
    /// Number of magnitude evaluations spent.
    pub evaluations: usize,
}

/// Tunables of the scan-and-refine peak search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Coarse grid size; half the points uniform in omega, half uniform in
    /// log omega.
    pub grid_points: usize,
    /// Each bracket is refined to width `refine_frac * (omega2 - omega1)`.
    pub refine_frac: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            grid_points: 4000,
            refine_frac: 1e-10,
        }
    }
}

/// Tunables of the global peak search: band bounds plus the scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalConfig {
    pub scan: ScanConfig,
    /// Lower end of the searched band; the ω -> 0+ limit is handled
    /// analytically (the magnitude family has unit DC gain).
    pub omega_min: f64,
    /// Upper end of the searched band; the tail beyond is spot-checked.
    pub omega_max: f64,
}

impl GlobalConfig {
    /// Band wide enough for the plant's fastest dynamics: `omega_max` is a
    /// thousand times the largest of `1/T`, `1/theta` (when delayed) and the
    /// band edge `omega2`, and at least `1e3`.
    pub fn for_plant(p: &VehicleParams, omega2: f64) -> Self {
        let mut rate = 1.0 / p.t_lag;
        if p.theta > 0.0 {
            rate = rate.max(1.0 / p.theta);
        }
        rate = rate.max(omega2);
        Self {
            scan: ScanConfig::default(),
            omega_min: 1e-6,
            omega_max: (1e3 * rate).max(1e3),
        }
    }

    pub fn with_scan(mut self, scan: ScanConfig) -> Self {
        self.scan = scan;
        self
    }
}

struct CountedFn<'a, F: Fn(f64) -> f64> {
    f: &'a F,
    count: Cell<usize>,
}

impl<'a, F: Fn(f64) -> f64> CountedFn<'a, F> {
    fn new(f: &'a F) -> Self {
        Self {
            f,
            count: Cell::new(0),
        }
    }

    fn eval(&self, omega: f64) -> f64 {
        self.count.set(self.count.get() + 1);
        let v = (self.f)(omega);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }
}

/// Golden-section maximization on `[a, b]` down to the given interval width.
///
/// The width is floored at a few ulps of the endpoints, with an iteration cap
/// as a second stop — a sub-ulp request could otherwise never terminate.
fn golden_max<F: Fn(f64) -> f64>(
    f: &CountedFn<F>,
    mut a: f64,
    mut b: f64,
    width: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let width = width.max(4.0 * f64::EPSILON * (a.abs() + b.abs()));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f.eval(c);
    let mut fd = f.eval(d);
    let mut budget = 256usize;
    while b - a > width && budget > 0 {
        budget -= 1;
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f.eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f.eval(d);
        }
    }
    let mid = 0.5 * (a + b);
    (mid, f.eval(mid))
}

/// Peak of `mag` over the closed band `[omega1, omega2]`.
///
/// `mag` must be continuous on the band; non-finite values are treated as
/// negative infinity by the bracketing scan, so a totalized magnitude that
/// maps domain errors to `f64::INFINITY` is also acceptable (the peak then
/// reports infinity).
pub fn peak_on_band<F: Fn(f64) -> f64>(
    mag: F,
    omega1: f64,
    omega2: f64,
    cfg: &ScanConfig,
) -> Result<PeakResult> {
    if !(omega1 > 0.0) || !(omega2 > omega1) {
        return Err(Error::InvalidArgument(format!(
            "band must satisfy 0 < omega1 < omega2, got [{omega1}, {omega2}]"
        )));
    }
    let f = CountedFn::new(&mag);
    let grid = mixed_grid(omega1, omega2, cfg.grid_points.max(16));
    let values: Vec<f64> = grid.iter().map(|&w| f.eval(w)).collect();

    // infinity anywhere on the grid short-circuits refinement
    if let Some(i) = values.iter().position(|v| v.is_infinite() && *v > 0.0) {
        return Ok(PeakResult {
            omega_star: grid[i],
            peak: f64::INFINITY,
            evaluations: f.count.get(),
        });
    }

    let width = cfg.refine_frac * (omega2 - omega1);
    let mut best_w = grid[0];
    let mut best_v = values[0];
    let n = grid.len();
    for i in 0..n {
        let is_max =
            (i == 0 || values[i] > values[i - 1]) && (i + 1 == n || values[i] >= values[i + 1]);
        if !is_max {
            continue;
        }
        let a = if i == 0 { grid[0] } else { grid[i - 1] };
        let b = if i + 1 == n { grid[n - 1] } else { grid[i + 1] };
        let (w, v) = if b > a {
            golden_max(&f, a, b, width)
        } else {
            (grid[i], values[i])
        };
        // keep the raw grid value too in case refinement drifted off a cusp
        for (ww, vv) in [(w, v), (grid[i], values[i])] {
            if vv > best_v || (vv == best_v && ww < best_w) {
                best_v = vv;
                best_w = ww;
            }
        }
    }
    Ok(PeakResult {
        omega_star: best_w,
        peak: best_v,
        evaluations: f.count.get(),
    })
}

fn mixed_grid(omega1: f64, omega2: f64, n: usize) -> Vec<f64> {
    let n_lin = n / 2;
    let n_log = n - n_lin;
    let mut grid = Vec::with_capacity(n + 2);
    for i in 0..n_lin {
        grid.push(omega1 + (omega2 - omega1) * i as f64 / (n_lin - 1) as f64);
    }
    let (l1, l2) = (omega1.ln(), omega2.ln());
    for i in 0..n_log {
        grid.push((l1 + (l2 - l1) * i as f64 / (n_log - 1) as f64).exp());
    }
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    grid.dedup();
    // clamp endpoints against exp/ln round-off
    if let Some(first) = grid.first_mut() {
        *first = omega1;
    }
    if let Some(last) = grid.last_mut() {
        *last = omega2;
    }
    grid
}

/// Supremum of `mag` over `(0, inf)` for magnitude functions with unit DC
/// gain and a strictly proper tail.
///
/// The ω -> 0+ limit contributes 1; the band `(omega_min, omega_max]` is
/// searched by [`peak_on_band`]; the tail beyond `omega_max` is verified to
/// stay monotonically below the returned peak by spot checks at `2 omega_max`
/// and `4 omega_max`. A failed tail check widens the band once and retries;
/// a second failure is an internal error.
pub fn hinf_global<F: Fn(f64) -> f64>(mag: F, cfg: &GlobalConfig) -> Result<PeakResult> {
    let mut omega_max = cfg.omega_max;
    for attempt in 0..2 {
        let band = peak_on_band(&mag, cfg.omega_min, omega_max, &cfg.scan)?;
        let peak = band.peak.max(1.0);
        let omega_star = if band.peak >= 1.0 {
            band.omega_star
        } else {
            cfg.omega_min
        };
        if peak.is_infinite() {
            return Ok(PeakResult {
                omega_star,
                peak,
                evaluations: band.evaluations,
            });
        }
        let m1 = mag(2.0 * omega_max);
        let m2 = mag(4.0 * omega_max);
        let slack = 1e-12 * peak.max(1.0);
        if m1 <= peak + slack && m2 <= m1 + slack {
            return Ok(PeakResult {
                omega_star,
                peak,
                evaluations: band.evaluations + 2,
            });
        }
        if attempt == 0 {
            omega_max *= 8.0;
        } else {
            return Err(Error::Internal(format!(
                "tail not decaying beyond omega_max = {omega_max}: m({:.3e}) = {m1}, m({:.3e}) = {m2}, peak = {peak}",
                2.0 * omega_max,
                4.0 * omega_max
            )));
        }
    }
    unreachable!("loop returns on both attempts");
}

/// Signed relative error `100 (exact - approx) / exact` sampled on a uniform
/// grid over the band.
pub fn relative_error_profile<E, A>(
    exact: E,
    approx: A,
    omega1: f64,
    omega2: f64,
    npoints: usize,
) -> Vec<(f64, f64)>
where
    E: Fn(f64) -> f64,
    A: Fn(f64) -> f64,
{
    let n = npoints.max(2);
    (0..n)
        .map(|i| {
            let w = omega1 + (omega2 - omega1) * i as f64 / (n - 1) as f64;
            let e = exact(w);
            (w, 100.0 * (e - approx(w)) / e)
        })
        .collect()
}
