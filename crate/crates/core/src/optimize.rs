//! Nelder-Mead simplex search with an automatic restart, plus a seeded
//! multi-start driver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simplex-search tunables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub max_iters: usize,
    /// Terminate when the simplex diameter drops below this.
    pub x_tol: f64,
    /// Terminate when the value spread over the simplex drops below this.
    pub f_tol: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Per-axis initial simplex step: `max(initial_step, initial_step * |x0_i|)`.
    pub initial_step: f64,
    /// Automatic restarts from the best point after convergence.
    pub restarts: usize,
    /// Seed for samplers driven by this optimizer (the simplex itself is
    /// deterministic).
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            x_tol: 1e-10,
            f_tol: 1e-10,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: 0.05,
            restarts: 1,
            seed: 0,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if !(self.reflection > 0.0) {
            return Err(Error::InvalidArgument("reflection must be > 0".into()));
        }
        if !(self.expansion > 1.0) {
            return Err(Error::InvalidArgument("expansion must be > 1".into()));
        }
        if !(self.contraction > 0.0 && self.contraction < 1.0) {
            return Err(Error::InvalidArgument(
                "contraction must be in (0, 1)".into(),
            ));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidArgument("shrink must be in (0, 1)".into()));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::InvalidArgument("initial_step must be > 0".into()));
        }
        if !(self.x_tol >= 0.0) || !(self.f_tol >= 0.0) {
            return Err(Error::InvalidArgument("tolerances must be >= 0".into()));
        }
        Ok(())
    }
}

/// Outcome of one simplex search.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// False when the iteration budget ran out before the tolerances were
    /// met; the result is still the best point seen.
    pub converged: bool,
    /// Best value after each iteration, across all restarts.
    pub trace: Vec<f64>,
}

struct Vertex {
    x: Vec<f64>,
    f: f64,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Deterministic ordering: by value, ties broken lexicographically by
/// coordinates.
fn vertex_cmp(a: &Vertex, b: &Vertex) -> std::cmp::Ordering {
    a.f.total_cmp(&b.f).then_with(|| {
        for (xa, xb) in a.x.iter().zip(&b.x) {
            let c = xa.total_cmp(xb);
            if c != std::cmp::Ordering::Equal {
                return c;
            }
        }
        std::cmp::Ordering::Equal
    })
}

fn simplex_diameter(simplex: &[Vertex]) -> f64 {
    let best = &simplex[0].x;
    simplex[1..]
        .iter()
        .map(|v| {
            v.x.iter()
                .zip(best)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Minimizes `f` from `x0` by the downhill-simplex method.
///
/// The objective must be total (return a finite value or `+inf`) — there is
/// no constraint handling here. Identical inputs produce identical iterate
/// sequences.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    opts: &OptimizerOptions,
) -> Result<OptimResult> {
    opts.validate()?;
    if x0.is_empty() {
        return Err(Error::InvalidArgument("x0 must be non-empty".into()));
    }
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        sanitize(f(x))
    };

    let mut trace = Vec::new();
    let mut iterations = 0usize;
    let mut converged = false;
    let mut center = x0.to_vec();
    let mut center_f = eval(&center);

    for _run in 0..=opts.restarts {
        let remaining = opts.max_iters.saturating_sub(iterations);
        if remaining == 0 {
            break;
        }
        let (best, best_f, used, done) =
            simplex_run(&mut eval, &center, center_f, opts, &mut trace, remaining);
        iterations += used;
        converged = done;
        // restart from the best point; a restart that cannot improve
        // terminates immediately by the same tolerances
        center = best;
        center_f = best_f;
    }

    Ok(OptimResult {
        x: center,
        f: center_f,
        iterations,
        evaluations,
        converged,
        trace,
    })
}

/// One simplex run around `x0`; returns (best x, best f, iterations used,
/// converged by tolerance).
fn simplex_run<F: FnMut(&[f64]) -> f64>(
    eval: &mut F,
    x0: &[f64],
    f0: f64,
    opts: &OptimizerOptions,
    trace: &mut Vec<f64>,
    iter_budget: usize,
) -> (Vec<f64>, f64, usize, bool) {
    let n = x0.len();
    let mut simplex: Vec<Vertex> = Vec::with_capacity(n + 1);
    simplex.push(Vertex {
        x: x0.to_vec(),
        f: f0,
    });
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step.max(opts.initial_step * x[i].abs());
        let fx = eval(&x);
        simplex.push(Vertex { x, f: fx });
    }
    simplex.sort_by(vertex_cmp);

    let mut iterations = 0usize;
    let mut converged = false;
    while iterations < iter_budget {
        iterations += 1;

        // converged once the simplex is tight in both coordinates and values;
        // equal endpoints (flat plateaus, including infinite penalties) count
        // as zero spread
        let spread = if simplex[n].f == simplex[0].f {
            0.0
        } else {
            simplex[n].f - simplex[0].f
        };
        if simplex_diameter(&simplex) < opts.x_tol && spread.abs() < opts.f_tol {
            converged = true;
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(&v.x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].x.clone();
        let worst_f = simplex[n].f;
        let second_worst_f = simplex[n - 1].f;

        let point = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = point(opts.reflection);
        let f_reflected = eval(&reflected);

        let replacement = if f_reflected < simplex[0].f {
            let expanded = point(opts.reflection * opts.expansion);
            let f_expanded = eval(&expanded);
            if f_expanded < f_reflected {
                Some(Vertex {
                    x: expanded,
                    f: f_expanded,
                })
            } else {
                Some(Vertex {
                    x: reflected,
                    f: f_reflected,
                })
            }
        } else if f_reflected < second_worst_f {
            Some(Vertex {
                x: reflected,
                f: f_reflected,
            })
        } else if f_reflected < worst_f {
            // outside contraction
            let contracted = point(opts.reflection * opts.contraction);
            let f_contracted = eval(&contracted);
            (f_contracted <= f_reflected).then_some(Vertex {
                x: contracted,
                f: f_contracted,
            })
        } else {
            // inside contraction
            let contracted = point(-opts.contraction);
            let f_contracted = eval(&contracted);
            (f_contracted < worst_f).then_some(Vertex {
                x: contracted,
                f: f_contracted,
            })
        };

        match replacement {
            Some(v) => {
                simplex[n] = v;
            }
            None => {
                // shrink toward the best vertex
                let best = simplex[0].x.clone();
                for v in &mut simplex[1..] {
                    for (xi, bi) in v.x.iter_mut().zip(&best) {
                        *xi = bi + opts.shrink * (*xi - *bi);
                    }
                    v.f = eval(&v.x);
                }
            }
        }
        simplex.sort_by(vertex_cmp);
        trace.push(simplex[0].f);
    }

    let best = &simplex[0];
    (best.x.clone(), best.f, iterations, converged)
}

/// Runs independent simplex searches from `sampler(0..n_starts)` and returns
/// the best outcome; ties break toward the lexicographically smaller point,
/// so the result does not depend on evaluation order.
///
/// `threads > 1` evaluates starts in parallel chunks; the reduction is
/// order-independent by construction.
pub fn multi_start<F, S>(
    f: F,
    sampler: S,
    n_starts: usize,
    opts: &OptimizerOptions,
    threads: usize,
) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
    S: Fn(usize) -> Vec<f64> + Sync,
{
    if n_starts == 0 {
        return Err(Error::InvalidArgument("n_starts must be >= 1".into()));
    }
    opts.validate()?;
    let results = run_starts(&f, &sampler, 0..n_starts, opts, threads)?;
    let mut best: Option<OptimResult> = None;
    for r in results {
        let replace = match &best {
            None => true,
            Some(b) => {
                r.f.total_cmp(&b.f)
                    .then_with(|| {
                        for (xa, xb) in r.x.iter().zip(&b.x) {
                            let c = xa.total_cmp(xb);
                            if c != std::cmp::Ordering::Equal {
                                return c;
                            }
                        }
                        std::cmp::Ordering::Equal
                    })
                    .is_lt()
            }
        };
        if replace {
            best = Some(r);
        }
    }
    Ok(best.expect("n_starts >= 1"))
}

/// Simplex searches for a range of start indices, preserving index order in
/// the output. Used by [`multi_start`] and by stage-wise drivers that need
/// per-start results.
pub(crate) fn run_starts<F, S>(
    f: &F,
    sampler: &S,
    range: std::ops::Range<usize>,
    opts: &OptimizerOptions,
    threads: usize,
) -> Result<Vec<OptimResult>>
where
    F: Fn(&[f64]) -> f64 + Sync,
    S: Fn(usize) -> Vec<f64> + Sync,
{
    let indices: Vec<usize> = range.collect();
    if threads <= 1 || indices.len() <= 1 {
        return indices
            .iter()
            .map(|&i| nelder_mead(f, &sampler(i), opts))
            .collect();
    }
    let chunk = indices.len().div_ceil(threads);
    let mut out: Vec<Option<Result<OptimResult>>> = Vec::new();
    out.resize_with(indices.len(), || None);
    std::thread::scope(|scope| {
        for (slot_chunk, idx_chunk) in out.chunks_mut(chunk).zip(indices.chunks(chunk)) {
            scope.spawn(move || {
                for (slot, &i) in slot_chunk.iter_mut().zip(idx_chunk) {
                    *slot = Some(nelder_mead(f, &sampler(i), opts));
                }
            });
        }
    });
    out.into_iter()
        .map(|r| r.expect("all slots filled"))
        .collect()
}
