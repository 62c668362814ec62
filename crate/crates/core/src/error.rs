//! Crate-wide error type.

/// Errors produced by model construction, parameterization, norm
/// computation, and synthesis.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A precondition on an argument was violated (bad band, bad order, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The squared-magnitude denominator was non-positive at `omega`; the
    /// plant is not Hurwitz or is degenerate there.
    #[error("magnitude undefined at omega = {omega}: non-positive denominator (non-Hurwitz or degenerate plant)")]
    NonHurwitz { omega: f64 },

    /// The box constraints admit no locally stable gain at the queried
    /// parameter point.
    #[error("infeasible box: {0}")]
    InfeasibleBox(String),

    /// A gain vector cannot be expressed by the constrained parameterization;
    /// `coordinate` (1..=4) is the first offending entry.
    #[error("gains outside the parameterization manifold at coordinate {coordinate}: {detail}")]
    NotInManifold { coordinate: usize, detail: String },

    /// The first synthesis stage exhausted its budget without an accepted
    /// candidate. `best_norm` is the smallest surrogate global norm seen.
    #[error("stage 1 found no feasible candidate (best surrogate norm {best_norm})")]
    Stage1Failed { best_norm: f64 },

    /// An internal consistency check failed.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
