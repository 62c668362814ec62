//! Controller synthesis for connected-automated-vehicle (CAV) platoons under
//! communication delay.
//!
//! The crate synthesizes box-constrained feedback/feedforward gains
//! `k = [k1 k2 k3 k4]` for the third-order longitudinal CAV model so that the
//! closed loop is locally stable and string stable, and the peak of the
//! disturbance-propagation transfer function over a frequency band
//! `[omega1, omega2]` is minimized. The delay term `e^{-theta s}` is handled
//! with a diagonal Pade approximation; all certificates are re-checked on the
//! exact delay model.
//!
//! Module layout:
//! - [`model`]: plant, control law, exact delay transfer function, analytic
//!   stability conditions;
//! - [`pade`]: diagonal Pade approximation and the rational approximant;
//! - [`norms`]: banded and global peak-gain (H-infinity) computation;
//! - [`param`]: stability-region parameterizations and their inverse;
//! - [`optimize`]: Nelder-Mead simplex with restarts and multi-start;
//! - [`synthesis`]: the two-stage synthesis procedure;
//! - [`sim`]: time-domain platoon simulator with delayed feedforward.

// negated comparisons like `!(x > 0.0)` are deliberate throughout: they
// reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod model;
pub mod norms;
pub mod optimize;
pub mod pade;
pub mod param;
pub mod sim;
pub mod synthesis;

pub use error::{Error, Result};
pub use model::{DelayTF, Gains, StabilityReport, StateSpace, VehicleParams};
pub use param::{BoxBounds, KappaVector, MuVector, PsiVector};
pub use synthesis::{SynthesisConfig, SynthesisResult};
