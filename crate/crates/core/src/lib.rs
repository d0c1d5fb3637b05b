//! Robust control optimization for arrays of heaving wave-energy converters.
//!
//! Each device in the array carries a generator with a damping `c` and a
//! stiffness `s`. The library maximizes the expected extracted power over a
//! random incident wave direction while keeping the RMS relative motion
//! between body and free surface below a fraction of the draft (slamming).
//!
//! The pipeline is:
//!
//! * [`climate`]: Pierson–Moskowitz spectrum with equal-power binning,
//!   Donelan directional spreading and the dispersion relation.
//! * [`hydro`]: added mass, radiation damping and excitation force, either
//!   loaded from coefficient files or generated by an analytic surrogate.
//! * [`dynamics`]: impedance assembly, per-frequency state solves, power and
//!   slamming statistics.
//! * [`adjoint`]: stochastic gradients through the adjoint system.
//! * [`optim`]: projection, robust stochastic approximation, sample average
//!   approximation (Monte Carlo or Gauss–Legendre) and the outer quadratic
//!   penalty loop.
//! * [`scenario`]: scenario files, run drivers and output artifacts.
//! * [`verification`]: independent oracles used by the test suites.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjoint;
pub mod climate;
pub mod dynamics;
pub mod error;
pub mod hydro;
pub mod optim;
pub mod problem;
pub mod rng;
pub mod scenario;
pub mod verification;

pub use error::{Error, Result};

pub use num_complex::Complex64;
