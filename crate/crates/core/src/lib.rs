//! Glauber dynamics on vertex-weighted exponential random graphs with edge
//! and triangle terms.
//!
//! * [`model`]: Gibbs weights, update probabilities, the limiting update
//!   map `lambda` and the free-energy density `phi`.
//! * [`analysis`]: fixed points, phase classification, the critical curve
//!   and phase-diagram scans.
//! * [`exactchain`]: exact computations on the `(n+1)`-level magnetization
//!   chain plus a brute-force `2^n` oracle.
//! * [`dynamics`]: simulation of the full spin chain, monotone coupling,
//!   burn-in and escape times.
//! * [`experiments`]: sweeps over `n` and scaling-law fits.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod exactchain;
pub mod experiments;
pub mod model;
mod numeric;
pub mod rng;

pub use error::{Error, Result};
pub use model::{ModelParams, MomentPair, SpinConfiguration};
pub use numeric::log_sum_exp;
