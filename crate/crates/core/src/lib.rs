//! Simulation and verification laboratory for stochastic differential
//! equations with infinite memory,
//!
//! ```text
//!     dX(t) = a(pi_t X) dt + dW(t),
//! ```
//!
//! where `pi_t X` is the entire past `s <= t` of the solution and the drift
//! `a` reads it through exponentially weighted integrals.  The crate provides
//!
//! * [`history`] — finite representations of infinite pasts: a sliding
//!   sample window plus O(1) kernel accumulators and parametric tails;
//! * [`drift`] — concrete drift families (Ornstein-Uhlenbeck, memory
//!   modulated damping, linear distributed delay) with declared regularity
//!   constants and empirical estimators that audit those declarations;
//! * [`integrate`] — a deterministic Euler-Maruyama integrator over
//!   counter-based noise ([`noise`]), reproducible bit for bit at any thread
//!   count;
//! * [`stationary`] — stationary law construction by time averaging,
//!   Wasserstein-1 comparisons and quantitative moment, increment and
//!   pathwise-growth checks ([`stationary::checks`]);
//! * [`girsanov`] — drift discrepancy profiles, Novikov certificates and
//!   Radon-Nikodym density sampling for the change of measure between
//!   solutions started from different pasts, plus synchronous coupling;
//! * [`lift`] — exact Markovian-lift covariances for the linear distributed
//!   delay family, used as closed-form references;
//! * [`io`] — deterministic CSV / JSON / plot-table artifact builders.
//!
//! All numerics are generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`); the crate root exports `f64` aliases
//! for the common types.

pub mod drift;
pub mod error;
pub mod girsanov;
pub mod history;
pub mod integrate;
pub mod io;
pub mod lift;
pub mod noise;
pub mod real;
pub mod stationary;

pub use error::{Error, Result};
pub use real::Real;

/// Default-precision past history.
pub type History = history::PastHistory<f64>;
/// Default-precision path record (past + future on one grid).
pub type Record = history::PathRecord<f64>;
/// Default-precision drift specification.
pub type Drift = drift::DriftSpec<f64>;
/// Default-precision simulated trajectory.
pub type Path = integrate::Trajectory<f64>;
/// Default-precision empirical measure.
pub type Measure = stationary::EmpiricalMeasure<f64>;
/// Default-precision separation envelope for changes of measure.
pub type Envelope = girsanov::SeparationEnvelope<f64>;
