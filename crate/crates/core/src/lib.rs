//! Exact wavefunctions of the generalized time-dependent inverted harmonic
//! oscillator built from a quadratic invariant, plus an independent
//! Crank–Nicolson propagator and the checks that tie the two together.
//!
//! Entry points: [`config`] for model documents, [`ermakov`] for the
//! auxiliary function ρ(t), [`wavefunction`] for eigenfunctions, exact
//! solutions and packets, [`propagator`] for time stepping and [`suite`] for
//! the verification suite.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Quadrature tables are quoted to more digits than f64 holds.
#![allow(clippy::excessive_precision)]
#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod cli;
pub mod config;
pub mod error;
pub mod ermakov;
pub mod ode;
pub mod operators;
pub mod params;
pub mod propagator;
pub mod quadrature;
pub mod suite;
pub mod verify;
pub mod wavefunction;
pub mod weber;

pub use error::{Error, Result};
