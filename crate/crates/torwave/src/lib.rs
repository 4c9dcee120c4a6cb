//! Arithmetic random waves on the two-dimensional flat torus.
//!
//! The crate enumerates the lattice sets behind toral Laplace eigenspaces,
//! samples random eigenfunctions under Gaussian and non-Gaussian coefficient
//! ensembles, counts nodal intersections with analytic positively curved
//! curves, and runs Monte Carlo experiments against the known expectation,
//! variance, repulsion, large-sieve and concentration behaviour of the
//! intersection count.
//!
//! Module map:
//!
//! * [`lattice`] — exact integer arithmetic for the frequency sets
//!   `E = {μ ∈ ℤ² : μ₁² + μ₂² = m}`.
//! * [`curve`] — unit-length, unit-speed, positively curved closed curves.
//! * [`wave`] — coefficient sampling and evaluation of the random wave and
//!   its restriction to a curve.
//! * [`zeros`] — nodal intersection counting, stable/unstable interval
//!   classification, Jensen and large-sieve diagnostics.
//! * [`experiments`] — Monte Carlo harness and theory comparators.
//! * [`accept`] — the named acceptance checks run by `torwave accept` and by
//!   the integration test suite.

pub mod accept;
pub mod curve;
pub mod experiments;
pub mod lattice;
pub mod quad;
pub mod wave;
pub mod zeros;

pub use curve::{make_analytic_oval, make_circle, parse_curve, CurveDef};
pub use lattice::{enumerate_lattice_points, EigenvalueSpec, LatticePoint};
pub use wave::{sample_coefficients, Ensemble, RestrictedWave, WaveSample};
pub use zeros::{count_zeros, GridConfig, ZeroCountResult};

/// Evaluation order: a function value or one of its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivOrder {
    Zeroth,
    First,
    Second,
}
