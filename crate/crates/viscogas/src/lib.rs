//! Numerical laboratory for the flux–viscosity approximation of 1-D
//! non-isentropic polytropic gas flow.
//!
//! The gas is described by density `rho`, velocity `u` and entropy `s`,
//! with pressure law `p = k rho^gamma e^{2s}`. The library integrates the
//! regularized system with a small viscosity `epsilon` and a flux shift
//! `delta` that keeps the density above the floor `2 delta`, and then
//! checks the a-priori structure of the approximation numerically:
//!
//! * [`model`] — pointwise algebra: parameters, pressures, eigenvalues,
//!   Riemann invariants, dissipation source terms.
//! * [`entropy`] — weak entropy–entropy flux pairs built from a generator
//!   function through a singular-weight kernel, with Gauss–Jacobi
//!   quadrature and compatibility checks.
//! * [`solver`] — explicit finite-difference integration of the
//!   regularized system from mollified initial data.
//! * [`monitors`] — maximum-principle, total-variation and
//!   invariant-region monitors over trajectories.
//! * [`verifier`] — weak-formulation residuals, entropy inequality,
//!   energy-form equivalence and refinement studies.
//! * [`riemann`] — exact Riemann solutions of the isentropic 2×2 system,
//!   used as a fixture for the entropy-constant degenerate case.
//! * [`config`] / [`cli`] — the configuration-driven experiment harness
//!   behind the `viscogas` binary.

pub mod cli;
pub mod config;
pub mod entropy;
pub mod error;
pub mod model;
pub mod monitors;
pub mod riemann;
pub mod solver;
pub mod special;
pub mod verifier;

pub use error::{Error, Result};
