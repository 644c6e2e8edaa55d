//! Numerical laboratory for the `∫|U^α − V^α|^p` contraction family of
//! porous medium and fast diffusion equations `m U_t = ΔU^m`.
//!
//! The crate is organised bottom-up:
//!
//! * [`admissible`]: the admissible exponent set `K_|n|` and derived exponents,
//! * [`quadforms`]: the matrices `Q_{α,p}(v,u)`, `M_{α,p}` and the pointwise
//!   dissipation integrands built from them,
//! * [`grid`]: periodic torus fields and centered-difference operators,
//! * [`solver`]: explicit conservative time stepping of the equation,
//! * [`functionals`]: Lyapunov functionals, dissipation integrals and
//!   balance diagnostics along trajectories,
//! * [`harness`]: reusable verification routines shared by the CLI and tests.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admissible;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod harness;
pub mod quadforms;
pub mod solver;

pub use admissible::{
    classify, derived_exponents, p_bounds, DerivedExponents, DiffusionParams, ExponentPair,
    RegionClass,
};
pub use error::{Error, Result};
pub use functionals::{DiagnosticsRow, DirectionVector};
pub use grid::{ScalarField, TorusGrid};
pub use quadforms::{Forms, PositivityReport, SymMatrix2};
pub use solver::{InitialKind, SolverConfig, Trajectory, Variable};
