//! Lie-algebraic analysis of loss concentration in deep parameterized quantum
//! circuits.
//!
//! The crate computes the dynamical Lie algebra of a set of Pauli generators,
//! splits it into its center and simple ideals, evaluates g-purities of states
//! and observables, and turns those into exact predictions for the mean and
//! variance of the loss landscape. Predictions can be cross-checked against
//! Monte Carlo statevector simulation, and the [`moments`] module provides the
//! reduced second-moment machinery used to bound how many brickwork layers are
//! needed before the exact formulas apply.
//!
//! Inner loops over samples and coefficient vectors run on rayon when the
//! `parallel` feature is enabled (the default) and fall back to plain
//! iterators otherwise; see [`exec`].

pub mod config;
pub mod dla;
mod linalg;
pub mod error;
pub mod exec;
pub mod moments;
pub mod pauli;
pub mod purity;
pub mod setups;
pub mod simulate;
pub mod state;
pub mod variance;

pub use dla::{cartan_subalgebra, center_of, decompose, lie_closure, CartanBasis, Component, DlaBasis, DlaDecomposition};
pub use error::{Error, Result};
pub use exec::Execution;
pub use pauli::{hs_inner, HermitianOp, PauliString, PauliSum};
pub use state::{QuantumState, StateVector};

/// Tolerances shared by every module.
pub mod tol {
    /// Representation-level checks (Hermiticity, normalization of stored data).
    pub const REPRESENTATION: f64 = 1e-12;
    /// Linear-algebra decisions (rank, orthogonality, null spaces).
    pub const LINALG: f64 = 1e-10;
    /// Physics-level assertions (purities, commutation of states).
    pub const PHYSICS: f64 = 1e-8;
}

pub use num_complex::Complex64 as C64;
