//! Synthesis, verification, realization and simulation of distributed LTI
//! controllers described by network realization functions (NRFs).
//!
//! A controller `K = (I - Phi)^-1 Gamma` is implemented node-by-node as
//! `u = Phi u + Gamma z`, where `Phi` has a zero diagonal and encodes the
//! exchange of command signals between sub-controllers. Starting from a
//! doubly coprime factorization of the plant and a stable Youla parameter,
//! the crate builds the pair `(Phi, Gamma)`, proves closed-loop internal
//! stability, emits per-node state-space sub-controllers and simulates the
//! resulting loop.
//!
//! Module map:
//! - [`ratmat`]: polynomials, rational functions and rational matrices.
//! - [`sstate`]: state-space realizations, staircase forms, PBH tests.
//! - [`factor`]: doubly coprime factorizations and the Youla parameterization.
//! - [`nrfsyn`]: NRF pairs, sparsity correspondence, instability certificates.
//! - [`dimpl`]: per-row realizations, assembly and the closed-loop state matrix.
//! - [`simkit`]: deterministic discrete-time closed-loop simulation.
//! - [`grid5`]: the built-in five-node grid example.

pub mod dimpl;
pub mod error;
pub mod factor;
pub mod grid5;
pub mod laurent;
pub mod linalg;
pub mod nrfsyn;
pub mod probe;
pub mod ratmat;
pub mod simkit;
pub mod sstate;
pub mod tol;

pub use error::{NrfError, Result};
pub use nalgebra;
pub use ratmat::{Domain, Polynomial, RationalFunction, RationalMatrix, SparsityPattern};
pub use sstate::StateSpace;
