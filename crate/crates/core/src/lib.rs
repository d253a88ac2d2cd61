//! Meixner-class noise analysis on a finite base space.
//!
//! One real parameter `lambda >= 0` selects a member of the Meixner class of
//! orthogonal polynomial systems with recurrence coefficients `a_n = lambda*n`
//! and `b_n = n^2` (Laguerre at `lambda = 2`, Meixner-Pollaczek below, Meixner
//! proper above). Promoted to a base space carrying a finite atomic intensity
//! measure, the same parameter selects a Levy noise: gamma white noise at
//! `lambda = 2`, Pascal noise above, Meixner noise below. This crate realizes
//! both sides of that correspondence on a space with finitely many atoms and
//! verifies, at desk scale, the identities that tie them together:
//!
//! * [`params`] - the parameter pack `(lambda, c, alpha, beta, p)` and the
//!   pair of inverse analytic changes of variable `psi`/`psi_inv`;
//! * [`poly`] - the one-dimensional polynomial side: three-term recurrences,
//!   Jacobi matrices, moments, Gaussian quadrature, generating functions;
//! * [`measures`] - the one-dimensional measure side: the Pascal/gamma/Meixner
//!   laws, characteristic functions, Levy measures, cumulants, samplers;
//! * [`fock`] - the extended Fock space over the atoms: symmetric tensors,
//!   loop collections, the extended inner product, ladder operators;
//! * [`wick`] - Wick power kernels of a point configuration, their recurrence,
//!   pairings, generating function, and exact polynomial expectations;
//! * [`functional`] - annihilation and creation as operators on functionals of
//!   the configuration: lowering, raising, Gateaux derivatives, the integral
//!   representation against the Levy measure, creation by finite differences;
//! * [`verify`] - named verification suites wiring all of the above together.
//!
//! Everything is dense and double precision. Degrees and atom counts are
//! deliberately small; guards reject configurations outside the tested budget
//! rather than letting accuracy degrade silently.

pub mod fock;
pub mod functional;
pub mod integrate;
pub mod linalg;
pub mod measures;
pub mod mpoly;
pub mod params;
pub mod poly;
pub mod special;
pub mod verify;
pub mod wick;

use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A constructor argument is outside the admissible set.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// An evaluation point lies outside the documented domain of validity.
    #[error("outside domain of validity: {0}")]
    OutsideDomain(String),
    /// A requested object exceeds the dense-storage or degree budget.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    /// Operands have incompatible shapes (degree or atom count).
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// An iterative numerical routine failed to reach its target.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
