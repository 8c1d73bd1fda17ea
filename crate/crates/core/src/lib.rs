//! Exact toric K-stability computations on Delzant polytopes.
//!
//! A polarized toric manifold is represented by its moment polytope
//! `P = {x : <l_i, x> <= λ_i}`. The crate computes the extremal affine
//! function `s = R̄ + θ`, evaluates Donaldson's functional
//! `L(f) = ∫_{∂P} f dσ - ∫_P s f dx` exactly on piecewise-linear functions,
//! searches for destabilizing simple PL functions, and evaluates the
//! modified K-energy and Abreu residual of symplectic potentials.

pub mod error;
pub mod extremal;
pub mod io;
pub mod library;
pub mod linalg;
pub mod plfunc;
pub mod polynomial;
pub mod polytope;
pub mod potential;
pub mod rational;
pub mod stability;

pub use error::{Error, Result};
pub use extremal::{AffineFunc, ExtremalData};
pub use plfunc::{PLFunc, SimplePL, Subdivision};
pub use stability::{SearchConfig, StabilityReport, Verdict};

pub use polynomial::Polynomial;
pub use polytope::{ConvexPolytope, HalfSpace, Polytope, Region, Simplex};
pub use rational::Rational;
