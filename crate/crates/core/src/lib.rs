//! Sharp error constants for one-point weighted recovery formulas.
//!
//! A recovery formula approximates the weighted integral `∫_a^b p(t) f(t) dt`
//! by a combination `Σ c_k (D_k f)(x)` of (generalized) derivatives of `f` at a
//! single node `x`. Its error is an inner product of `D_n f` with a kernel
//! `r_x^n`, so the worst case over a function class is a dual norm of that
//! kernel. This crate builds the kernels exactly as piecewise polynomials,
//! evaluates the resulting constants, and checks them against extremal
//! functions and randomized audits.

pub mod bounds;
pub mod error;
pub mod exponent;
pub mod holder;
pub mod kernel;
pub mod multivariate;
pub mod piecewise;
pub(crate) mod poly;
pub mod quadrature;
pub mod suite;
pub mod verify;

pub use bounds::{BoundReport, ClassSpec};
pub use error::{Error, Result};
pub use exponent::Exponent;
pub use holder::ModulusSpec;
pub use kernel::{KernelChain, WeightSystem};
pub use piecewise::{Interval, PiecewisePolynomial};
