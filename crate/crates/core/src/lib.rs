//! Numerical machinery around the Bohr transform.
//!
//! A Dirichlet polynomial `Σ a_n n^{-s}` with coefficients in a finite
//! dimensional space `X = ℓ_q^d` corresponds, via the prime factorization
//! `n = p^α`, to a polynomial `Σ c_α z^α` on the polytorus `T^N`. This crate
//! implements both sides of that correspondence, the `H_p` norms it
//! induces, polarization of homogeneous polynomials, and a randomized
//! harness that checks the cotype-type inequalities controlling absolute
//! convergence of `H_p(X)` Dirichlet series.
//!
//! Module map:
//!
//! * [`multiindex`]: primes, factorization, multi-indices.
//! * [`spaces`]: `ℓ_q^d` norms, Steinhaus averages, cotype and Kahane
//!   constant estimates.
//! * [`torus`]: roots-of-unity grids, Monte Carlo, Fourier coefficients.
//! * [`polys`]: vector valued polynomials, homogeneous projections,
//!   symmetric multilinear forms.
//! * [`dirichlet`]: Dirichlet polynomials, the Bohr lift and push, vertical
//!   averages, abscissa estimators.
//! * [`inequalities`]: the verification harness.
//!
//! The guide under `book/` walks through each piece; its snippets are
//! compiled as doctests of this crate.

// `!(x >= 0.0)` is the NaN-rejecting form used for input validation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::redundant_guards)]

pub mod dirichlet;
mod error;
pub mod inequalities;
pub mod multiindex;
pub mod polys;
pub mod rng;
mod serde_ext;
pub mod spaces;
mod sum;
pub mod torus;

pub use error::{Error, Result};

pub use num_complex::Complex64 as C64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/bohr-transform.md")]
    mod bohr_transform {}
    #[doc = include_str!("../../../book/src/spaces.md")]
    mod spaces {}
    #[doc = include_str!("../../../book/src/torus.md")]
    mod torus {}
    #[doc = include_str!("../../../book/src/polynomials.md")]
    mod polynomials {}
    #[doc = include_str!("../../../book/src/dirichlet.md")]
    mod dirichlet {}
    #[doc = include_str!("../../../book/src/inequalities.md")]
    mod inequalities {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
