//! Exact computational models of the Lie-theoretic geometry attached to a Weyl
//! group conjugacy class of a complex simple (or semisimple) algebraic group:
//!
//! * factorizations `s = s1 s2` of a Weyl element into two involutions, each a
//!   product of reflections in mutually orthogonal roots ([`carter`]);
//! * systems of positive roots adapted to the class, built from regular
//!   dominant elements of invariant planes ([`carter`]);
//! * normal orderings of positive-root systems and the distinguished orderings
//!   compatible with the factorization ([`rootsys`], [`ordering`]);
//! * highest-weight modules with contravariant forms, a self-adjointly
//!   normalized Chevalley basis, and matrix models of group elements given as
//!   words in one-parameter subgroups, torus elements and Weyl representatives
//!   ([`rep`]);
//! * coordinates on Bruhat cells and the corresponding factorizations
//!   ([`bruhat`]);
//! * transversal-slice factorizations `g = n^{-1} n_s z s^{-1} n` and the
//!   projection operator onto functions of the slice component ([`slice`]);
//! * the classical r-matrix of the class, Poisson brackets on the group and
//!   its dual, and their reduction to the slice ([`poisson`]);
//! * aggregated per-class verification reports for machine consumption
//!   ([`report`]).
//!
//! All arithmetic is exact: scalars are rationals or elements of a real
//! quadratic extension `Q(sqrt(m))`, with dual numbers layered on top for
//! derivatives ([`scalar`]). There are no floating-point code paths.

#![forbid(unsafe_code)]

pub mod bruhat;
pub mod carter;
pub mod error;
pub mod linalg;
pub mod ordering;
pub mod poisson;
pub mod rep;
pub mod report;
pub mod rootsys;
pub mod scalar;
pub mod slice;

pub use error::{Error, Result};
pub use scalar::{ExactScalar, Jet, Rat, Scalar};

/// Dual numbers over the exact scalars: first derivatives.
pub type Jet1 = Jet<ExactScalar>;
/// Nested dual numbers: mixed second derivatives.
pub type Jet2 = Jet<Jet<ExactScalar>>;
/// Matrices over the exact scalars.
pub type ExactMatrix = linalg::Matrix<ExactScalar>;
