//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. Errors split
//! into two families: *domain* errors (the input is outside the mathematical
//! domain of the operation, e.g. evaluating cell coordinates at a point
//! outside the cell) and *usage* errors (malformed words, unsupported rank,
//! unparseable scalars). Exact arithmetic never produces rounding errors, so
//! there is no "tolerance exceeded" failure mode anywhere.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A denominator that must be invertible for the requested factorization
    /// or recursion vanished: the point is outside the open set where the
    /// operation is defined (outside the Bruhat cell, outside the
    /// generic-position locus of a factorization, ...).
    #[error("zero denominator in {context}: the point is outside the domain of the operation")]
    ZeroDenominator {
        /// Which recursion or factorization stage encountered the zero.
        context: String,
    },

    /// Exact division by zero in expression evaluation.
    #[error("division by zero while evaluating an expression")]
    DivisionByZero,

    /// A variable appeared in an expression without a binding.
    #[error("unbound variable `{0}` in expression")]
    UnboundVariable(String),

    /// The caller demanded a nonzero sign but the quantity is exactly zero.
    #[error("sign requested for a quantity that is exactly zero")]
    UnresolvedSign,

    /// A scalar, expression, root system label or group word failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    /// The requested object requires scalars outside `Q` and every real
    /// quadratic extension `Q(sqrt(m))`.
    #[error("unsupported field: {0}")]
    UnsupportedField(String),

    /// A word in simple reflections was required to be reduced but is not.
    #[error("the word {word:?} is not reduced (length of its product is {actual})")]
    NotReduced { word: Vec<usize>, actual: usize },

    /// A word was required to multiply to the longest element but does not.
    #[error("the word does not represent the longest element of the Weyl group")]
    NotLongest,

    /// A torus factor carried a zero entry; torus elements act by Laurent
    /// monomials in their entries and must be invertible.
    #[error("torus entry {index} is zero; torus factors must have invertible entries")]
    ZeroTorusEntry { index: usize },

    /// Building the Cartan block of the classical r-matrix requires
    /// inverting `1 - w` on the moving part of the Cartan subalgebra; the
    /// moving part excludes the fixed space, so this cannot occur for a
    /// genuine Weyl group element.
    #[error("Cayley transform undefined: 1 - w is singular on the moving Cartan block")]
    CayleyUndefined,

    /// An exhaustive search ended without a match.
    #[error("search exhausted without a match: {context} (searched {searched} candidates)")]
    NotFound { context: String, searched: usize },

    /// Structural invariant violated by an input (wrong dimensions, ordering
    /// not adapted to the element, matrix not in the expected subgroup, ...).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The requested root-system rank or type is outside the supported set.
    #[error("unsupported root system: {0}")]
    Unsupported(String),
}

impl Error {
    /// Shorthand for [`Error::ZeroDenominator`].
    pub fn zero_den(context: impl Into<String>) -> Self {
        Error::ZeroDenominator { context: context.into() }
    }

    /// Shorthand for [`Error::Invalid`].
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
