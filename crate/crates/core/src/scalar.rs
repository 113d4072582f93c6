//! Exact scalars.
//!
//! The base number type is [`ExactScalar`]: an element `a + b*sqrt(m)` of the
//! rationals or of a real quadratic extension `Q(sqrt(m))` with `m` squarefree.
//! Signs and comparisons are decided exactly (no floating point is involved
//! anywhere in this crate). [`Jet`] layers dual numbers on top of any scalar
//! for exact forward-mode differentiation, and nests for second derivatives.
//!
//! [`Expr`] is a small expression tree over scalars and named variables with
//! two evaluators: [`Expr::jet_eval`] (dual numbers, for derivatives) and
//! [`certify_sign`], which decides the sign of a closed expression even when
//! its leaves live in *different* quadratic extensions, returning an
//! explicit certificate (exact zero, exact rational value, or a rational
//! interval that excludes zero).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision rational numbers, the ground field of the crate.
pub type Rat = BigRational;

/// Convenience constructor: the rational `n`.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Convenience constructor: the rational `n / d`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// The abstract scalar interface: a field containing the rationals.
///
/// The crate's linear algebra, module matrices and group-element evaluation
/// are generic over this trait. Implementations: [`ExactScalar`] (points),
/// [`Jet<S>`] (first derivatives), `Jet<Jet<S>>` (second derivatives).
/// Floating-point types are deliberately *not* implementations: every
/// consumer of this trait relies on exact equality.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
    + Div<Output = Self>
{
    /// Embed a rational number.
    fn from_rat(r: &Rat) -> Self;

    /// Multiplicative inverse, `None` for zero.
    ///
    /// Callers that divide by quantities which may legitimately vanish (cell
    /// coordinates, factorization pivots) must go through this and map `None`
    /// to [`Error::ZeroDenominator`] rather than dividing directly.
    fn try_inv(&self) -> Option<Self>;

    /// Embed an integer.
    fn from_int(n: i64) -> Self {
        Self::from_rat(&rat_int(n))
    }

    /// Integer power with negative exponents allowed; `None` when the base is
    /// zero and the exponent negative.
    fn try_pow(&self, k: i64) -> Option<Self> {
        let base = if k < 0 { self.try_inv()? } else { self.clone() };
        let mut acc = Self::one();
        for _ in 0..k.unsigned_abs() {
            acc = acc * base.clone();
        }
        Some(acc)
    }
}

// ---------------------------------------------------------------------------
// ExactScalar
// ---------------------------------------------------------------------------

/// An exact real scalar `a + b * sqrt(m)` with `a, b` rational and `m`
/// squarefree (`m == 0` and `b == 0` for plain rationals).
///
/// A single value lives in one quadratic extension. Arithmetic between values
/// of *different* extensions (`m = 2` with `m = 5`, say) is a programming
/// error and panics; computations that genuinely mix extensions go through
/// [`certify_sign`], which works in the compositum. Within one extension all
/// ring operations, exact inversion, exact sign determination and a total
/// order are available.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactScalar {
    a: Rat,
    b: Rat,
    m: u64,
}

/// Strip the largest square divisor: returns `(s, m')` with `m = s^2 * m'`
/// and `m'` squarefree.
fn extract_square(m: u64) -> (u64, u64) {
    let mut s = 1u64;
    let mut rest = m;
    let mut p = 2u64;
    while p * p <= rest {
        while rest % (p * p) == 0 {
            rest /= p * p;
            s *= p;
        }
        p += 1;
    }
    (s, rest)
}

impl ExactScalar {
    /// The rational `r`.
    pub fn rational(r: Rat) -> Self {
        ExactScalar { a: r, b: Rat::zero(), m: 0 }
    }

    /// The integer `n`.
    pub fn int(n: i64) -> Self {
        Self::rational(rat_int(n))
    }

    /// The square root of a nonnegative integer, reduced to canonical form
    /// (`sqrt(12)` becomes `2*sqrt(3)`, `sqrt(9)` becomes `3`).
    pub fn sqrt_int(m: u64) -> Self {
        let (s, rest) = extract_square(m);
        if rest <= 1 {
            Self::rational(rat_int((s * rest.max(if m == 0 { 0 } else { 1 })) as i64))
        } else {
            ExactScalar { a: Rat::zero(), b: rat_int(s as i64), m: rest }
        }
    }

    /// General constructor `a + b*sqrt(m)`; reduces `m` to squarefree form.
    pub fn with_sqrt(a: Rat, b: Rat, m: u64) -> Self {
        if b.is_zero() {
            return Self::rational(a);
        }
        let (s, rest) = extract_square(m);
        if rest <= 1 {
            Self::rational(a + b * rat_int((s * rest) as i64))
        } else {
            ExactScalar { a, b: b * rat_int(s as i64), m: rest }
        }
    }

    /// The rational part `a`.
    pub fn rational_part(&self) -> &Rat {
        &self.a
    }

    /// The radical coefficient `b`.
    pub fn radical_part(&self) -> &Rat {
        &self.b
    }

    /// The radicand `m` (0 for rationals).
    pub fn radicand(&self) -> u64 {
        self.m
    }

    /// Is this a plain rational?
    pub fn is_rational(&self) -> bool {
        self.m == 0
    }

    /// The rational value, or `None` if a radical part is present.
    pub fn as_rat(&self) -> Option<&Rat> {
        if self.m == 0 {
            Some(&self.a)
        } else {
            None
        }
    }

    /// Exact sign: `-1`, `0` or `1`.
    pub fn sign(&self) -> i8 {
        let sa = sign_of(&self.a);
        if self.b.is_zero() {
            return sa;
        }
        let sb = sign_of(&self.b);
        if sa == 0 {
            return sb;
        }
        if sa == sb {
            return sa;
        }
        // a and b have opposite signs: compare |a| with |b|*sqrt(m) via squares.
        let a2 = &self.a * &self.a;
        let b2m = &self.b * &self.b * rat_int(self.m as i64);
        match a2.cmp(&b2m) {
            std::cmp::Ordering::Greater => sa,
            std::cmp::Ordering::Less => sb,
            std::cmp::Ordering::Equal => 0,
        }
    }

    /// Absolute value.
    pub fn abs(&self) -> Self {
        if self.sign() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Exact inverse, `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if self.b.is_zero() {
            return Some(Self::rational(Rat::one() / &self.a));
        }
        // 1/(a + b sqrt m) = (a - b sqrt m)/(a^2 - b^2 m); the norm is nonzero
        // because m is not a perfect square.
        let norm = &self.a * &self.a - &self.b * &self.b * rat_int(self.m as i64);
        debug_assert!(!norm.is_zero());
        Some(ExactScalar {
            a: &self.a / &norm,
            b: -(&self.b / &norm),
            m: self.m,
        })
    }

    /// The Galois conjugate `a - b*sqrt(m)`.
    pub fn conjugate(&self) -> Self {
        ExactScalar { a: self.a.clone(), b: -self.b.clone(), m: self.m }
    }

    fn common_radicand(&self, other: &Self) -> u64 {
        match (self.m, other.m) {
            (0, m) | (m, 0) => m,
            (m1, m2) if m1 == m2 => m1,
            (m1, m2) => panic!(
                "arithmetic between distinct quadratic extensions Q(sqrt({m1})) and Q(sqrt({m2})); \
                 use certify_sign for mixed-extension expressions"
            ),
        }
    }
}

fn sign_of(r: &Rat) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl Add for ExactScalar {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let m = self.common_radicand(&rhs);
        let b = self.b + rhs.b;
        if b.is_zero() {
            ExactScalar { a: self.a + rhs.a, b, m: 0 }
        } else {
            ExactScalar { a: self.a + rhs.a, b, m }
        }
    }
}

impl Sub for ExactScalar {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for ExactScalar {
    type Output = Self;
    fn neg(self) -> Self {
        ExactScalar { a: -self.a, b: -self.b, m: self.m }
    }
}

impl Mul for ExactScalar {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let m = self.common_radicand(&rhs);
        let a = &self.a * &rhs.a + &self.b * &rhs.b * rat_int(m as i64);
        let b = &self.a * &rhs.b + &self.b * &rhs.a;
        if b.is_zero() {
            ExactScalar { a, b, m: 0 }
        } else {
            ExactScalar { a, b, m }
        }
    }
}

impl Div for ExactScalar {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let inv = rhs.inv().expect("exact division by zero");
        self * inv
    }
}

impl Zero for ExactScalar {
    fn zero() -> Self {
        Self::rational(Rat::zero())
    }
    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

impl One for ExactScalar {
    fn one() -> Self {
        Self::rational(Rat::one())
    }
}

impl PartialOrd for ExactScalar {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactScalar {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let diff = self.clone() - other.clone();
        match diff.sign() {
            -1 => std::cmp::Ordering::Less,
            0 => std::cmp::Ordering::Equal,
            _ => std::cmp::Ordering::Greater,
        }
    }
}

impl Scalar for ExactScalar {
    fn from_rat(r: &Rat) -> Self {
        Self::rational(r.clone())
    }
    fn try_inv(&self) -> Option<Self> {
        self.inv()
    }
}

impl Scalar for Rat {
    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }
    fn try_inv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Self::one() / self)
        }
    }
}

impl From<Rat> for ExactScalar {
    fn from(r: Rat) -> Self {
        Self::rational(r)
    }
}

impl fmt::Display for ExactScalar {
    /// Canonical form: `a` for rationals; otherwise `a+b*sqrt(m)` with the
    /// sign of `b` folded into the separator and a zero `a` omitted.
    /// Examples: `3/4+1/2*sqrt(5)`, `-1/2*sqrt(2)`, `2-3*sqrt(3)`, `-5/3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        let babs = self.b.abs();
        let sep = if self.b.is_negative() { "-" } else { "+" };
        if self.a.is_zero() {
            if self.b.is_negative() {
                write!(f, "-{}*sqrt({})", babs, self.m)
            } else {
                write!(f, "{}*sqrt({})", babs, self.m)
            }
        } else {
            write!(f, "{}{}{}*sqrt({})", self.a, sep, babs, self.m)
        }
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

// --- parsing ---------------------------------------------------------------

struct ScalarParser<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> ScalarParser<'a> {
    fn new(s: &'a str) -> Self {
        ScalarParser { input: s.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.input.len() && self.input[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.input.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        match self.bump() {
            Some(got) if got == c => Ok(()),
            got => Err(Error::Parse(format!(
                "expected `{}` at byte {} (found {:?})",
                c as char,
                self.pos,
                got.map(|b| b as char)
            ))),
        }
    }

    fn parse_uint(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.input.len() && self.input[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse(format!("expected digits at byte {start}")));
        }
        std::str::from_utf8(&self.input[start..self.pos])
            .unwrap()
            .parse::<u64>()
            .map_err(|e| Error::Parse(format!("integer overflow: {e}")))
    }

    fn parse_rat(&mut self) -> Result<Rat> {
        let n = self.parse_uint()?;
        let mut r = rat_int(n as i64);
        if self.peek() == Some(b'/') {
            self.bump();
            let d = self.parse_uint()?;
            if d == 0 {
                return Err(Error::Parse("zero denominator in rational literal".into()));
            }
            r = r / rat_int(d as i64);
        }
        Ok(r)
    }

    /// term := rat | rat '*' sqrt '(' uint ')' | sqrt '(' uint ')'
    fn parse_term(&mut self) -> Result<ExactScalar> {
        if self.peek_is_sqrt() {
            let m = self.parse_sqrt()?;
            return Ok(ExactScalar::sqrt_int(m));
        }
        let coeff = self.parse_rat()?;
        if self.peek() == Some(b'*') {
            self.bump();
            if !self.peek_is_sqrt() {
                return Err(Error::Parse("expected sqrt(...) after `*`".into()));
            }
            let m = self.parse_sqrt()?;
            Ok(ExactScalar::with_sqrt(Rat::zero(), coeff, m))
        } else {
            Ok(ExactScalar::rational(coeff))
        }
    }

    fn peek_is_sqrt(&mut self) -> bool {
        self.skip_ws();
        self.input[self.pos..].starts_with(b"sqrt")
    }

    fn parse_sqrt(&mut self) -> Result<u64> {
        self.skip_ws();
        self.pos += 4; // "sqrt"
        self.expect(b'(')?;
        let m = self.parse_uint()?;
        self.expect(b')')?;
        Ok(m)
    }

    fn parse_scalar(&mut self) -> Result<ExactScalar> {
        let mut negate = false;
        while let Some(c) = self.peek() {
            match c {
                b'-' => {
                    negate = !negate;
                    self.bump();
                }
                b'+' => {
                    self.bump();
                }
                _ => break,
            }
        }
        let mut total = self.parse_term()?;
        if negate {
            total = -total;
        }
        loop {
            match self.peek() {
                Some(b'+') | Some(b'-') => {
                    let neg = self.bump() == Some(b'-');
                    let mut term = self.parse_term()?;
                    if neg {
                        term = -term;
                    }
                    total = total + term;
                }
                None => return Ok(total),
                Some(c) => {
                    return Err(Error::Parse(format!(
                        "unexpected `{}` at byte {}",
                        c as char, self.pos
                    )))
                }
            }
        }
    }
}

impl FromStr for ExactScalar {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScalarParser::new(s).parse_scalar()
    }
}

impl Serialize for ExactScalar {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExactScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(|e| D::Error::custom(format!("{e}")))
    }
}

// ---------------------------------------------------------------------------
// Jets (dual numbers)
// ---------------------------------------------------------------------------

/// A dual number `v + d*eps` with `eps^2 = 0` over any scalar.
///
/// Arithmetic implements exact forward-mode differentiation. Nesting
/// (`Jet<Jet<S>>` with independent infinitesimals) yields mixed second
/// derivatives: the `d.d` component of a product of nested jets is the
/// coefficient of `eps1*eps2`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Jet<S> {
    /// Value component.
    pub v: S,
    /// Derivative component.
    pub d: S,
}

impl<S: Scalar> Jet<S> {
    /// A constant (zero derivative).
    pub fn constant(v: S) -> Self {
        Jet { v, d: S::zero() }
    }

    /// A value carrying derivative 1: the variable of differentiation.
    pub fn active(v: S) -> Self {
        Jet { v, d: S::one() }
    }

    /// A value with an explicit derivative component.
    pub fn with_derivative(v: S, d: S) -> Self {
        Jet { v, d }
    }
}

impl<S: Scalar> Add for Jet<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Jet { v: self.v + rhs.v, d: self.d + rhs.d }
    }
}

impl<S: Scalar> Sub for Jet<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Jet { v: self.v - rhs.v, d: self.d - rhs.d }
    }
}

impl<S: Scalar> Neg for Jet<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Jet { v: -self.v, d: -self.d }
    }
}

impl<S: Scalar> Mul for Jet<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Jet {
            v: self.v.clone() * rhs.v.clone(),
            d: self.v * rhs.d + self.d * rhs.v,
        }
    }
}

impl<S: Scalar> Div for Jet<S> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let inv = rhs.try_inv().expect("exact division by zero (jet)");
        self * inv
    }
}

impl<S: Scalar> Zero for Jet<S> {
    fn zero() -> Self {
        Jet { v: S::zero(), d: S::zero() }
    }
    fn is_zero(&self) -> bool {
        self.v.is_zero() && self.d.is_zero()
    }
}

impl<S: Scalar> One for Jet<S> {
    fn one() -> Self {
        Jet { v: S::one(), d: S::zero() }
    }
}

impl<S: Scalar> Scalar for Jet<S> {
    fn from_rat(r: &Rat) -> Self {
        Jet::constant(S::from_rat(r))
    }

    /// `1/(v + d eps) = v^{-1} - v^{-2} d eps`; defined iff `v` is invertible.
    fn try_inv(&self) -> Option<Self> {
        let vi = self.v.try_inv()?;
        let d = -(vi.clone() * vi.clone() * self.d.clone());
        Some(Jet { v: vi, d })
    }
}

impl<S: Scalar + fmt::Display> fmt::Display for Jet<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) + ({})*eps", self.v, self.d)
    }
}

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

/// A finite arithmetic expression over exact scalars and named variables.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// A literal scalar.
    Const(ExactScalar),
    /// A named variable, resolved from a binding map at evaluation time.
    Var(String),
    /// Negation.
    Neg(Box<Expr>),
    /// Sum.
    Add(Box<Expr>, Box<Expr>),
    /// Difference.
    Sub(Box<Expr>, Box<Expr>),
    /// Product.
    Mul(Box<Expr>, Box<Expr>),
    /// Quotient; evaluation fails with [`Error::DivisionByZero`] when the
    /// denominator vanishes.
    Div(Box<Expr>, Box<Expr>),
    /// Nonnegative integer power.
    Pow(Box<Expr>, u32),
}

impl Expr {
    /// Literal helper.
    pub fn lit(s: ExactScalar) -> Self {
        Expr::Const(s)
    }

    /// Variable helper.
    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    /// Evaluate in the dual numbers over [`ExactScalar`].
    ///
    /// Each variable is bound to a jet; passing [`Jet::active`] for one
    /// variable and [`Jet::constant`] for the rest produces the exact partial
    /// derivative in the `d` component.
    pub fn jet_eval(&self, bindings: &BTreeMap<String, Jet<ExactScalar>>) -> Result<Jet<ExactScalar>> {
        Ok(match self {
            Expr::Const(c) => Jet::constant(c.clone()),
            Expr::Var(name) => bindings
                .get(name)
                .cloned()
                .ok_or_else(|| Error::UnboundVariable(name.clone()))?,
            Expr::Neg(e) => -e.jet_eval(bindings)?,
            Expr::Add(x, y) => x.jet_eval(bindings)? + y.jet_eval(bindings)?,
            Expr::Sub(x, y) => x.jet_eval(bindings)? - y.jet_eval(bindings)?,
            Expr::Mul(x, y) => x.jet_eval(bindings)? * y.jet_eval(bindings)?,
            Expr::Div(x, y) => {
                let den = y.jet_eval(bindings)?;
                if den.v.is_zero() {
                    return Err(Error::DivisionByZero);
                }
                x.jet_eval(bindings)? / den
            }
            Expr::Pow(e, k) => {
                let base = e.jet_eval(bindings)?;
                let mut acc = Jet::one();
                for _ in 0..*k {
                    acc = acc * base.clone();
                }
                acc
            }
        })
    }

    /// Evaluate in the compositum of all quadratic extensions appearing.
    fn multiquad_eval(&self, bindings: &BTreeMap<String, ExactScalar>) -> Result<MultiQuad> {
        Ok(match self {
            Expr::Const(c) => MultiQuad::from_scalar(c),
            Expr::Var(name) => MultiQuad::from_scalar(
                bindings
                    .get(name)
                    .ok_or_else(|| Error::UnboundVariable(name.clone()))?,
            ),
            Expr::Neg(e) => e.multiquad_eval(bindings)?.neg(),
            Expr::Add(x, y) => x.multiquad_eval(bindings)?.add(&y.multiquad_eval(bindings)?),
            Expr::Sub(x, y) => x
                .multiquad_eval(bindings)?
                .add(&y.multiquad_eval(bindings)?.neg()),
            Expr::Mul(x, y) => x.multiquad_eval(bindings)?.mul(&y.multiquad_eval(bindings)?),
            Expr::Div(x, y) => {
                let den = y.multiquad_eval(bindings)?;
                let inv = den.inverse().ok_or(Error::DivisionByZero)?;
                x.multiquad_eval(bindings)?.mul(&inv)
            }
            Expr::Pow(e, k) => {
                let base = e.multiquad_eval(bindings)?;
                let mut acc = MultiQuad::one();
                for _ in 0..*k {
                    acc = acc.mul(&base);
                }
                acc
            }
        })
    }
}

// ---------------------------------------------------------------------------
// Sign certification in the compositum of quadratic extensions
// ---------------------------------------------------------------------------

/// Element of `Q(sqrt(p) : p prime)` as a finite sum `sum_k c_k * sqrt(k)`
/// over squarefree `k >= 1`; the representation is unique, so the zero test
/// is exact.
#[derive(Clone, Debug, PartialEq)]
struct MultiQuad {
    /// squarefree radicand -> coefficient; no zero coefficients stored.
    terms: BTreeMap<u64, Rat>,
}

impl MultiQuad {
    fn zero() -> Self {
        MultiQuad { terms: BTreeMap::new() }
    }

    fn one() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(1, Rat::one());
        MultiQuad { terms }
    }

    fn from_scalar(s: &ExactScalar) -> Self {
        let mut q = MultiQuad::zero();
        q.add_term(1, s.rational_part().clone());
        if !s.radical_part().is_zero() {
            q.add_term(s.radicand(), s.radical_part().clone());
        }
        q
    }

    fn add_term(&mut self, radicand: u64, coeff: Rat) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(radicand).or_insert_with(Rat::zero);
        *entry = entry.clone() + coeff;
        if entry.is_zero() {
            self.terms.remove(&radicand);
        }
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn neg(&self) -> Self {
        MultiQuad {
            terms: self.terms.iter().map(|(k, c)| (*k, -c.clone())).collect(),
        }
    }

    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(*k, c.clone());
        }
        out
    }

    /// `sqrt(k1) * sqrt(k2) = g * sqrt(k1 k2 / g^2)` with `g = gcd(k1, k2)`;
    /// both radicands squarefree keeps the product's radicand squarefree.
    fn mul(&self, other: &Self) -> Self {
        let mut out = MultiQuad::zero();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                let g = num::integer::gcd(*k1, *k2);
                let radicand = (k1 / g) * (k2 / g);
                out.add_term(radicand, c1 * c2 * rat_int(g as i64));
            }
        }
        out
    }

    /// Primes occurring in any radicand.
    fn primes(&self) -> Vec<u64> {
        let mut primes = Vec::new();
        for &k in self.terms.keys() {
            let mut rest = k;
            let mut p = 2;
            while p * p <= rest {
                if rest % p == 0 {
                    if !primes.contains(&p) {
                        primes.push(p);
                    }
                    while rest % p == 0 {
                        rest /= p;
                    }
                }
                p += 1;
            }
            if rest > 1 && !primes.contains(&rest) {
                primes.push(rest);
            }
        }
        primes.sort_unstable();
        primes
    }

    /// The field automorphism `sqrt(p) -> -sqrt(p)`.
    fn conjugate_at(&self, p: u64) -> Self {
        MultiQuad {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| {
                    if k % p == 0 {
                        (*k, -c.clone())
                    } else {
                        (*k, c.clone())
                    }
                })
                .collect(),
        }
    }

    /// Exact inverse by iterated rationalization: multiplying by the
    /// conjugate at `p` eliminates `sqrt(p)` from the product, so after one
    /// pass per prime the denominator is rational.
    fn inverse(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let mut numerator = MultiQuad::one();
        let mut denominator = self.clone();
        for p in self.primes() {
            let conj = denominator.conjugate_at(p);
            numerator = numerator.mul(&conj);
            denominator = denominator.mul(&conj);
            debug_assert!(denominator.terms.keys().all(|k| k % p != 0));
        }
        debug_assert!(denominator.terms.len() <= 1);
        let rational = denominator.terms.get(&1)?.clone();
        if rational.is_zero() {
            return None;
        }
        let inv = Rat::one() / rational;
        Some(MultiQuad {
            terms: numerator
                .terms
                .iter()
                .map(|(k, c)| (*k, c * &inv))
                .collect(),
        })
    }

    /// Exact rational value if the element is rational.
    fn as_rational(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::zero()),
            1 => self.terms.get(&1).cloned(),
            _ => None,
        }
    }

    /// Canonical display, e.g. `3/4+1/2*sqrt(5)-2*sqrt(6)`.
    fn to_display(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (k, c)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            if i == 0 {
                if c.is_negative() {
                    out.push('-');
                }
            } else {
                out.push(if c.is_negative() { '-' } else { '+' });
            }
            if *k == 1 {
                out.push_str(&mag.to_string());
            } else {
                out.push_str(&format!("{mag}*sqrt({k})"));
            }
        }
        out
    }

    /// Rational enclosure `[lo, hi]` of the value with width shrinking as
    /// `precision_bits` grows.
    fn enclosure(&self, precision_bits: u32) -> (Rat, Rat) {
        let mut lo = Rat::zero();
        let mut hi = Rat::zero();
        for (k, c) in &self.terms {
            let (rlo, rhi) = sqrt_enclosure(*k, precision_bits);
            let (tlo, thi) = if c.is_negative() {
                (c * &rhi, c * &rlo)
            } else {
                (c * &rlo, c * &rhi)
            };
            lo = lo + tlo;
            hi = hi + thi;
        }
        (lo, hi)
    }
}

/// Rational enclosure of `sqrt(k)` with `hi - lo <= 2^-precision_bits`, by
/// bisection on `x^2 = k`.
fn sqrt_enclosure(k: u64, precision_bits: u32) -> (Rat, Rat) {
    let target = rat_int(k as i64);
    if k == 1 {
        return (Rat::one(), Rat::one());
    }
    let mut lo = Rat::zero();
    let mut hi = rat_int(k as i64).max(Rat::one());
    let width_goal = Rat::new(BigInt::one(), BigInt::one() << precision_bits);
    while (&hi - &lo) > width_goal {
        let mid = (&lo + &hi) / rat_int(2);
        if &mid * &mid <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// The verdict of [`certify_sign`]: an exact sign plus evidence.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SignCertificate {
    /// `-1`, `0` or `1`.
    pub sign: i8,
    /// Canonical rendering of the evaluated quantity in the compositum field.
    pub value: String,
    /// Evidence for the sign.
    pub witness: SignWitness,
}

/// Evidence carried by a [`SignCertificate`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignWitness {
    /// The quantity reduced to exactly zero in the compositum field.
    ExactZero,
    /// The quantity reduced to this exact rational.
    ExactRational {
        /// Canonical rational rendering.
        value: String,
    },
    /// A rational interval containing the quantity and excluding zero.
    Interval {
        /// Lower endpoint (exact rational, canonical rendering).
        lo: String,
        /// Upper endpoint.
        hi: String,
        /// Enclosure precision used for the radicals, in bits.
        precision_bits: u32,
    },
}

/// Decide the exact sign of a closed expression whose leaves may live in
/// distinct quadratic extensions.
///
/// Evaluation happens in the compositum `Q(sqrt(p_1), ..., sqrt(p_k))`, where
/// the zero test is exact (the radicals of distinct squarefree integers are
/// linearly independent over `Q`). Nonzero values are certified by a rational
/// interval enclosure refined until it excludes zero — termination is
/// guaranteed precisely because the zero case has already been decided
/// exactly. With `demand_nonzero`, an exact zero is reported as
/// [`Error::UnresolvedSign`].
pub fn certify_sign(
    expr: &Expr,
    bindings: &BTreeMap<String, ExactScalar>,
    demand_nonzero: bool,
) -> Result<SignCertificate> {
    let value = expr.multiquad_eval(bindings)?;
    if value.is_zero() {
        if demand_nonzero {
            return Err(Error::UnresolvedSign);
        }
        return Ok(SignCertificate {
            sign: 0,
            value: "0".to_string(),
            witness: SignWitness::ExactZero,
        });
    }
    if let Some(r) = value.as_rational() {
        return Ok(SignCertificate {
            sign: sign_of(&r),
            value: value.to_display(),
            witness: SignWitness::ExactRational { value: r.to_string() },
        });
    }
    let mut precision_bits = 16u32;
    loop {
        let (lo, hi) = value.enclosure(precision_bits);
        if lo.is_positive() || hi.is_negative() {
            let sign = if lo.is_positive() { 1 } else { -1 };
            return Ok(SignCertificate {
                sign,
                value: value.to_display(),
                witness: SignWitness::Interval {
                    lo: lo.to_string(),
                    hi: hi.to_string(),
                    precision_bits,
                },
            });
        }
        precision_bits = precision_bits
            .checked_mul(2)
            .filter(|&p| p <= 1 << 20)
            .expect("interval refinement failed to separate a provably nonzero value from zero");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_rat(rng: &mut StdRng) -> Rat {
        rat(rng.gen_range(-20..=20), rng.gen_range(1..=12))
    }

    fn random_scalar(rng: &mut StdRng, m: u64) -> ExactScalar {
        if m == 0 || rng.gen_bool(0.3) {
            ExactScalar::rational(random_rat(rng))
        } else {
            ExactScalar::with_sqrt(random_rat(rng), random_rat(rng), m)
        }
    }

    #[test]
    fn field_axioms_hold_on_random_samples() {
        let mut rng = StdRng::seed_from_u64(7);
        for &m in &[0u64, 2, 5] {
            for _ in 0..200 {
                let x = random_scalar(&mut rng, m);
                let y = random_scalar(&mut rng, m);
                let z = random_scalar(&mut rng, m);
                // commutativity / associativity / distributivity
                assert_eq!(x.clone() + y.clone(), y.clone() + x.clone());
                assert_eq!(x.clone() * y.clone(), y.clone() * x.clone());
                assert_eq!(
                    (x.clone() + y.clone()) + z.clone(),
                    x.clone() + (y.clone() + z.clone())
                );
                assert_eq!(
                    (x.clone() * y.clone()) * z.clone(),
                    x.clone() * (y.clone() * z.clone())
                );
                assert_eq!(
                    x.clone() * (y.clone() + z.clone()),
                    x.clone() * y.clone() + x.clone() * z.clone()
                );
                // identities and inverses
                assert_eq!(x.clone() + ExactScalar::zero(), x.clone());
                assert_eq!(x.clone() * ExactScalar::one(), x.clone());
                assert!((x.clone() - x.clone()).is_zero());
                if !x.is_zero() {
                    let xi = x.inv().unwrap();
                    assert!((x.clone() * xi - ExactScalar::one()).is_zero());
                }
            }
        }
    }

    #[test]
    fn squarefree_reduction_is_canonical() {
        assert_eq!(ExactScalar::sqrt_int(12).to_string(), "2*sqrt(3)");
        assert_eq!(ExactScalar::sqrt_int(9).to_string(), "3");
        assert_eq!(ExactScalar::sqrt_int(1).to_string(), "1");
        assert_eq!(ExactScalar::sqrt_int(18).to_string(), "3*sqrt(2)");
        // sqrt(8)*sqrt(2) = 4 must collapse to a rational with m = 0
        let x = ExactScalar::sqrt_int(8) * ExactScalar::sqrt_int(2);
        assert_eq!(x, ExactScalar::int(4));
        assert!(x.is_rational());
    }

    #[test]
    fn exact_sign_matches_interval_oracle() {
        // Cross-check the algebraic sign rule of ExactScalar::sign against the
        // independent interval-arithmetic route used by certify_sign.
        let mut rng = StdRng::seed_from_u64(11);
        for &m in &[2u64, 3, 5, 6] {
            for _ in 0..150 {
                let x = random_scalar(&mut rng, m);
                let cert = certify_sign(
                    &Expr::lit(x.clone()),
                    &BTreeMap::new(),
                    false,
                )
                .unwrap();
                assert_eq!(x.sign(), cert.sign, "sign mismatch for {x}");
            }
        }
    }

    #[test]
    fn ordering_is_a_total_order_compatible_with_addition() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..200 {
            let x = random_scalar(&mut rng, 5);
            let y = random_scalar(&mut rng, 5);
            let z = random_scalar(&mut rng, 5);
            if x < y {
                assert!(x.clone() + z.clone() < y.clone() + z.clone());
            }
            assert_eq!(x < y, y > x);
        }
        // golden-ratio check: (1 + sqrt 5)/2 > 8/5 and < 13/8
        let phi = (ExactScalar::int(1) + ExactScalar::sqrt_int(5)) / ExactScalar::int(2);
        assert!(phi > ExactScalar::rational(rat(8, 5)));
        assert!(phi < ExactScalar::rational(rat(13, 8)));
    }

    #[test]
    fn display_and_parse_round_trip_bit_exactly() {
        let mut rng = StdRng::seed_from_u64(17);
        for &m in &[0u64, 2, 5, 15] {
            for _ in 0..100 {
                let x = random_scalar(&mut rng, m);
                let s = x.to_string();
                let back: ExactScalar = s.parse().unwrap();
                assert_eq!(x, back, "round trip failed for `{s}`");
                // serde round trip through JSON as well
                let json = serde_json::to_string(&x).unwrap();
                let back2: ExactScalar = serde_json::from_str(&json).unwrap();
                assert_eq!(x, back2);
            }
        }
        let sample: ExactScalar = "3/4+1/2*sqrt(5)".parse().unwrap();
        assert_eq!(
            sample,
            ExactScalar::with_sqrt(rat(3, 4), rat(1, 2), 5)
        );
        assert_eq!(sample.to_string(), "3/4+1/2*sqrt(5)");
        let neg: ExactScalar = "-7/2-2*sqrt(3)".parse().unwrap();
        assert_eq!(neg.to_string(), "-7/2-2*sqrt(3)");
        assert!("3//4".parse::<ExactScalar>().is_err());
        assert!("sqrt(5".parse::<ExactScalar>().is_err());
        assert!("1/0".parse::<ExactScalar>().is_err());
    }

    #[test]
    #[should_panic(expected = "distinct quadratic extensions")]
    fn mixing_extensions_in_raw_arithmetic_panics() {
        let _ = ExactScalar::sqrt_int(2) + ExactScalar::sqrt_int(5);
    }

    /// Symbolic differentiation, used as an independent oracle for jet_eval.
    fn symbolic_derivative(e: &Expr, var: &str) -> Expr {
        match e {
            Expr::Const(_) => Expr::lit(ExactScalar::zero()),
            Expr::Var(v) => {
                if v == var {
                    Expr::lit(ExactScalar::one())
                } else {
                    Expr::lit(ExactScalar::zero())
                }
            }
            Expr::Neg(x) => Expr::Neg(Box::new(symbolic_derivative(x, var))),
            Expr::Add(x, y) => Expr::Add(
                Box::new(symbolic_derivative(x, var)),
                Box::new(symbolic_derivative(y, var)),
            ),
            Expr::Sub(x, y) => Expr::Sub(
                Box::new(symbolic_derivative(x, var)),
                Box::new(symbolic_derivative(y, var)),
            ),
            Expr::Mul(x, y) => Expr::Add(
                Box::new(Expr::Mul(Box::new(symbolic_derivative(x, var)), y.clone())),
                Box::new(Expr::Mul(x.clone(), Box::new(symbolic_derivative(y, var)))),
            ),
            Expr::Div(x, y) => {
                // (x/y)' = x'/y - x y'/y^2
                let dx = symbolic_derivative(x, var);
                let dy = symbolic_derivative(y, var);
                Expr::Sub(
                    Box::new(Expr::Div(Box::new(dx), y.clone())),
                    Box::new(Expr::Div(
                        Box::new(Expr::Mul(x.clone(), Box::new(dy))),
                        Box::new(Expr::Pow(y.clone(), 2)),
                    )),
                )
            }
            Expr::Pow(x, k) => {
                if *k == 0 {
                    Expr::lit(ExactScalar::zero())
                } else {
                    Expr::Mul(
                        Box::new(Expr::Mul(
                            Box::new(Expr::lit(ExactScalar::int(*k as i64))),
                            Box::new(Expr::Pow(x.clone(), k - 1)),
                        )),
                        Box::new(symbolic_derivative(x, var)),
                    )
                }
            }
        }
    }

    /// Random polynomial-ish expression of multiplicative depth <= 4 in the
    /// variables `x`, `y`.
    fn random_expr(rng: &mut StdRng, depth: u32) -> Expr {
        if depth == 0 {
            match rng.gen_range(0..3) {
                0 => Expr::var("x"),
                1 => Expr::var("y"),
                _ => Expr::lit(ExactScalar::rational(random_rat(rng))),
            }
        } else {
            let l = Box::new(random_expr(rng, depth - 1));
            let r = Box::new(random_expr(rng, depth - 1));
            match rng.gen_range(0..5) {
                0 => Expr::Add(l, r),
                1 => Expr::Sub(l, r),
                2 => Expr::Mul(l, r),
                3 => Expr::Neg(l),
                _ => Expr::Pow(l, rng.gen_range(0..=3)),
            }
        }
    }

    #[test]
    fn jet_eval_agrees_with_symbolic_differentiation() {
        let mut rng = StdRng::seed_from_u64(23);
        let mut checked = 0;
        while checked < 100 {
            let e = random_expr(&mut rng, 4);
            let de = symbolic_derivative(&e, "x");
            let x0 = ExactScalar::rational(random_rat(&mut rng));
            let y0 = ExactScalar::rational(random_rat(&mut rng));
            let mut jets = BTreeMap::new();
            jets.insert("x".to_string(), Jet::active(x0.clone()));
            jets.insert("y".to_string(), Jet::constant(y0.clone()));
            let mut points = BTreeMap::new();
            points.insert("x".to_string(), Jet::constant(x0));
            points.insert("y".to_string(), Jet::constant(y0));
            let jet = e.jet_eval(&jets).unwrap();
            let sym = de.jet_eval(&points).unwrap();
            assert_eq!(jet.d, sym.v);
            checked += 1;
        }
    }

    #[test]
    fn jet_division_differentiates_rational_functions() {
        // f(x) = (x^2 + 1) / (x - 2); f'(x) = (x^2 - 4x - 1)/(x-2)^2; at x = 3: f' = -4.
        let f = Expr::Div(
            Box::new(Expr::Add(
                Box::new(Expr::Pow(Box::new(Expr::var("x")), 2)),
                Box::new(Expr::lit(ExactScalar::one())),
            )),
            Box::new(Expr::Sub(
                Box::new(Expr::var("x")),
                Box::new(Expr::lit(ExactScalar::int(2))),
            )),
        );
        let mut jets = BTreeMap::new();
        jets.insert("x".to_string(), Jet::active(ExactScalar::int(3)));
        let out = f.jet_eval(&jets).unwrap();
        assert_eq!(out.v, ExactScalar::int(10));
        assert_eq!(out.d, ExactScalar::int(-4));
        // division by zero is a domain error, not a panic
        jets.insert("x".to_string(), Jet::active(ExactScalar::int(2)));
        assert!(matches!(f.jet_eval(&jets), Err(Error::DivisionByZero)));
    }

    #[test]
    fn nested_jets_compute_mixed_second_derivatives() {
        // f(x, y) = x^2 y + y^3: d2f/dxdy = 2x; at (x,y) = (3, 5): 6.
        // Evaluate by hand in nested jets: x active in the inner layer,
        // y active in the outer layer.
        let x: Jet<Jet<ExactScalar>> = Jet::constant(Jet::active(ExactScalar::int(3)));
        let y: Jet<Jet<ExactScalar>> = Jet::active(Jet::constant(ExactScalar::int(5)));
        let val = x.clone() * x.clone() * y.clone() + y.clone() * y.clone() * y.clone();
        assert_eq!(val.v.v, ExactScalar::int(170)); // 9*5 + 125
        assert_eq!(val.v.d, ExactScalar::int(30)); // df/dx = 2xy
        assert_eq!(val.d.v, ExactScalar::int(84)); // df/dy = x^2 + 3y^2
        assert_eq!(val.d.d, ExactScalar::int(6)); // d2f/dxdy = 2x
    }

    #[test]
    fn certify_sign_detects_exact_zero_across_extensions() {
        // sqrt(2) * sqrt(3) - sqrt(6) == 0, though no single quadratic
        // extension contains all three leaves.
        let expr = Expr::Sub(
            Box::new(Expr::Mul(
                Box::new(Expr::lit(ExactScalar::sqrt_int(2))),
                Box::new(Expr::lit(ExactScalar::sqrt_int(3))),
            )),
            Box::new(Expr::lit(ExactScalar::sqrt_int(6))),
        );
        let cert = certify_sign(&expr, &BTreeMap::new(), false).unwrap();
        assert_eq!(cert.sign, 0);
        assert_eq!(cert.witness, SignWitness::ExactZero);
        assert!(matches!(
            certify_sign(&expr, &BTreeMap::new(), true),
            Err(Error::UnresolvedSign)
        ));
    }

    #[test]
    fn certify_sign_separates_close_values_with_interval_witness() {
        // sqrt(2) + sqrt(3) = 3.14626... vs the rational 3.146 = 1573/500.
        let expr = Expr::Sub(
            Box::new(Expr::Add(
                Box::new(Expr::lit(ExactScalar::sqrt_int(2))),
                Box::new(Expr::lit(ExactScalar::sqrt_int(3))),
            )),
            Box::new(Expr::lit(ExactScalar::rational(rat(1573, 500)))),
        );
        let cert = certify_sign(&expr, &BTreeMap::new(), true).unwrap();
        assert_eq!(cert.sign, 1);
        match &cert.witness {
            SignWitness::Interval { lo, .. } => {
                let lo: Rat = lo.parse().unwrap();
                assert!(lo.is_positive());
            }
            w => panic!("expected interval witness, got {w:?}"),
        }
    }

    #[test]
    fn certify_sign_handles_division_and_bindings() {
        // (1 + sqrt(5))/2 - x  at x = 8/5 is positive; at x = 13/8 negative.
        let expr = Expr::Sub(
            Box::new(Expr::Div(
                Box::new(Expr::Add(
                    Box::new(Expr::lit(ExactScalar::one())),
                    Box::new(Expr::lit(ExactScalar::sqrt_int(5))),
                )),
                Box::new(Expr::lit(ExactScalar::int(2))),
            )),
            Box::new(Expr::var("x")),
        );
        let mut bind = BTreeMap::new();
        bind.insert("x".to_string(), ExactScalar::rational(rat(8, 5)));
        assert_eq!(certify_sign(&expr, &bind, false).unwrap().sign, 1);
        bind.insert("x".to_string(), ExactScalar::rational(rat(13, 8)));
        assert_eq!(certify_sign(&expr, &bind, false).unwrap().sign, -1);
        // unbound variable is reported as such
        assert!(matches!(
            certify_sign(&expr, &BTreeMap::new(), false),
            Err(Error::UnboundVariable(v)) if v == "x"
        ));
    }

    #[test]
    fn multiquad_inverse_is_exact() {
        // 1/(sqrt(2) + sqrt(3) + sqrt(6)) recomputed by multiplication.
        let x = Expr::Add(
            Box::new(Expr::Add(
                Box::new(Expr::lit(ExactScalar::sqrt_int(2))),
                Box::new(Expr::lit(ExactScalar::sqrt_int(3))),
            )),
            Box::new(Expr::lit(ExactScalar::sqrt_int(6))),
        );
        let check = Expr::Sub(
            Box::new(Expr::Mul(
                Box::new(x.clone()),
                Box::new(Expr::Div(
                    Box::new(Expr::lit(ExactScalar::one())),
                    Box::new(x),
                )),
            )),
            Box::new(Expr::lit(ExactScalar::one())),
        );
        let cert = certify_sign(&check, &BTreeMap::new(), false).unwrap();
        assert_eq!(cert.sign, 0);
    }
}
