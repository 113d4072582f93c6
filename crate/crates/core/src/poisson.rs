//! The classical r-matrix of a Weyl class and the Poisson brackets it
//! induces, all in exact arithmetic.
//!
//! The endomorphism `r` acts as `+1` on the raising root vectors of the
//! adapted positive system, `-1` on the lowering ones, as minus the Cayley
//! transform `(1+w)(1-w)^{-1}` on the moving part of the Cartan block, and
//! as `0` on the fixed part.  It is skew with respect to the invariant form
//! and solves the modified classical Yang-Baxter identity; both facts are
//! certified on construction.  From `r` this module builds
//!
//! * the second Lie bracket `[X,Y]_* = ([rX,Y] + [X,rY])/2` on the algebra
//!   ([`PoissonContext::star_bracket`]);
//! * left/right gradients of matrix-coefficient functions with respect to
//!   the invariant form, computed by dual-number displacement along a basis
//!   and its form-dual ([`PoissonContext::gradients`]);
//! * the multiplicative bracket on the group
//!   ([`PoissonContext::bracket_g`]);
//! * the bracket on the dual group, realized as pairs of opposite-triangular
//!   words with linked torus parts ([`PoissonContext::bracket_dual`]), and
//!   the quotient map `q(L_+, L_-) = L_- L_+^{-1}`
//!   ([`PoissonContext::q_map`]);
//! * the twisted bracket on the group that makes `q` a Poisson map,
//!   evaluated along two independent routes that must agree exactly
//!   ([`PoissonContext::bracket_gstar`]);
//! * the reduced bracket of the transversal slice, via its closed four-term
//!   formula ([`PoissonContext::reduced_bracket_direct`]) and via the
//!   twisted bracket of projection-invariant extensions
//!   ([`PoissonContext::reduced_bracket_projected`]); agreement of the two
//!   is the flagship certificate of the whole pipeline.

use num_traits::{One as _, Zero as _};
use rand::Rng;

use crate::carter::{
    associated_positive_system, carter_decompose, invariant_subspaces, PositiveSystemS,
};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rep::{ChevalleyBasis, Factor, GroupElement, RepContext};
use crate::rootsys::{RootSystem, WeylElement};
use crate::scalar::{rat, Jet, Rat, Scalar};
use crate::slice::SliceContext;

// ---------------------------------------------------------------------------
// Small coordinate-vector helpers.
// ---------------------------------------------------------------------------

fn vec_add<S: Scalar>(x: &[S], y: &[S]) -> Vec<S> {
    x.iter().zip(y).map(|(a, b)| a.clone() + b.clone()).collect()
}

fn vec_sub<S: Scalar>(x: &[S], y: &[S]) -> Vec<S> {
    x.iter().zip(y).map(|(a, b)| a.clone() - b.clone()).collect()
}

fn vec_neg<S: Scalar>(x: &[S]) -> Vec<S> {
    x.iter().map(|a| -a.clone()).collect()
}

/// Apply a rational matrix to a vector over any scalar type, skipping zero
/// entries so that sparse blocks stay cheap.
fn apply_rat<S: Scalar>(m: &Matrix<Rat>, v: &[S]) -> Vec<S> {
    (0..m.nrows())
        .map(|i| {
            let mut acc = S::zero();
            for (j, vj) in v.iter().enumerate() {
                let c = &m[(i, j)];
                if !c.is_zero() && !vj.is_zero() {
                    acc = acc + vj.clone() * S::from_rat(c);
                }
            }
            acc
        })
        .collect()
}

fn axis_vec(chev: &ChevalleyBasis, a: usize) -> Vec<Rat> {
    if a < chev.num_roots {
        chev.root_axis(a)
    } else {
        chev.h_axis(a - chev.num_roots)
    }
}

/// The group word `1 + eps X` for the algebra vector with the given
/// coordinates: one-parameter factors carry the root components and a single
/// torus factor carries the Cartan components.  With a square-zero parameter
/// every factor equals `1 + eps(component)` exactly and the factors commute,
/// so the word evaluates to `1 + eps X` in every module.
fn displacement<S: Scalar>(chev: &ChevalleyBasis, coords: &[Rat]) -> GroupElement<Jet<S>> {
    let nr = chev.num_roots;
    let mut factors = Vec::new();
    for (a, c) in coords.iter().take(nr).enumerate() {
        if !c.is_zero() {
            factors.push(Factor::OneParam {
                root: a,
                t: Jet::with_derivative(S::zero(), S::from_rat(c)),
            });
        }
    }
    if coords[nr..].iter().any(|c| !c.is_zero()) {
        let entries = coords[nr..]
            .iter()
            .map(|c| Jet::with_derivative(S::one(), S::from_rat(c)))
            .collect();
        factors.push(Factor::Torus { entries });
    }
    GroupElement { factors }
}

// ---------------------------------------------------------------------------
// The classical r-matrix.
// ---------------------------------------------------------------------------

/// The classical r-matrix of a class, with its defining projections, the
/// Cayley block on the Cartan, the halves `(r ± 1)/2`, and the invariant
/// form data used for gradients.  Construction certifies exactly:
///
/// * the diagonal action `+1` / `-1` on raising and lowering root vectors;
/// * `(1 - w) C = (1 + w) P` on the Cartan block (the equation defining the
///   Cayley factor `C` supported on the moving projection `P`);
/// * orthogonality of the moving and fixed Cartan parts for the form;
/// * skew-symmetry of `r` with respect to the invariant form;
/// * the modified classical Yang-Baxter identity
///   `[rX, rY] - r([rX,Y] + [X,rY]) = -[X,Y]` on all basis pairs.
#[derive(Clone, Debug)]
pub struct RMatrix {
    /// `r` on algebra coordinates (root axes then Cartan axes).
    pub matrix: Matrix<Rat>,
    /// Projection onto the span of the raising root vectors.
    pub p_plus: Matrix<Rat>,
    /// Projection onto the span of the lowering root vectors.
    pub p_minus: Matrix<Rat>,
    /// Projection of the algebra onto the moving part of the Cartan block.
    pub p_moving: Matrix<Rat>,
    /// Cayley block `(1+w)(1-w)^{-1}` composed with the moving projection,
    /// on Cartan coordinates; `r` restricts to minus this block.
    pub cayley: Matrix<Rat>,
    /// `(r + 1)/2`.
    pub r_plus: Matrix<Rat>,
    /// `(r - 1)/2`.
    pub r_minus: Matrix<Rat>,
    /// Action of the class element on Cartan coordinates (coroot basis).
    s_cartan: Matrix<Rat>,
    /// Moving projection on Cartan coordinates.
    p_moving_cartan: Matrix<Rat>,
    /// Inverse Gram matrix of the invariant form on algebra coordinates;
    /// its columns are the form-duals of the axes.
    dual: Matrix<Rat>,
}

/// Build and certify the r-matrix of the adapted positive system of `s`.
pub fn build_r(
    sys: &RootSystem,
    ctx: &RepContext,
    possys: &PositiveSystemS,
    s: &WeylElement,
) -> Result<RMatrix> {
    let chev = &ctx.chevalley;
    let rank = chev.rank;
    let nr = chev.num_roots;
    let dim = chev.dim();

    // The class element on the coroot basis: column j is the coroot of the
    // image of the j-th simple root (the Weyl action permutes coroots the
    // same way it permutes roots).
    let mut s_cartan = Matrix::<Rat>::zeros(rank, rank);
    for j in 0..rank {
        let mut e = vec![0i64; rank];
        e[j] = 1;
        let simple = sys.root_index(&e).expect("simple roots exist");
        let image = sys
            .root_index(&s.mat.apply(sys.root(simple)))
            .expect("Weyl images of roots are roots");
        for (i, c) in sys.coroot_coords(image).into_iter().enumerate() {
            s_cartan[(i, j)] = crate::scalar::rat_int(c);
        }
    }
    // The Weyl action is orthogonal for the Cartan block of the form.
    assert_eq!(
        s_cartan.transpose().mul(&chev.form_h).mul(&s_cartan),
        chev.form_h,
        "class element preserves the Cartan form"
    );

    // Moving part: column space of (w - 1).  Fixed part: its kernel.
    let moved = s_cartan.sub(&Matrix::identity(rank));
    let mut moving: Vec<Vec<Rat>> = Vec::new();
    for j in 0..rank {
        let col: Vec<Rat> = (0..rank).map(|i| moved[(i, j)].clone()).collect();
        let mut trial = moving.clone();
        trial.push(col);
        if Matrix::from_rows(trial.clone()).rank() == trial.len() {
            moving = trial;
        }
    }
    let fixed = moved.kernel_basis();
    let k = moving.len();
    assert_eq!(k + fixed.len(), rank, "moving and fixed parts span the Cartan");
    for m in &moving {
        for f in &fixed {
            assert!(
                chev.form_h.mul_vec(f).iter().zip(m).map(|(a, b)| a.clone() * b.clone()).sum::<Rat>().is_zero(),
                "moving and fixed Cartan parts are form-orthogonal"
            );
        }
    }

    // Change of basis adapted to the split, and the blocks of w in it.
    let mut t = Matrix::<Rat>::zeros(rank, rank);
    for (j, col) in moving.iter().chain(fixed.iter()).enumerate() {
        for i in 0..rank {
            t[(i, j)] = col[i].clone();
        }
    }
    let t_inv = t.inverse().expect("basis adapted to the split is invertible");
    let blocks = t_inv.mul(&s_cartan).mul(&t);
    let mut s_moving = Matrix::<Rat>::zeros(k, k);
    for i in 0..rank {
        for j in 0..rank {
            if i < k && j < k {
                s_moving[(i, j)] = blocks[(i, j)].clone();
            } else if i == j {
                assert!(blocks[(i, j)].is_one(), "fixed block of w is the identity");
            } else {
                assert!(blocks[(i, j)].is_zero(), "w preserves the moving/fixed split");
            }
        }
    }

    // Cayley factor on the moving block.
    let cayley_moving = Matrix::<Rat>::identity(k)
        .sub(&s_moving)
        .inverse()
        .ok_or(Error::CayleyUndefined)?
        .mul(&Matrix::identity(k).add(&s_moving));
    let embed = |block: &Matrix<Rat>| -> Matrix<Rat> {
        let mut padded = Matrix::<Rat>::zeros(rank, rank);
        for i in 0..k {
            for j in 0..k {
                padded[(i, j)] = block[(i, j)].clone();
            }
        }
        t.mul(&padded).mul(&t_inv)
    };
    let cayley = embed(&cayley_moving);
    let p_moving_cartan = embed(&Matrix::identity(k));
    // The defining equation of the block, checked on the original basis.
    let eye = Matrix::<Rat>::identity(rank);
    assert_eq!(
        eye.sub(&s_cartan).mul(&cayley),
        eye.add(&s_cartan).mul(&p_moving_cartan),
        "Cayley block solves its defining equation"
    );
    assert_eq!(cayley.mul(&p_moving_cartan), cayley, "Cayley block lives on the moving part");
    assert_eq!(
        p_moving_cartan.mul(&p_moving_cartan),
        p_moving_cartan,
        "moving projection is idempotent"
    );

    // Assemble the full endomorphisms on algebra coordinates.
    let mut matrix = Matrix::<Rat>::zeros(dim, dim);
    let mut p_plus = Matrix::<Rat>::zeros(dim, dim);
    let mut p_minus = Matrix::<Rat>::zeros(dim, dim);
    let mut p_moving = Matrix::<Rat>::zeros(dim, dim);
    for a in 0..nr {
        if possys.is_positive(a) {
            matrix[(a, a)] = Rat::one();
            p_plus[(a, a)] = Rat::one();
        } else {
            matrix[(a, a)] = -Rat::one();
            p_minus[(a, a)] = Rat::one();
        }
    }
    for i in 0..rank {
        for j in 0..rank {
            matrix[(nr + i, nr + j)] = -cayley[(i, j)].clone();
            p_moving[(nr + i, nr + j)] = p_moving_cartan[(i, j)].clone();
        }
    }

    // Invariant form on algebra coordinates.
    let mut gram = Matrix::<Rat>::zeros(dim, dim);
    for a in 0..nr {
        gram[(a, sys.neg_index(a))] = chev.form_root[a].clone();
    }
    for i in 0..rank {
        for j in 0..rank {
            gram[(nr + i, nr + j)] = chev.form_h[(i, j)].clone();
        }
    }
    assert_eq!(gram, gram.transpose(), "invariant form is symmetric");
    let dual = gram.inverse().expect("invariant form is nondegenerate");

    // Skew-symmetry: r^T G + G r = 0.
    assert!(
        matrix.transpose().mul(&gram).add(&gram.mul(&matrix)).is_zero_matrix(),
        "r is skew for the invariant form"
    );

    // Modified classical Yang-Baxter identity on all basis pairs.
    let r_cols: Vec<Vec<Rat>> =
        (0..dim).map(|a| (0..dim).map(|i| matrix[(i, a)].clone()).collect()).collect();
    for a in 0..dim {
        let x = axis_vec(chev, a);
        for b in 0..dim {
            let y = axis_vec(chev, b);
            let cross = vec_add(&chev.bracket(&r_cols[a], &y), &chev.bracket(&x, &r_cols[b]));
            let lhs = vec_sub(
                &chev.bracket(&r_cols[a], &r_cols[b]),
                &matrix.mul_vec(&cross),
            );
            assert_eq!(
                lhs,
                vec_neg(&chev.bracket(&x, &y)),
                "modified Yang-Baxter identity at basis pair ({a}, {b})"
            );
        }
    }

    let half = rat(1, 2);
    let r_plus = matrix.add(&Matrix::identity(dim)).map(|c| c.clone() * half.clone());
    let r_minus = matrix.sub(&Matrix::identity(dim)).map(|c| c.clone() * half.clone());
    assert_eq!(r_plus.sub(&r_minus), Matrix::identity(dim), "halves differ by the identity");

    Ok(RMatrix {
        matrix,
        p_plus,
        p_minus,
        p_moving,
        cayley,
        r_plus,
        r_minus,
        s_cartan,
        p_moving_cartan,
        dual,
    })
}

// ---------------------------------------------------------------------------
// Matrix-coefficient function trees.
// ---------------------------------------------------------------------------

/// A function on the group: an expression tree over matrix coefficients of
/// the fundamental modules, rational constants, the four arithmetic
/// operations, and subtrees projected onto conjugation invariants of the
/// transversal cell.  Evaluation is exact over any scalar type, so the same
/// tree evaluates at rational points and at dual-number displacements.
#[derive(Clone, Debug, PartialEq)]
pub enum GFunction {
    /// The `(row, col)` entry of the point in the given fundamental module.
    Coefficient { module: usize, row: usize, col: usize },
    Constant(Rat),
    Sum(Box<GFunction>, Box<GFunction>),
    Difference(Box<GFunction>, Box<GFunction>),
    Product(Box<GFunction>, Box<GFunction>),
    Quotient(Box<GFunction>, Box<GFunction>),
    /// The inner function evaluated at the projected point of the
    /// transversal cell; requires a slice context at evaluation time.
    Projected(Box<GFunction>),
}

impl GFunction {
    /// Matrix coefficient `g -> g[(row, col)]` in the given module.
    pub fn mc(module: usize, row: usize, col: usize) -> Self {
        GFunction::Coefficient { module, row, col }
    }

    pub fn constant(c: Rat) -> Self {
        GFunction::Constant(c)
    }

    /// Wrap a function with the projection onto cell invariants.
    pub fn projected(f: GFunction) -> Self {
        GFunction::Projected(Box::new(f))
    }

    /// The trace of a fundamental module: a conjugation-invariant function.
    pub fn character(ctx: &RepContext, module: usize) -> Self {
        let dim = ctx.modules[module].dim;
        let mut acc = GFunction::mc(module, 0, 0);
        for b in 1..dim {
            acc = acc + GFunction::mc(module, b, b);
        }
        acc
    }

    /// Exact evaluation at a group word.  Module matrices are computed at
    /// most once per call; projected subtrees re-evaluate at the transformed
    /// point through the supplied slice context.
    pub fn value<S: Scalar>(
        &self,
        ctx: &RepContext,
        slice: Option<&SliceContext>,
        g: &GroupElement<S>,
    ) -> Result<S> {
        let mut cache: Vec<Option<Matrix<S>>> = vec![None; ctx.modules.len()];
        self.value_memo(ctx, slice, g, &mut cache)
    }

    fn value_memo<S: Scalar>(
        &self,
        ctx: &RepContext,
        slice: Option<&SliceContext>,
        g: &GroupElement<S>,
        cache: &mut Vec<Option<Matrix<S>>>,
    ) -> Result<S> {
        match self {
            GFunction::Coefficient { module, row, col } => {
                if *module >= ctx.modules.len() {
                    return Err(Error::invalid(format!(
                        "module index {module} out of range (have {})",
                        ctx.modules.len()
                    )));
                }
                let dim = ctx.modules[*module].dim;
                if *row >= dim || *col >= dim {
                    return Err(Error::invalid(format!(
                        "coefficient ({row}, {col}) out of range for a module of dimension {dim}"
                    )));
                }
                if cache[*module].is_none() {
                    cache[*module] = Some(g.evaluate(&ctx.modules[*module])?);
                }
                Ok(cache[*module].as_ref().expect("just filled")[(*row, *col)].clone())
            }
            GFunction::Constant(c) => Ok(S::from_rat(c)),
            GFunction::Sum(a, b) => {
                Ok(a.value_memo(ctx, slice, g, cache)? + b.value_memo(ctx, slice, g, cache)?)
            }
            GFunction::Difference(a, b) => {
                Ok(a.value_memo(ctx, slice, g, cache)? - b.value_memo(ctx, slice, g, cache)?)
            }
            GFunction::Product(a, b) => {
                Ok(a.value_memo(ctx, slice, g, cache)? * b.value_memo(ctx, slice, g, cache)?)
            }
            GFunction::Quotient(a, b) => {
                let den = b.value_memo(ctx, slice, g, cache)?;
                let inv = den.try_inv().ok_or(Error::DivisionByZero)?;
                Ok(a.value_memo(ctx, slice, g, cache)? * inv)
            }
            GFunction::Projected(inner) => {
                let sc = slice.ok_or_else(|| {
                    Error::invalid(
                        "projected function trees need a slice context to evaluate".to_string(),
                    )
                })?;
                sc.zhelobenko_apply(|p| inner.value(ctx, slice, p), g)
            }
        }
    }
}

impl std::ops::Add for GFunction {
    type Output = GFunction;
    fn add(self, rhs: GFunction) -> GFunction {
        GFunction::Sum(Box::new(self), Box::new(rhs))
    }
}
impl std::ops::Sub for GFunction {
    type Output = GFunction;
    fn sub(self, rhs: GFunction) -> GFunction {
        GFunction::Difference(Box::new(self), Box::new(rhs))
    }
}
impl std::ops::Mul for GFunction {
    type Output = GFunction;
    fn mul(self, rhs: GFunction) -> GFunction {
        GFunction::Product(Box::new(self), Box::new(rhs))
    }
}
impl std::ops::Div for GFunction {
    type Output = GFunction;
    fn div(self, rhs: GFunction) -> GFunction {
        GFunction::Quotient(Box::new(self), Box::new(rhs))
    }
}

impl std::fmt::Display for GFunction {
    /// Canonical descriptor syntax, accepted back by the command-line
    /// front end: `mc(m,i,j)`, rational literals, the four infix operators
    /// with explicit parentheses, and `pi(...)` for projected subtrees.
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GFunction::Coefficient { module, row, col } => {
                write!(out, "mc({module},{row},{col})")
            }
            GFunction::Constant(c) => write!(out, "{c}"),
            GFunction::Sum(a, b) => write!(out, "({a} + {b})"),
            GFunction::Difference(a, b) => write!(out, "({a} - {b})"),
            GFunction::Product(a, b) => write!(out, "({a} * {b})"),
            GFunction::Quotient(a, b) => write!(out, "({a} / {b})"),
            GFunction::Projected(inner) => write!(out, "pi({inner})"),
        }
    }
}

// ---------------------------------------------------------------------------
// Points of the dual group.
// ---------------------------------------------------------------------------

/// A point of the dual group, embedded as a pair of group words: `plus` has
/// raising and `minus` lowering unipotent parts for the adapted system, and
/// their torus parts are the two half-images of one Cartan vector.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPair<S> {
    pub plus: GroupElement<S>,
    pub minus: GroupElement<S>,
}

/// A function on the dual group: a function of the first component, of the
/// second, or a function on the group pulled back along the quotient map
/// `(L_+, L_-) -> L_- L_+^{-1}`.
#[derive(Clone, Debug)]
pub enum DualFunction {
    Plus(GFunction),
    Minus(GFunction),
    ThroughQ(GFunction),
}

// ---------------------------------------------------------------------------
// The bundled bracket context.
// ---------------------------------------------------------------------------

/// Cached per-word conjugation data over the faithful blocks: the evaluated
/// matrices of a word and of its word inverse.  Conjugating with these never
/// inverts a matrix, so the action is defined over dual numbers as well.
struct Conjugator<S> {
    forward: Vec<Matrix<S>>,
    backward: Vec<Matrix<S>>,
}

impl<S: Scalar> Conjugator<S> {
    /// `Ad(g) x` on algebra coordinates.
    fn ad(&self, ctx: &RepContext, x: &[S]) -> Result<Vec<S>> {
        let mats = ctx.algebra_matrices(x);
        let conjugated: Vec<Matrix<S>> = self
            .forward
            .iter()
            .zip(&mats)
            .zip(&self.backward)
            .map(|((g, m), gi)| g.mul(m).mul(gi))
            .collect();
        ctx.expand(&conjugated)
    }

    /// `Ad(g^{-1}) x` on algebra coordinates.
    fn ad_inv(&self, ctx: &RepContext, x: &[S]) -> Result<Vec<S>> {
        let mats = ctx.algebra_matrices(x);
        let conjugated: Vec<Matrix<S>> = self
            .backward
            .iter()
            .zip(&mats)
            .zip(&self.forward)
            .map(|((gi, m), g)| gi.mul(m).mul(g))
            .collect();
        ctx.expand(&conjugated)
    }
}

/// Everything the bracket operations need: the modules and constants, the
/// class element, its certified r-matrix, and the raising half of the
/// adapted root list.
pub struct PoissonContext<'a> {
    pub sys: &'a RootSystem,
    pub ctx: &'a RepContext,
    /// The class element whose adapted decomposition defines `r`.
    pub s: WeylElement,
    pub r: RMatrix,
    /// Root indices of the raising half (the adapted positives).
    pub positive_roots: Vec<usize>,
}

impl<'a> PoissonContext<'a> {
    /// Build from an already-computed adapted positive system.
    pub fn new(
        sys: &'a RootSystem,
        ctx: &'a RepContext,
        possys: &PositiveSystemS,
        s: &WeylElement,
    ) -> Result<Self> {
        let r = build_r(sys, ctx, possys, s)?;
        let positive_roots =
            (0..sys.num_roots()).filter(|&a| possys.is_positive(a)).collect();
        Ok(PoissonContext { sys, ctx, s: s.clone(), r, positive_roots })
    }

    /// Run the full adapted-system pipeline for a class word, then build.
    pub fn for_class(
        sys: &'a RootSystem,
        ctx: &'a RepContext,
        s_word: &[usize],
        seed: u64,
    ) -> Result<Self> {
        let s = sys.weyl_from_word(s_word);
        let decomposition = carter_decompose(sys, &s, seed)?;
        let spectral = invariant_subspaces(sys, &s, &decomposition, seed)?;
        let possys = associated_positive_system(sys, &spectral)?;
        Self::new(sys, ctx, &possys, &s)
    }

    /// The invariant form on coordinate vectors.
    fn pair<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        self.ctx.chevalley.form(x, y)
    }

    /// The second Lie bracket `[X,Y]_* = ([rX, Y] + [X, rY]) / 2`.
    pub fn star_bracket<S: Scalar>(&self, x: &[S], y: &[S]) -> Vec<S> {
        let chev = &self.ctx.chevalley;
        let rx = apply_rat(&self.r.matrix, x);
        let ry = apply_rat(&self.r.matrix, y);
        let sum = vec_add(&chev.bracket(&rx, y), &chev.bracket(x, &ry));
        let half = S::from_rat(&rat(1, 2));
        sum.into_iter().map(|c| c * half.clone()).collect()
    }

    // -- gradients ---------------------------------------------------------

    /// The word `1 + eps x_a` for the `a`-th algebra axis.
    fn axis_displacement<S: Scalar>(&self, a: usize) -> GroupElement<Jet<S>> {
        displacement(&self.ctx.chevalley, &axis_vec(&self.ctx.chevalley, a))
    }

    /// Directional derivatives along every axis, folded with the dual basis:
    /// the gradient characterized by `<x_a, grad f> = (d/dt) f((1+t x_a) g)`
    /// (left) or `f(g (1+t x_a))` (right).
    fn jet_gradient<S: Scalar>(
        &self,
        eval: &impl Fn(&GroupElement<Jet<S>>) -> Result<Jet<S>>,
        at: &GroupElement<S>,
        right: bool,
    ) -> Result<Vec<S>> {
        let dim = self.ctx.chevalley.dim();
        let lifted = at.map_scalars(|v| Jet::constant(v.clone()));
        let mut derivs = Vec::with_capacity(dim);
        for a in 0..dim {
            let step = self.axis_displacement::<S>(a);
            let moved = if right { lifted.mul(&step) } else { step.mul(&lifted) };
            derivs.push(eval(&moved)?.d);
        }
        Ok(apply_rat(&self.r.dual, &derivs))
    }

    /// Left and right gradients of a function tree at a point, as algebra
    /// coordinate vectors for the invariant form.
    pub fn gradients<S: Scalar>(
        &self,
        f: &GFunction,
        slice: Option<&SliceContext>,
        at: &GroupElement<S>,
    ) -> Result<(Vec<S>, Vec<S>)> {
        let eval = |p: &GroupElement<Jet<S>>| f.value(self.ctx, slice, p);
        Ok((self.jet_gradient(&eval, at, false)?, self.jet_gradient(&eval, at, true)?))
    }

    /// Word-level conjugation data for a point.
    fn conjugator<S: Scalar>(&self, g: &GroupElement<S>) -> Result<Conjugator<S>> {
        let gi = g.inverse(self.sys)?;
        let mut forward = Vec::with_capacity(self.ctx.faithful.len());
        let mut backward = Vec::with_capacity(self.ctx.faithful.len());
        for &mi in &self.ctx.faithful {
            forward.push(g.evaluate(&self.ctx.modules[mi])?);
            backward.push(gi.evaluate(&self.ctx.modules[mi])?);
        }
        Ok(Conjugator { forward, backward })
    }

    // -- brackets on the group ----------------------------------------------

    /// `(<r grad f1, grad f2> - <r grad' f1, grad' f2>) / 2` from a pair of
    /// (left, right) gradients per argument.
    fn assemble_multiplicative<S: Scalar>(
        &self,
        g1: (&[S], &[S]),
        g2: (&[S], &[S]),
    ) -> S {
        let left = self.pair(&apply_rat(&self.r.matrix, g1.0), g2.0);
        let right = self.pair(&apply_rat(&self.r.matrix, g1.1), g2.1);
        (left - right) * S::from_rat(&rat(1, 2))
    }

    /// The multiplicative bracket on the group.
    pub fn bracket_g<S: Scalar>(
        &self,
        f1: &GFunction,
        f2: &GFunction,
        slice: Option<&SliceContext>,
        at: &GroupElement<S>,
    ) -> Result<S> {
        let g1 = self.gradients(f1, slice, at)?;
        let g2 = self.gradients(f2, slice, at)?;
        Ok(self.assemble_multiplicative((&g1.0, &g1.1), (&g2.0, &g2.1)))
    }

    /// The four-term twisted assembly from left gradients and their primed
    /// companions (right gradients, or conjugated left gradients):
    /// `-<r l1, l2> - <r p1, p2> + 2 <r_- p1, l2> + 2 <r_+ l1, p2>`.
    fn assemble_twisted<S: Scalar>(
        &self,
        l1: &[S],
        p1: &[S],
        l2: &[S],
        p2: &[S],
    ) -> S {
        let two = S::from_rat(&rat(2, 1));
        let t1 = self.pair(&apply_rat(&self.r.matrix, l1), l2);
        let t2 = self.pair(&apply_rat(&self.r.matrix, p1), p2);
        let t3 = self.pair(&apply_rat(&self.r.r_minus, p1), l2);
        let t4 = self.pair(&apply_rat(&self.r.r_plus, l1), p2);
        -t1 - t2 + two.clone() * t3 + two * t4
    }

    /// The twisted bracket on the group, evaluated along two independent
    /// routes — once with right gradients from dual-number displacement,
    /// once with left gradients conjugated by the word inverse — which must
    /// agree exactly.
    pub fn bracket_gstar<S: Scalar>(
        &self,
        f1: &GFunction,
        f2: &GFunction,
        slice: Option<&SliceContext>,
        at: &GroupElement<S>,
    ) -> Result<S> {
        let (l1, r1) = self.gradients(f1, slice, at)?;
        let (l2, r2) = self.gradients(f2, slice, at)?;
        let conj = self.conjugator(at)?;
        let a1 = conj.ad_inv(self.ctx, &l1)?;
        let a2 = conj.ad_inv(self.ctx, &l2)?;
        let via_ad = self.assemble_twisted(&l1, &a1, &l2, &a2);
        let via_right = self.assemble_twisted(&l1, &r1, &l2, &r2);
        if via_ad != via_right {
            return Err(Error::invalid(
                "twisted-bracket routes disagree: conjugated left gradients differ from right gradients"
                    .to_string(),
            ));
        }
        Ok(via_ad)
    }

    /// The cyclic sum `{f1,{f2,f3}} + {f2,{f3,f1}} + {f3,{f1,f2}}` for one of
    /// the two group brackets, computed with nested dual numbers: the inner
    /// bracket is evaluated over jets, so its value becomes differentiable in
    /// turn and the outer bracket assembles from its exact gradients.  An
    /// exact zero certifies the Jacobi identity at the point.
    pub fn jacobi_defect(
        &self,
        twisted: bool,
        f: [&GFunction; 3],
        slice: Option<&SliceContext>,
        at: &GroupElement<Rat>,
    ) -> Result<Rat> {
        let term = |a: &GFunction, b: &GFunction, c: &GFunction| -> Result<Rat> {
            let eval = |p: &GroupElement<Jet<Rat>>| {
                if twisted {
                    self.bracket_gstar(b, c, slice, p)
                } else {
                    self.bracket_g(b, c, slice, p)
                }
            };
            let (la, ra) = self.gradients(a, slice, at)?;
            let lbc = self.jet_gradient(&eval, at, false)?;
            let rbc = self.jet_gradient(&eval, at, true)?;
            Ok(if twisted {
                self.assemble_twisted(&la, &ra, &lbc, &rbc)
            } else {
                self.assemble_multiplicative((&la, &ra), (&lbc, &rbc))
            })
        };
        Ok(term(f[0], f[1], f[2])? + term(f[1], f[2], f[0])? + term(f[2], f[0], f[1])?)
    }

    // -- the dual group ------------------------------------------------------

    /// The quotient map `(L_+, L_-) -> L_- L_+^{-1}` as a group word.
    pub fn q_map<S: Scalar>(&self, pair: &DualPair<S>) -> Result<GroupElement<S>> {
        Ok(pair.minus.mul(&pair.plus.inverse(self.sys)?))
    }

    /// Evaluate a dual-group function at a pair.
    pub fn dual_value<S: Scalar>(
        &self,
        f: &DualFunction,
        slice: Option<&SliceContext>,
        pair: &DualPair<S>,
    ) -> Result<S> {
        match f {
            DualFunction::Plus(g) => g.value(self.ctx, slice, &pair.plus),
            DualFunction::Minus(g) => g.value(self.ctx, slice, &pair.minus),
            DualFunction::ThroughQ(g) => g.value(self.ctx, slice, &self.q_map(pair)?),
        }
    }

    /// Gradient of a dual-group function for the dual-group structure: the
    /// displacement along `x_a` moves the two components by the two halves
    /// `r_+ x_a` and `r_- x_a`.
    fn dual_jet_gradient<S: Scalar>(
        &self,
        f: &DualFunction,
        slice: Option<&SliceContext>,
        pair: &DualPair<S>,
        right: bool,
    ) -> Result<Vec<S>> {
        let chev = &self.ctx.chevalley;
        let dim = chev.dim();
        let plus = pair.plus.map_scalars(|v| Jet::constant(v.clone()));
        let minus = pair.minus.map_scalars(|v| Jet::constant(v.clone()));
        let mut derivs = Vec::with_capacity(dim);
        for a in 0..dim {
            let xp: Vec<Rat> = (0..dim).map(|i| self.r.r_plus[(i, a)].clone()).collect();
            let xm: Vec<Rat> = (0..dim).map(|i| self.r.r_minus[(i, a)].clone()).collect();
            let dp = displacement::<S>(chev, &xp);
            let dm = displacement::<S>(chev, &xm);
            let moved = if right {
                DualPair { plus: plus.mul(&dp), minus: minus.mul(&dm) }
            } else {
                DualPair { plus: dp.mul(&plus), minus: dm.mul(&minus) }
            };
            derivs.push(self.dual_value(f, slice, &moved)?.d);
        }
        Ok(apply_rat(&self.r.dual, &derivs))
    }

    /// The bracket on the dual group:
    /// `<grad f1, (Ad L_+ - Ad L_-) grad' f2> - <(Ad L_+ - Ad L_-) grad' f1, grad f2>`
    /// with dual-group gradients.  The overall orientation is the one that
    /// makes the quotient map `q` a Poisson map onto the twisted structure;
    /// a rank-one hand computation fixes it unambiguously.
    pub fn bracket_dual<S: Scalar>(
        &self,
        f1: &DualFunction,
        f2: &DualFunction,
        slice: Option<&SliceContext>,
        pair: &DualPair<S>,
    ) -> Result<S> {
        let l1 = self.dual_jet_gradient(f1, slice, pair, false)?;
        let r1 = self.dual_jet_gradient(f1, slice, pair, true)?;
        let l2 = self.dual_jet_gradient(f2, slice, pair, false)?;
        let r2 = self.dual_jet_gradient(f2, slice, pair, true)?;
        let cp = self.conjugator(&pair.plus)?;
        let cm = self.conjugator(&pair.minus)?;
        let d1 = vec_sub(&cp.ad(self.ctx, &r1)?, &cm.ad(self.ctx, &r1)?);
        let d2 = vec_sub(&cp.ad(self.ctx, &r2)?, &cm.ad(self.ctx, &r2)?);
        Ok(self.pair(&l1, &d2) - self.pair(&d1, &l2))
    }

    /// The integer matrix `E` with `log h_- = E log h_+` linking the torus
    /// parts of an embedded dual-group point, on coroot coordinates: the
    /// inverse class element on the moving part and `-1` on the fixed part.
    /// Errors when `E` is not integral, since then the linkage has no exact
    /// monomial form.
    pub fn torus_exponent(&self) -> Result<Vec<Vec<i64>>> {
        let rank = self.ctx.chevalley.rank;
        let s_inv = self.r.s_cartan.inverse().expect("Weyl action is invertible");
        let p_fixed = Matrix::<Rat>::identity(rank).sub(&self.r.p_moving_cartan);
        let e = s_inv.mul(&self.r.p_moving_cartan).sub(&p_fixed);
        let mut out = vec![vec![0i64; rank]; rank];
        for i in 0..rank {
            for j in 0..rank {
                let c = &e[(i, j)];
                if !c.denom().is_one() {
                    return Err(Error::UnsupportedField(format!(
                        "dual-group torus linkage has non-integral exponent {c} at ({i}, {j})"
                    )));
                }
                out[i][j] = c
                    .numer()
                    .try_into()
                    .map_err(|_| Error::invalid("torus exponent does not fit in i64".to_string()))?;
            }
        }
        Ok(out)
    }

    /// Sample a dual-group point: random unipotent words over the two
    /// halves, a random invertible torus in the first component, and the
    /// linked torus in the second.
    pub fn sample_dual_pair(&self, rng: &mut impl Rng) -> Result<DualPair<Rat>> {
        fn small(rng: &mut impl Rng) -> Rat {
            rat(rng.gen_range(-3..=3), rng.gen_range(1..=2))
        }
        fn nonzero(rng: &mut impl Rng) -> Rat {
            loop {
                let x = small(rng);
                if !x.is_zero() {
                    return x;
                }
            }
        }
        let rank = self.ctx.chevalley.rank;
        let exponent = self.torus_exponent()?;
        let mut plus = GroupElement::identity();
        let mut minus = GroupElement::identity();
        for &a in &self.positive_roots {
            plus = plus.mul(&GroupElement::one_param(a, small(rng)));
            minus = minus.mul(&GroupElement::one_param(self.sys.neg_index(a), small(rng)));
        }
        let up: Vec<Rat> = (0..rank).map(|_| nonzero(rng)).collect();
        let mut um = Vec::with_capacity(rank);
        for i in 0..rank {
            let mut v = Rat::one();
            for (j, u) in up.iter().enumerate() {
                v = v * u.try_pow(exponent[i][j]).expect("nonzero entries have all powers");
            }
            um.push(v);
        }
        Ok(DualPair {
            plus: plus.mul(&GroupElement::torus(up)),
            minus: minus.mul(&GroupElement::torus(um)),
        })
    }

    // -- the reduced bracket on the slice -------------------------------------

    /// The reduced bracket by its closed four-term formula: left gradients
    /// of the projection-invariant extensions at the cell point `m s^{-1}`,
    /// with the primed legs conjugated by `s m^{-1}`.
    pub fn reduced_bracket_direct<S: Scalar>(
        &self,
        slice: &SliceContext,
        f1: &GFunction,
        f2: &GFunction,
        m: &GroupElement<S>,
    ) -> Result<S> {
        let point = m.mul(&slice.s_inverse_word());
        let w1 = GFunction::projected(f1.clone());
        let w2 = GFunction::projected(f2.clone());
        let e1 = |p: &GroupElement<Jet<S>>| w1.value(self.ctx, Some(slice), p);
        let e2 = |p: &GroupElement<Jet<S>>| w2.value(self.ctx, Some(slice), p);
        let l1 = self.jet_gradient(&e1, &point, false)?;
        let l2 = self.jet_gradient(&e2, &point, false)?;
        let conj = self.conjugator(&point)?;
        let a1 = conj.ad_inv(self.ctx, &l1)?;
        let a2 = conj.ad_inv(self.ctx, &l2)?;
        Ok(self.assemble_twisted(&l1, &a1, &l2, &a2))
    }

    /// The reduced bracket as the twisted bracket of the projected
    /// extensions at `m s^{-1}`, with both gradient routes of the twisted
    /// bracket exercised through the projection.
    pub fn reduced_bracket_projected<S: Scalar>(
        &self,
        slice: &SliceContext,
        f1: &GFunction,
        f2: &GFunction,
        m: &GroupElement<S>,
    ) -> Result<S> {
        let point = m.mul(&slice.s_inverse_word());
        self.bracket_gstar(
            &GFunction::projected(f1.clone()),
            &GFunction::projected(f2.clone()),
            Some(slice),
            &point,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat_int;
    use rand::SeedableRng as _;
    use rand_chacha::ChaCha8Rng;

    fn setup(label: &str) -> (RootSystem, RepContext) {
        let sys = RootSystem::build(label).unwrap();
        let ctx = RepContext::new(&sys).unwrap();
        (sys, ctx)
    }

    fn random_point(sys: &RootSystem, rng: &mut impl Rng) -> GroupElement<Rat> {
        let mut g = GroupElement::identity();
        for a in 0..sys.num_roots() {
            if rng.gen_range(0..3) == 0 {
                continue;
            }
            g = g.mul(&GroupElement::one_param(
                a,
                rat(rng.gen_range(-2..=2), rng.gen_range(1..=2)),
            ));
        }
        let entries = (0..sys.rank())
            .map(|_| loop {
                let x = rat(rng.gen_range(-2..=2), rng.gen_range(1..=2));
                if !x.is_zero() {
                    break x;
                }
            })
            .collect();
        g.mul(&GroupElement::torus(entries))
    }

    fn random_mc(ctx: &RepContext, rng: &mut impl Rng) -> GFunction {
        let m = rng.gen_range(0..ctx.modules.len());
        let d = ctx.modules[m].dim;
        GFunction::mc(m, rng.gen_range(0..d), rng.gen_range(0..d))
    }

    fn gram_of(chev: &ChevalleyBasis) -> Matrix<Rat> {
        let dim = chev.dim();
        let mut g = Matrix::zeros(dim, dim);
        for i in 0..dim {
            let xi = axis_vec(chev, i);
            for j in 0..dim {
                g[(i, j)] = chev.form(&xi, &axis_vec(chev, j));
            }
        }
        g
    }

    fn random_unimodular(dim: usize, rng: &mut impl Rng) -> Matrix<Rat> {
        let mut b = Matrix::<Rat>::identity(dim);
        for _ in 0..3 * dim {
            let i = rng.gen_range(0..dim);
            let j = rng.gen_range(0..dim);
            if i == j {
                continue;
            }
            let k = rat_int(rng.gen_range(-2..=2));
            for row in 0..dim {
                let add = b[(row, i)].clone() * k.clone();
                b[(row, j)] = b[(row, j)].clone() + add;
            }
        }
        b
    }

    /// Gradient recomputed from scratch along the columns of an arbitrary
    /// invertible basis, folded with the dual basis for the invariant form.
    fn gradient_in_basis(
        pc: &PoissonContext,
        f: &GFunction,
        at: &GroupElement<Rat>,
        basis: &Matrix<Rat>,
        right: bool,
    ) -> Vec<Rat> {
        let chev = &pc.ctx.chevalley;
        let dim = chev.dim();
        let gram = gram_of(chev);
        let duals = basis.mul(&basis.transpose().mul(&gram).mul(basis).inverse().unwrap());
        let lifted = at.map_scalars(|v| Jet::constant(v.clone()));
        let mut derivs = Vec::with_capacity(dim);
        for j in 0..dim {
            let col: Vec<Rat> = (0..dim).map(|i| basis[(i, j)].clone()).collect();
            let step = displacement::<Rat>(chev, &col);
            let moved = if right { lifted.mul(&step) } else { step.mul(&lifted) };
            derivs.push(f.value(pc.ctx, None, &moved).unwrap().d);
        }
        duals.mul_vec(&derivs)
    }

    #[test]
    fn r_matrices_of_reference_classes_are_certified_and_match_frozen_blocks() {
        for (label, word) in [
            ("A1", vec![0usize]),
            ("A2", vec![0, 1]),
            ("B2", vec![0, 1]),
            ("A3", vec![0, 2]),
            ("A3", vec![0, 1, 2]),
        ] {
            let (sys, ctx) = setup(label);
            let pc = PoissonContext::for_class(&sys, &ctx, &word, 0).unwrap();
            let dim = ctx.chevalley.dim();
            let rank = sys.rank();
            assert_eq!(pc.positive_roots.len(), sys.num_roots() / 2, "{label}");
            assert_eq!(pc.r.r_plus.sub(&pc.r.r_minus), Matrix::identity(dim), "{label}");
            // directions fixed by the class element are annihilated by r
            let fixed = pc.r.s_cartan.sub(&Matrix::identity(rank)).kernel_basis();
            assert_eq!(fixed.len() + pc.r.p_moving_cartan.rank(), rank, "{label}");
            for v in &fixed {
                let mut x = vec![Rat::zero(); dim];
                for i in 0..rank {
                    x[sys.num_roots() + i] = v[i].clone();
                }
                assert!(
                    pc.r.matrix.mul_vec(&x).iter().all(|c| c.is_zero()),
                    "{label}: r kills the fixed Cartan directions"
                );
            }
        }
        // frozen Cayley block of the rank-two Coxeter class
        let (sys, ctx) = setup("A2");
        let pc = PoissonContext::for_class(&sys, &ctx, &[0, 1], 0).unwrap();
        let expected =
            Matrix::from_rows(vec![vec![rat(1, 3), rat(-2, 3)], vec![rat(2, 3), rat(-1, 3)]]);
        assert_eq!(pc.r.cayley, expected);
        let nr = sys.num_roots();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(pc.r.matrix[(nr + i, nr + j)], -expected[(i, j)].clone());
            }
        }
    }

    #[test]
    fn the_star_bracket_is_a_lie_bracket_matching_the_plain_bracket_on_the_raising_half() {
        for (label, word) in [("A2", vec![0usize, 1]), ("B2", vec![0, 1])] {
            let (sys, ctx) = setup(label);
            let pc = PoissonContext::for_class(&sys, &ctx, &word, 0).unwrap();
            let chev = &ctx.chevalley;
            let dim = chev.dim();
            let axes: Vec<Vec<Rat>> = (0..dim).map(|a| axis_vec(chev, a)).collect();
            for x in &axes {
                for y in &axes {
                    assert_eq!(pc.star_bracket(x, y), vec_neg(&pc.star_bracket(y, x)));
                }
            }
            for x in &axes {
                for y in &axes {
                    for z in &axes {
                        let cyc = vec_add(
                            &pc.star_bracket(&pc.star_bracket(x, y), z),
                            &vec_add(
                                &pc.star_bracket(&pc.star_bracket(y, z), x),
                                &pc.star_bracket(&pc.star_bracket(z, x), y),
                            ),
                        );
                        assert!(
                            cyc.iter().all(|c| c.is_zero()),
                            "{label}: Jacobi identity for the second bracket"
                        );
                    }
                }
            }
            for &a in &pc.positive_roots {
                for &b in &pc.positive_roots {
                    assert_eq!(
                        pc.star_bracket(&axes[a], &axes[b]),
                        chev.bracket(&axes[a], &axes[b]),
                        "{label}: raising vectors bracket identically"
                    );
                }
            }
        }
        // in rank one the two root vectors commute for the second bracket
        let (sys, ctx) = setup("A1");
        let pc = PoissonContext::for_class(&sys, &ctx, &[0], 0).unwrap();
        let e = ctx.chevalley.root_axis::<Rat>(0);
        let f = ctx.chevalley.root_axis::<Rat>(1);
        assert!(pc.star_bracket(&e, &f).iter().all(|c| c.is_zero()));
        let _ = sys;
    }

    #[test]
    fn gradients_match_directional_derivatives_and_are_basis_independent() {
        // frozen rank-one value: the gradient of the leading matrix
        // coefficient at the identity is half the coroot axis
        let (sys, ctx) = setup("A1");
        let pc = PoissonContext::for_class(&sys, &ctx, &[0], 0).unwrap();
        let id = GroupElement::<Rat>::identity();
        let (l, r) = pc.gradients(&GFunction::mc(0, 0, 0), None, &id).unwrap();
        assert_eq!(l, vec![Rat::zero(), Rat::zero(), rat(1, 2)]);
        assert_eq!(r, l);
        let (lc, rc) = pc.gradients(&GFunction::constant(rat(7, 3)), None, &id).unwrap();
        assert!(lc.iter().all(|c| c.is_zero()) && rc.iter().all(|c| c.is_zero()));

        let (sys, ctx) = setup("A2");
        let pc = PoissonContext::for_class(&sys, &ctx, &[0, 1], 0).unwrap();
        let chev = &ctx.chevalley;
        let dim = chev.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..4 {
            let g = random_point(&sys, &mut rng);
            let f = random_mc(&ctx, &mut rng) * random_mc(&ctx, &mut rng)
                + random_mc(&ctx, &mut rng);
            let (l, r) = pc.gradients(&f, None, &g).unwrap();

            // pairing against a random direction recovers the derivative
            let x: Vec<Rat> = (0..dim).map(|_| rat_int(rng.gen_range(-2..=2))).collect();
            let step = displacement::<Rat>(chev, &x);
            let lifted = g.map_scalars(|v| Jet::constant(v.clone()));
            assert_eq!(pc.pair(&x, &l), f.value(&ctx, None, &step.mul(&lifted)).unwrap().d);
            assert_eq!(pc.pair(&x, &r), f.value(&ctx, None, &lifted.mul(&step)).unwrap().d);

            // the right gradient is the conjugated left gradient
            let conj = pc.conjugator(&g).unwrap();
            assert_eq!(conj.ad_inv(&ctx, &l).unwrap(), r);

            // recomputing in a sheared basis changes nothing
            let basis = random_unimodular(dim, &mut rng);
            assert_eq!(gradient_in_basis(&pc, &f, &g, &basis, false), l);
            assert_eq!(gradient_in_basis(&pc, &f, &g, &basis, true), r);

            // composing with a right translation moves the base point
            let a = random_point(&sys, &mut rng);
            let a_lift = a.map_scalars(|v| Jet::constant(v.clone()));
            let eval = |p: &GroupElement<Jet<Rat>>| f.value(&ctx, None, &p.mul(&a_lift));
            let translated = pc.jet_gradient(&eval, &g, false).unwrap();
            let (expected, _) = pc.gradients(&f, None, &g.mul(&a)).unwrap();
            assert_eq!(translated, expected);
        }
    }

    #[test]
    fn the_multiplicative_bracket_is_skew_and_vanishes_at_the_identity() {
        for (label, word) in [("A2", vec![0usize, 1]), ("B2", vec![0, 1])] {
            let (sys, ctx) = setup(label);
            let pc = PoissonContext::for_class(&sys, &ctx, &word, 0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(23);
            let mut nonzero = false;
            for _ in 0..4 {
                let g = random_point(&sys, &mut rng);
                let f1 = random_mc(&ctx, &mut rng);
                let f2 = random_mc(&ctx, &mut rng) + random_mc(&ctx, &mut rng);
                let b12 = pc.bracket_g(&f1, &f2, None, &g).unwrap();
                let b21 = pc.bracket_g(&f2, &f1, None, &g).unwrap();
                assert_eq!(b12, -b21.clone(), "{label}: skew-symmetry");
                assert!(pc.bracket_g(&f1, &f1, None, &g).unwrap().is_zero());
                nonzero |= !b12.is_zero();

                // independent recomputation with sheared-basis gradients
                let basis = random_unimodular(ctx.chevalley.dim(), &mut rng);
                let g1 = (
                    gradient_in_basis(&pc, &f1, &g, &basis, false),
                    gradient_in_basis(&pc, &f1, &g, &basis, true),
                );
                let g2 = (
                    gradient_in_basis(&pc, &f2, &g, &basis, false),
                    gradient_in_basis(&pc, &f2, &g, &basis, true),
                );
                assert_eq!(
                    pc.assemble_multiplicative((&g1.0, &g1.1), (&g2.0, &g2.1)),
                    b12,
                    "{label}: basis-independent value"
                );
            }
            assert!(nonzero, "{label}: bracket is not identically zero");
            let id = GroupElement::<Rat>::identity();
            let f1 = random_mc(&ctx, &mut rng);
            let f2 = random_mc(&ctx, &mut rng);
            assert!(pc.bracket_g(&f1, &f2, None, &id).unwrap().is_zero(), "{label}: identity");
        }
    }

    #[test]
    fn the_twisted_bracket_certifies_both_routes_and_annihilates_characters() {
        let (sys, ctx) = setup("A2");
        let pc = PoissonContext::for_class(&sys, &ctx, &[0, 1], 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut nonzero = false;
        for _ in 0..10 {
            let g = random_point(&sys, &mut rng);
            let f1 = random_mc(&ctx, &mut rng);
            let f2 = random_mc(&ctx, &mut rng);
            let b = pc.bracket_gstar(&f1, &f2, None, &g).unwrap();
            let swapped = pc.bracket_gstar(&f2, &f1, None, &g).unwrap();
            assert_eq!(b, -swapped.clone());
            nonzero |= !b.is_zero();
            // characters are Casimir functions of the twisted bracket, and
            // they commute with each other (though not with everything) for
            // the multiplicative bracket
            for module in 0..ctx.modules.len() {
                let chi = GFunction::character(&ctx, module);
                assert!(pc.bracket_gstar(&chi, &f1, None, &g).unwrap().is_zero());
                for other in 0..ctx.modules.len() {
                    let chi2 = GFunction::character(&ctx, other);
                    assert!(pc.bracket_g(&chi, &chi2, None, &g).unwrap().is_zero());
                }
            }
        }
        assert!(nonzero, "the twisted bracket is not identically zero");
    }

    /// Cyclic sum `{f0,{f1,f2}} + {f1,{f2,f0}} + {f2,{f0,f1}}` with the
    /// inner bracket evaluated at dual-number points and the outer bracket
    /// assembled from the jet gradients of the inner one.
    #[test]
    fn both_group_brackets_satisfy_the_jacobi_identity_at_random_points() {
        for (label, word, points) in
            [("A1", vec![0usize], 3), ("A2", vec![0, 1], 3), ("B2", vec![0, 1], 2)]
        {
            let (sys, ctx) = setup(label);
            let pc = PoissonContext::for_class(&sys, &ctx, &word, 0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(41);
            for _ in 0..points {
                let g = random_point(&sys, &mut rng);
                let fs = [
                    random_mc(&ctx, &mut rng),
                    random_mc(&ctx, &mut rng),
                    random_mc(&ctx, &mut rng),
                ];
                let refs = [&fs[0], &fs[1], &fs[2]];
                assert!(
                    pc.jacobi_defect(false, refs, None, &g).unwrap().is_zero(),
                    "{label}: Jacobi identity for the multiplicative bracket"
                );
                assert!(
                    pc.jacobi_defect(true, refs, None, &g).unwrap().is_zero(),
                    "{label}: Jacobi identity for the twisted bracket"
                );
            }
        }
    }

    #[test]
    fn dual_pairs_link_torus_blocks_and_the_quotient_map_is_poisson() {
        // frozen torus-linkage exponents
        let (sys, ctx) = setup("A1");
        let pc = PoissonContext::for_class(&sys, &ctx, &[0], 0).unwrap();
        assert_eq!(pc.torus_exponent().unwrap(), vec![vec![-1]]);
        let (sys2, ctx2) = setup("A2");
        let pc2 = PoissonContext::for_class(&sys2, &ctx2, &[0, 1], 0).unwrap();
        assert_eq!(pc2.torus_exponent().unwrap(), vec![vec![-1, 1], vec![-1, 0]]);
        let pc_inv = PoissonContext::for_class(&sys2, &ctx2, &[0], 0).unwrap();
        assert_eq!(pc_inv.torus_exponent().unwrap(), vec![vec![-1, 0], vec![0, -1]]);

        // the quotient of the identity pair is the identity
        let idp = DualPair {
            plus: GroupElement::<Rat>::identity(),
            minus: GroupElement::identity(),
        };
        let q = pc.q_map(&idp).unwrap();
        for module in &ctx.modules {
            assert!(q.evaluate(module).unwrap().is_identity());
        }

        fn poisson_map_check(label: &str, word: &[usize], pairs: usize, seed: u64) {
            let (sys, ctx) = setup(label);
            let pc = PoissonContext::for_class(&sys, &ctx, word, 0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut nonzero = false;
            for _ in 0..pairs {
                let pair = pc.sample_dual_pair(&mut rng).unwrap();
                let f = random_mc(&ctx, &mut rng);
                let h = random_mc(&ctx, &mut rng);
                let lhs = pc
                    .bracket_dual(
                        &DualFunction::ThroughQ(f.clone()),
                        &DualFunction::ThroughQ(h.clone()),
                        None,
                        &pair,
                    )
                    .unwrap();
                let rhs = pc.bracket_gstar(&f, &h, None, &pc.q_map(&pair).unwrap()).unwrap();
                assert_eq!(lhs, rhs, "{label}: the quotient map fails to be Poisson");
                nonzero |= !lhs.is_zero();
                let fp = DualFunction::Plus(random_mc(&ctx, &mut rng));
                let fm = DualFunction::Minus(random_mc(&ctx, &mut rng));
                let ab = pc.bracket_dual(&fp, &fm, None, &pair).unwrap();
                let ba = pc.bracket_dual(&fm, &fp, None, &pair).unwrap();
                assert_eq!(ab, -ba.clone());
                assert!(pc.bracket_dual(&fp, &fp, None, &pair).unwrap().is_zero());
            }
            assert!(nonzero, "{label}: dual bracket identically zero on samples");
        }
        poisson_map_check("A1", &[0], 4, 51);
        poisson_map_check("A2", &[0, 1], 4, 52);
    }

    #[test]
    fn reduced_bracket_routes_agree_at_random_cell_points() {
        // Coxeter-class slices are cross-sections of the regular conjugacy
        // classes, so their reduced structure is Poisson-commutative; both
        // routes must reproduce the exact zero.
        for (label, word, points) in
            [("A1", vec![0usize], 4), ("A2", vec![0, 1], 3), ("B2", vec![0, 1], 2)]
        {
            let (sys, ctx) = setup(label);
            let sc = SliceContext::new(&sys, &ctx, &word, 0).unwrap();
            let pc = PoissonContext::new(&sys, &ctx, &sc.positive_system, &sc.s).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(61);
            for _ in 0..points {
                let fact = sc.sample_factorization(&mut rng);
                let m = fact.ns.mul(&fact.z);
                let f1 = random_mc(&ctx, &mut rng);
                let f2 = random_mc(&ctx, &mut rng);
                let direct = pc.reduced_bracket_direct(&sc, &f1, &f2, &m).unwrap();
                let projected = pc.reduced_bracket_projected(&sc, &f1, &f2, &m).unwrap();
                assert_eq!(direct, projected, "{label}: reduced-bracket routes disagree");
                assert!(direct.is_zero(), "{label}: a Coxeter slice carries the zero structure");
            }
        }

        // a reflection class in rank two has a nontrivial reductive block
        // and a genuinely nonzero reduced structure
        for (label, word, points) in [("A2", vec![0usize], 3), ("B2", vec![0], 2)] {
            let (sys, ctx) = setup(label);
            let sc = SliceContext::new(&sys, &ctx, &word, 0).unwrap();
            let pc = PoissonContext::new(&sys, &ctx, &sc.positive_system, &sc.s).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(63);
            for _ in 0..points {
                let fact = sc.sample_factorization(&mut rng);
                let m = fact.ns.mul(&fact.z);
                let f1 = random_mc(&ctx, &mut rng);
                let f2 = random_mc(&ctx, &mut rng);
                let direct = pc.reduced_bracket_direct(&sc, &f1, &f2, &m).unwrap();
                let projected = pc.reduced_bracket_projected(&sc, &f1, &f2, &m).unwrap();
                assert_eq!(direct, projected, "{label}: reduced-bracket routes disagree");
                let swapped = pc.reduced_bracket_direct(&sc, &f2, &f1, &m).unwrap();
                assert_eq!(swapped, -direct.clone(), "{label}: skew-symmetry");
            }
        }

        // deterministic nonzero witness: scan coefficient pairs of the first
        // module on the rank-two reflection class until one fails to commute
        let (sys, ctx) = setup("A2");
        let sc = SliceContext::new(&sys, &ctx, &[0], 0).unwrap();
        let pc = PoissonContext::new(&sys, &ctx, &sc.positive_system, &sc.s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let fact = sc.sample_factorization(&mut rng);
        let m = fact.ns.mul(&fact.z);
        let d0 = ctx.modules[0].dim;
        let mut witness = false;
        'scan: for r1 in 0..d0 {
            for c1 in 0..d0 {
                for r2 in 0..d0 {
                    for c2 in 0..d0 {
                        let f1 = GFunction::mc(0, r1, c1);
                        let f2 = GFunction::mc(0, r2, c2);
                        if !pc.reduced_bracket_direct(&sc, &f1, &f2, &m).unwrap().is_zero() {
                            witness = true;
                            break 'scan;
                        }
                    }
                }
            }
        }
        assert!(witness, "reduced bracket identically zero on a reflection-class slice");

        // invariant functions are central for the reduced bracket
        let (sys, ctx) = setup("A2");
        let sc = SliceContext::new(&sys, &ctx, &[0, 1], 0).unwrap();
        let pc = PoissonContext::new(&sys, &ctx, &sc.positive_system, &sc.s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let fact = sc.sample_factorization(&mut rng);
        let m = fact.ns.mul(&fact.z);
        let chi = GFunction::character(&ctx, 0);
        let f = random_mc(&ctx, &mut rng);
        assert!(pc.reduced_bracket_direct(&sc, &chi, &f, &m).unwrap().is_zero());
    }

    #[test]
    fn rescaling_the_invariant_form_rescales_every_bracket_inversely() {
        let base = RootSystem::build("A2").unwrap();
        let scaled = RootSystem::build("A2").unwrap().with_form_scale(rat(1, 3));
        let ctx_b = RepContext::new(&base).unwrap();
        let ctx_s = RepContext::new(&scaled).unwrap();
        // the algebra-side form really does triple
        assert_eq!(
            ctx_s.chevalley.form_h,
            ctx_b.chevalley.form_h.map(|c| c.clone() * rat_int(3))
        );
        for a in 0..base.num_roots() {
            assert_eq!(
                ctx_s.chevalley.form_root[a],
                ctx_b.chevalley.form_root[a].clone() * rat_int(3)
            );
        }
        let pb = PoissonContext::for_class(&base, &ctx_b, &[0, 1], 0).unwrap();
        let ps = PoissonContext::for_class(&scaled, &ctx_s, &[0, 1], 0).unwrap();
        assert_eq!(pb.positive_roots, ps.positive_roots, "adapted system is scale-independent");
        assert_eq!(pb.r.matrix, ps.r.matrix, "the r-matrix is scale-independent");
        let third = rat(1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..3 {
            let g = random_point(&base, &mut rng);
            let f1 = random_mc(&ctx_b, &mut rng);
            let f2 = random_mc(&ctx_b, &mut rng);
            assert_eq!(
                ps.bracket_g(&f1, &f2, None, &g).unwrap(),
                pb.bracket_g(&f1, &f2, None, &g).unwrap() * third.clone()
            );
            assert_eq!(
                ps.bracket_gstar(&f1, &f2, None, &g).unwrap(),
                pb.bracket_gstar(&f1, &f2, None, &g).unwrap() * third.clone()
            );
        }
        for _ in 0..2 {
            let pair = pb.sample_dual_pair(&mut rng).unwrap();
            let f = DualFunction::ThroughQ(random_mc(&ctx_b, &mut rng));
            let h = DualFunction::Plus(random_mc(&ctx_b, &mut rng));
            assert_eq!(
                ps.bracket_dual(&f, &h, None, &pair).unwrap(),
                pb.bracket_dual(&f, &h, None, &pair).unwrap() * third.clone()
            );
        }
        let sb = SliceContext::new(&base, &ctx_b, &[0, 1], 0).unwrap();
        let ss = SliceContext::new(&scaled, &ctx_s, &[0, 1], 0).unwrap();
        let pcb = PoissonContext::new(&base, &ctx_b, &sb.positive_system, &sb.s).unwrap();
        let pcs = PoissonContext::new(&scaled, &ctx_s, &ss.positive_system, &ss.s).unwrap();
        for _ in 0..2 {
            let fact = sb.sample_factorization(&mut rng);
            let m = fact.ns.mul(&fact.z);
            let f1 = random_mc(&ctx_b, &mut rng);
            let f2 = random_mc(&ctx_b, &mut rng);
            assert_eq!(
                pcs.reduced_bracket_direct(&ss, &f1, &f2, &m).unwrap(),
                pcb.reduced_bracket_direct(&sb, &f1, &f2, &m).unwrap() * third.clone()
            );
            assert_eq!(
                pcs.reduced_bracket_projected(&ss, &f1, &f2, &m).unwrap(),
                pcb.reduced_bracket_projected(&sb, &f1, &f2, &m).unwrap() * third.clone()
            );
        }
    }

    #[test]
    fn function_trees_evaluate_exactly_over_dual_numbers() {
        let (sys, ctx) = setup("A2");
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        for _ in 0..5 {
            let g = random_point(&sys, &mut rng);
            let f = (random_mc(&ctx, &mut rng) * random_mc(&ctx, &mut rng)
                - GFunction::constant(rat(5, 7)))
                / (random_mc(&ctx, &mut rng) * random_mc(&ctx, &mut rng)
                    + GFunction::constant(rat_int(9)));
            let plain = f.value::<Rat>(&ctx, None, &g);
            let lifted = g.map_scalars(|v| Jet::constant(v.clone()));
            let jet = f.value::<Jet<Rat>>(&ctx, None, &lifted);
            match (plain, jet) {
                (Ok(p), Ok(j)) => {
                    assert_eq!(j.v, p);
                    assert!(j.d.is_zero());
                }
                (Err(_), Err(_)) => {}
                other => panic!("plain and dual-number evaluation disagree: {other:?}"),
            }
        }
        let id = GroupElement::<Rat>::identity();
        let zero_den = GFunction::constant(Rat::one()) / GFunction::constant(Rat::zero());
        assert!(matches!(zero_den.value::<Rat>(&ctx, None, &id), Err(Error::DivisionByZero)));
        let needs_slice = GFunction::projected(GFunction::mc(0, 0, 0));
        assert!(needs_slice.value::<Rat>(&ctx, None, &id).is_err());
        assert!(GFunction::mc(0, 99, 0).value::<Rat>(&ctx, None, &id).is_err());
    }
}

