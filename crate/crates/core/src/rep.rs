//! Root vectors with a transpose-compatible normalization, fundamental
//! highest-weight modules with their contravariant form, and exact evaluation
//! of group words as matrices.
//!
//! Modules are built from relations alone: the basis consists of `f`-monomial
//! classes in the quotient of a highest-weight-generated module by the radical
//! of the contravariant form.  The form on monomials is computed by pushing
//! `e`-words through `f`-words and reading off the top coefficient, so the
//! construction needs no structure constants.  The dimension is checked
//! against the product formula over positive roots — an independent oracle.
//!
//! Root vectors for non-simple roots are then *defined*, per module, by a
//! fixed bracketing tree: `X_gamma = [e_i, X_{gamma-alpha_i}] / (p+1)` with
//! `i` the least simple index whose subtraction stays positive and `p` the
//! length of the descending root string; negative vectors are the adjoints of
//! positive ones under the contravariant form.  This pins the normalization
//! `omega(X_gamma) = X_{-gamma}` for the transpose anti-involution `omega`
//! fixing the torus and swapping `e_i` with `f_i`, and makes every structure
//! constant an integer of absolute value `p+1`.  The abstract constant table
//! is extracted from one faithful module per component and re-verified.

use std::collections::BTreeMap;

use num_traits::Zero as _;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rootsys::RootSystem;
use crate::scalar::{rat_int, Rat, Scalar};

// ---------------------------------------------------------------------------
// Highest-weight machinery on f-monomials.
// ---------------------------------------------------------------------------

/// Formal linear combination of `f`-monomials applied to a highest vector;
/// keys are words of simple indices, leftmost letter acting last.
type Monomials = BTreeMap<Vec<usize>, Rat>;

struct VermaOps<'a> {
    sys: &'a RootSystem,
    /// Pairings of the highest weight with the simple coroots.
    lambda: Vec<i64>,
}

impl VermaOps<'_> {
    /// Pairing of the weight of `word`'s monomial with the `j`-th coroot.
    fn weight_pairing(&self, word: &[usize], j: usize) -> i64 {
        let a = self.sys.cartan();
        self.lambda[j] - word.iter().map(|&t| a[j][t]).sum::<i64>()
    }

    /// Action of `e_j` on a single monomial, using only the relation
    /// `[e_j, f_t] = delta_{jt} h_j` and the weight action of `h_j`.
    fn e_on_word(&self, j: usize, word: &[usize]) -> Monomials {
        let mut out = Monomials::new();
        if word.is_empty() {
            return out;
        }
        let (t, rest) = (word[0], &word[1..]);
        for (w, c) in self.e_on_word(j, rest) {
            let mut prefixed = Vec::with_capacity(w.len() + 1);
            prefixed.push(t);
            prefixed.extend(w);
            *out.entry(prefixed).or_insert_with(Rat::zero_value) += c;
        }
        if t == j {
            let h = rat_int(self.weight_pairing(rest, j));
            if h != Rat::zero_value() {
                *out.entry(rest.to_vec()).or_insert_with(Rat::zero_value) += h;
            }
        }
        out
    }

    /// Contravariant pairing of two monomials: apply the reversal of the
    /// first word as `e`-letters to the second and read the top coefficient.
    fn pair(&self, w1: &[usize], w2: &[usize]) -> Rat {
        if w1.len() != w2.len() {
            return Rat::zero_value();
        }
        let mut state = Monomials::new();
        state.insert(w2.to_vec(), Rat::one_value());
        for &t in w1 {
            let mut next = Monomials::new();
            for (w, c) in &state {
                for (w2, c2) in self.e_on_word(t, w) {
                    *next.entry(w2).or_insert_with(Rat::zero_value) += c.clone() * c2;
                }
            }
            state = next;
        }
        state.get(&Vec::new()).cloned().unwrap_or_else(Rat::zero_value)
    }
}

trait RatExt {
    fn zero_value() -> Rat;
    fn one_value() -> Rat;
}
impl RatExt for Rat {
    fn zero_value() -> Rat {
        rat_int(0)
    }
    fn one_value() -> Rat {
        rat_int(1)
    }
}

/// Dimension of the irreducible module with highest weight `lambda` (given by
/// coroot pairings) via the product formula over positive roots.
pub fn weyl_dimension(sys: &RootSystem, lambda: &[i64]) -> usize {
    let rank = sys.rank();
    let mut simple_norms = Vec::with_capacity(rank);
    for j in 0..rank {
        let mut e = vec![0i64; rank];
        e[j] = 1;
        simple_norms.push(sys.form(&e, &e));
    }
    // (mu, alpha) for mu given by coroot pairings p and alpha in root coords.
    let form_with = |p: &[i64], alpha: &[i64]| -> Rat {
        let mut acc = rat_int(0);
        for j in 0..rank {
            acc += rat_int(alpha[j] * p[j]) * simple_norms[j].clone() / rat_int(2);
        }
        acc
    };
    let mut num = rat_int(1);
    let mut den = rat_int(1);
    let rho: Vec<i64> = vec![1; rank];
    let lam_rho: Vec<i64> = lambda.iter().zip(&rho).map(|(a, b)| a + b).collect();
    for idx in 0..sys.num_positive() {
        let alpha = sys.root(idx);
        num *= form_with(&lam_rho, alpha);
        den *= form_with(&rho, alpha);
    }
    let dim = num / den;
    assert!(dim.is_integer(), "the dimension formula must produce an integer");
    let d = dim.to_integer();
    use num_traits::ToPrimitive;
    d.to_usize().expect("module dimension fits in usize")
}

// ---------------------------------------------------------------------------
// Fundamental modules.
// ---------------------------------------------------------------------------

/// An irreducible highest-weight module for a fundamental weight, with exact
/// rational matrices for the generators and every root vector, and the
/// contravariant Gram matrix.
#[derive(Clone, Debug)]
pub struct HWModule {
    /// Index of the fundamental weight this module belongs to.
    pub fundamental: usize,
    pub dim: usize,
    /// Coroot pairings of each basis vector's weight.
    pub weight_pairings: Vec<Vec<i64>>,
    /// Defining `f`-monomial of each basis vector; basis is ordered by
    /// monomial length (weight height descending), then lexicographically.
    pub monomials: Vec<Vec<usize>>,
    /// Generator matrices acting on column vectors.
    pub e: Vec<Matrix<Rat>>,
    pub f: Vec<Matrix<Rat>>,
    pub h: Vec<Matrix<Rat>>,
    /// Contravariant Gram matrix; block-diagonal across weights and `1` on
    /// the highest vector.
    pub gram: Matrix<Rat>,
    gram_inv: Matrix<Rat>,
    /// Matrices of all root vectors, indexed by root index.
    pub root_vectors: Vec<Matrix<Rat>>,
}

impl HWModule {
    /// Adjoint with respect to the contravariant form: the matrix of
    /// `omega(x)` given the matrix of `x`.
    pub fn gram_adjoint(&self, m: &Matrix<Rat>) -> Matrix<Rat> {
        self.gram_inv.mul(&m.transpose()).mul(&self.gram)
    }

    /// Contravariant pairing of two coordinate vectors.
    pub fn contravariant_pair<S: Scalar>(&self, u: &[S], v: &[S]) -> S {
        let mut acc = S::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let g = &self.gram[(i, j)];
                if g.is_zero() {
                    continue;
                }
                acc = acc + u[i].clone() * v[j].clone() * S::from_rat(g);
            }
        }
        acc
    }

    /// Index of the highest-weight basis vector.
    pub fn highest(&self) -> usize {
        0
    }
}

/// Build the irreducible module with highest weight the `i`-th fundamental
/// weight (zero-based).
pub fn build_fundamental_module(sys: &RootSystem, i: usize) -> Result<HWModule> {
    let rank = sys.rank();
    if i >= rank {
        return Err(Error::invalid(format!(
            "fundamental index {i} out of range for rank {rank}"
        )));
    }
    let mut lambda = vec![0i64; rank];
    lambda[i] = 1;
    let ops = VermaOps { sys, lambda: lambda.clone() };
    let expected_dim = weyl_dimension(sys, &lambda);

    let mut pair_memo: BTreeMap<(Vec<usize>, Vec<usize>), Rat> = BTreeMap::new();
    let mut pair = |a: &[usize], b: &[usize]| -> Rat {
        let key = (a.to_vec(), b.to_vec());
        if let Some(v) = pair_memo.get(&key) {
            return v.clone();
        }
        let v = ops.pair(a, b);
        pair_memo.insert(key, v.clone());
        v
    };

    // Level-by-level basis selection: keep a monomial when it enlarges the
    // rank of the contravariant form on its weight space.
    let mut basis: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    while !frontier.is_empty() {
        let mut candidates: Vec<Vec<usize>> = Vec::new();
        for m in &frontier {
            for j in 0..rank {
                let mut w = Vec::with_capacity(m.len() + 1);
                w.push(j);
                w.extend(m.iter().copied());
                candidates.push(w);
            }
        }
        candidates.sort();
        candidates.dedup();
        // Group by weight.
        let mut by_weight: BTreeMap<Vec<i64>, Vec<Vec<usize>>> = BTreeMap::new();
        for w in candidates {
            let key: Vec<i64> = (0..rank).map(|j| ops.weight_pairing(&w, j)).collect();
            by_weight.entry(key).or_default().push(w);
        }
        let mut chosen_level: Vec<Vec<usize>> = Vec::new();
        for (_, words) in by_weight {
            let mut chosen: Vec<Vec<usize>> = Vec::new();
            for w in words {
                let mut rows = Vec::with_capacity(chosen.len() + 1);
                for a in chosen.iter().chain(std::iter::once(&w)) {
                    let mut row = Vec::with_capacity(chosen.len() + 1);
                    for b in chosen.iter().chain(std::iter::once(&w)) {
                        row.push(pair(a, b));
                    }
                    rows.push(row);
                }
                let g = Matrix::from_rows(rows);
                if g.rank() == chosen.len() + 1 {
                    chosen.push(w);
                }
            }
            chosen_level.extend(chosen);
        }
        chosen_level.sort();
        frontier = chosen_level.clone();
        basis.extend(chosen_level);
    }
    assert_eq!(
        basis.len(),
        expected_dim,
        "constructed dimension must match the product-formula oracle"
    );
    let dim = basis.len();
    let index_of: BTreeMap<Vec<usize>, usize> =
        basis.iter().enumerate().map(|(k, w)| (w.clone(), k)).collect();
    let weight_pairings: Vec<Vec<i64>> = basis
        .iter()
        .map(|w| (0..rank).map(|j| ops.weight_pairing(w, j)).collect())
        .collect();

    // Gram matrix (block-diagonal by weight since pairings across weights
    // vanish; computed entrywise and later re-checked).
    let mut gram = Matrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            if weight_pairings[a] != weight_pairings[b] {
                continue;
            }
            let v = pair(&basis[a], &basis[b]);
            gram[(a, b)] = v.clone();
            gram[(b, a)] = v;
        }
    }
    let gram_inv = gram.inverse().expect("contravariant form is nondegenerate");

    // f-matrices: expand f_j . basis monomial in the chosen basis of its
    // weight space by solving against the Gram block.
    let weight_class = |p: &Vec<i64>| -> Vec<usize> {
        (0..dim).filter(|&t| &weight_pairings[t] == p).collect()
    };
    let mut f_mats = Vec::with_capacity(rank);
    for j in 0..rank {
        let mut m = Matrix::zeros(dim, dim);
        for (b, word) in basis.iter().enumerate() {
            let mut w = Vec::with_capacity(word.len() + 1);
            w.push(j);
            w.extend(word.iter().copied());
            let target_weight: Vec<i64> =
                (0..rank).map(|t| ops.weight_pairing(&w, t)).collect();
            if let Some(&k) = index_of.get(&w) {
                m[(k, b)] = rat_int(1);
                continue;
            }
            let block = weight_class(&target_weight);
            if block.is_empty() {
                continue; // the image vanishes in the quotient
            }
            let rows: Vec<Vec<Rat>> = block
                .iter()
                .map(|&s| block.iter().map(|&t| gram[(s, t)].clone()).collect())
                .collect();
            let rhs: Vec<Rat> = block.iter().map(|&s| pair(&basis[s], &w)).collect();
            let coeffs = Matrix::from_rows(rows)
                .solve(&rhs)
                .expect("Gram blocks of the quotient are invertible");
            for (&s, c) in block.iter().zip(coeffs) {
                m[(s, b)] = c;
            }
        }
        f_mats.push(m);
    }
    // h diagonal; e as the contravariant adjoint of f.
    let mut h_mats = Vec::with_capacity(rank);
    for j in 0..rank {
        let mut m = Matrix::zeros(dim, dim);
        for b in 0..dim {
            m[(b, b)] = rat_int(weight_pairings[b][j]);
        }
        h_mats.push(m);
    }
    let adjoint =
        |m: &Matrix<Rat>| -> Matrix<Rat> { gram_inv.mul(&m.transpose()).mul(&gram) };
    let e_mats: Vec<Matrix<Rat>> = f_mats.iter().map(&adjoint).collect();

    // Defining relations, re-derived rather than assumed.
    for a in 0..rank {
        for b in 0..rank {
            let com = e_mats[a].mul(&f_mats[b]).sub(&f_mats[b].mul(&e_mats[a]));
            let expect = if a == b { h_mats[a].clone() } else { Matrix::zeros(dim, dim) };
            assert_eq!(com, expect, "[e_a, f_b] must equal delta h_a");
        }
    }

    let mut module = HWModule {
        fundamental: i,
        dim,
        weight_pairings,
        monomials: basis,
        e: e_mats,
        f: f_mats,
        h: h_mats,
        gram,
        gram_inv,
        root_vectors: Vec::new(),
    };
    module.root_vectors = root_vector_matrices(sys, &module);
    Ok(module)
}

/// Matrices for all root vectors in a module: simple ones are the generators,
/// higher ones come from the fixed bracketing tree, negatives are adjoints.
fn root_vector_matrices(sys: &RootSystem, module: &HWModule) -> Vec<Matrix<Rat>> {
    let rank = sys.rank();
    let dim = module.dim;
    let mut vecs: Vec<Option<Matrix<Rat>>> = vec![None; sys.num_roots()];
    let mut simple_pos = Vec::new();
    for j in 0..rank {
        let mut e = vec![0i64; rank];
        e[j] = 1;
        simple_pos.push(sys.root_index(&e).expect("simple roots exist"));
    }
    for j in 0..rank {
        vecs[simple_pos[j]] = Some(module.e[j].clone());
        vecs[sys.neg_index(simple_pos[j])] = Some(module.f[j].clone());
    }
    // positive roots by height
    let mut by_height: Vec<usize> = (0..sys.num_positive()).collect();
    by_height.sort_by_key(|&r| sys.height(r).unsigned_abs());
    for &gamma in &by_height {
        if vecs[gamma].is_some() {
            continue;
        }
        let gc = sys.root(gamma).to_vec();
        let (j, beta) = (0..rank)
            .find_map(|j| {
                let mut d = gc.clone();
                d[j] -= 1;
                sys.root_index(&d).filter(|&b| sys.is_positive(b)).map(|b| (j, b))
            })
            .expect("every non-simple positive root has a positive simple descent");
        // Descending string length through the chosen simple root.
        let mut p = 0i64;
        let mut probe = sys.root(beta).to_vec();
        loop {
            probe[j] -= 1;
            if sys.root_index(&probe).is_none() {
                break;
            }
            p += 1;
        }
        let e_j = &module.e[j];
        let m_beta = vecs[beta].as_ref().expect("tree built in height order").clone();
        let bracket = e_j.mul(&m_beta).sub(&m_beta.mul(e_j));
        let scaled = bracket.map(|x| x / rat_int(p + 1));
        vecs[sys.neg_index(gamma)] = Some(module.gram_adjoint(&scaled));
        vecs[gamma] = Some(scaled);
    }
    let out: Vec<Matrix<Rat>> =
        vecs.into_iter().map(|m| m.expect("all root vectors constructed")).collect();
    // Certify the normalization: each opposite pair brackets to its coroot.
    for r in 0..sys.num_positive() {
        let nr = sys.neg_index(r);
        let com = out[r].mul(&out[nr]).sub(&out[nr].mul(&out[r]));
        let coroot = sys.coroot_coords(r);
        let mut expect = Matrix::zeros(dim, dim);
        for (j, &c) in coroot.iter().enumerate() {
            expect = expect.add(&module.h[j].map(|x| x.clone() * rat_int(c)));
        }
        assert_eq!(com, expect, "bracketing a root vector with its adjoint gives the coroot");
    }
    out
}

// ---------------------------------------------------------------------------
// Group elements.
// ---------------------------------------------------------------------------

/// One factor of a group word.
#[derive(Clone, Debug, PartialEq)]
pub enum Factor<S> {
    /// `exp(t X_alpha)` for the root with the given index.
    OneParam { root: usize, t: S },
    /// Torus element acting on a weight-`mu` vector by the product of
    /// `entries[i]` to the power of the `i`-th coroot pairing of `mu`.
    Torus { entries: Vec<S> },
    /// The fixed representative `exp(f_i) exp(-e_i) exp(f_i)` of a simple
    /// reflection.
    WeylRep { simple: usize },
}

/// A word of group factors; evaluation multiplies the factor matrices in word
/// order, so concatenation of words corresponds to products of matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement<S> {
    pub factors: Vec<Factor<S>>,
}

impl<S: Scalar> GroupElement<S> {
    pub fn identity() -> Self {
        GroupElement { factors: Vec::new() }
    }

    pub fn one_param(root: usize, t: S) -> Self {
        GroupElement { factors: vec![Factor::OneParam { root, t }] }
    }

    pub fn torus(entries: Vec<S>) -> Self {
        GroupElement { factors: vec![Factor::Torus { entries }] }
    }

    pub fn weyl_word(word: &[usize]) -> Self {
        GroupElement {
            factors: word.iter().map(|&i| Factor::WeylRep { simple: i }).collect(),
        }
    }

    /// Representative of the reflection in an arbitrary root, built from
    /// one-parameter factors in the pattern of the simple representatives.
    pub fn reflection_rep(sys: &RootSystem, root: usize) -> Self {
        let neg = sys.neg_index(root);
        GroupElement {
            factors: vec![
                Factor::OneParam { root: neg, t: S::one() },
                Factor::OneParam { root, t: -S::one() },
                Factor::OneParam { root: neg, t: S::one() },
            ],
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        GroupElement { factors }
    }

    /// Word inverse: reversed factors, each inverted.
    pub fn inverse(&self, sys: &RootSystem) -> Result<Self> {
        let mut factors = Vec::with_capacity(self.factors.len() * 3);
        for fct in self.factors.iter().rev() {
            match fct {
                Factor::OneParam { root, t } => {
                    factors.push(Factor::OneParam { root: *root, t: -t.clone() })
                }
                Factor::Torus { entries } => {
                    let mut inv = Vec::with_capacity(entries.len());
                    for (k, c) in entries.iter().enumerate() {
                        inv.push(c.try_inv().ok_or(Error::ZeroTorusEntry { index: k })?);
                    }
                    factors.push(Factor::Torus { entries: inv });
                }
                Factor::WeylRep { simple } => {
                    // s_i^{-1} = exp(e_i) exp(-f_i) exp(e_i)
                    let mut e = vec![0i64; sys.rank()];
                    e[*simple] = 1;
                    let pos = sys.root_index(&e).expect("simple roots exist");
                    let neg = sys.neg_index(pos);
                    factors.push(Factor::OneParam { root: pos, t: S::one() });
                    factors.push(Factor::OneParam { root: neg, t: -S::one() });
                    factors.push(Factor::OneParam { root: pos, t: S::one() });
                }
            }
        }
        Ok(GroupElement { factors })
    }

    /// The transpose anti-involution on words: reversed order, each
    /// one-parameter factor moved to the opposite root, torus factors fixed,
    /// and Weyl representatives replaced by their inverses.
    pub fn omega(&self, sys: &RootSystem) -> Self {
        let mut factors = Vec::with_capacity(self.factors.len() * 3);
        for fct in self.factors.iter().rev() {
            match fct {
                Factor::OneParam { root, t } => factors.push(Factor::OneParam {
                    root: sys.neg_index(*root),
                    t: t.clone(),
                }),
                Factor::Torus { entries } => {
                    factors.push(Factor::Torus { entries: entries.clone() })
                }
                Factor::WeylRep { simple } => {
                    let mut e = vec![0i64; sys.rank()];
                    e[*simple] = 1;
                    let pos = sys.root_index(&e).expect("simple roots exist");
                    let neg = sys.neg_index(pos);
                    factors.push(Factor::OneParam { root: pos, t: S::one() });
                    factors.push(Factor::OneParam { root: neg, t: -S::one() });
                    factors.push(Factor::OneParam { root: pos, t: S::one() });
                }
            }
        }
        GroupElement { factors }
    }

    /// Map the scalars of every factor (e.g. to lift a rational word into
    /// jet scalars).
    pub fn map_scalars<T: Scalar>(&self, mut f: impl FnMut(&S) -> T) -> GroupElement<T> {
        GroupElement {
            factors: self
                .factors
                .iter()
                .map(|fct| match fct {
                    Factor::OneParam { root, t } => {
                        Factor::OneParam { root: *root, t: f(t) }
                    }
                    Factor::Torus { entries } => {
                        Factor::Torus { entries: entries.iter().map(&mut f).collect() }
                    }
                    Factor::WeylRep { simple } => Factor::WeylRep { simple: *simple },
                })
                .collect(),
        }
    }

    /// Evaluate the word in a module as an exact matrix.
    pub fn evaluate(&self, module: &HWModule) -> Result<Matrix<S>> {
        let dim = module.dim;
        let mut acc = Matrix::<S>::identity(dim);
        for fct in &self.factors {
            let m = match fct {
                Factor::OneParam { root, t } => {
                    exp_nilpotent(&module.root_vectors[*root].map(S::from_rat), t)
                }
                Factor::Torus { entries } => {
                    for (k, c) in entries.iter().enumerate() {
                        if c.is_zero() {
                            return Err(Error::ZeroTorusEntry { index: k });
                        }
                    }
                    let mut m = Matrix::zeros(dim, dim);
                    for b in 0..dim {
                        let mut val = S::one();
                        for (k, c) in entries.iter().enumerate() {
                            let pow = module.weight_pairings[b][k];
                            val = val
                                * c.try_pow(pow)
                                    .ok_or(Error::ZeroTorusEntry { index: k })?;
                        }
                        m[(b, b)] = val;
                    }
                    m
                }
                Factor::WeylRep { simple } => {
                    let e = module.e[*simple].map(S::from_rat);
                    let f = module.f[*simple].map(S::from_rat);
                    exp_nilpotent(&f, &S::one())
                        .mul(&exp_nilpotent(&e, &(-S::one())))
                        .mul(&exp_nilpotent(&f, &S::one()))
                }
            };
            acc = acc.mul(&m);
        }
        Ok(acc)
    }
}

/// `exp(t M)` for a nilpotent matrix, truncated at the nilpotency degree.
fn exp_nilpotent<S: Scalar>(m: &Matrix<S>, t: &S) -> Matrix<S> {
    let n = m.nrows();
    let mut acc = Matrix::<S>::identity(n);
    let mut term = Matrix::<S>::identity(n);
    let mut k = 1i64;
    loop {
        term = term.mul(m).map(|x| x.clone() * t.clone() / S::from_int(k));
        if term.is_zero_matrix() {
            break;
        }
        assert!(k <= n as i64, "one-parameter factors require nilpotent root action");
        acc = acc.add(&term);
        k += 1;
    }
    acc
}

// ---------------------------------------------------------------------------
// The abstract basis with its constant table and invariant form.
// ---------------------------------------------------------------------------

/// Structure constants and invariant form of the algebra in the normalized
/// root-vector basis.  Coordinates of an algebra element: one entry per root
/// (in root-index order) followed by the coroot entries `h_1..h_rank`.
#[derive(Clone, Debug)]
pub struct ChevalleyBasis {
    pub rank: usize,
    pub num_roots: usize,
    /// `[X_a, X_b] = consts[(a,b)] X_{a+b}` for root pairs with a root sum.
    pub consts: BTreeMap<(usize, usize), i64>,
    /// Coordinates of `[X_a, X_{-a}]` over `h_1..h_rank`, per root index.
    pub coroots: Vec<Vec<i64>>,
    /// Coroot pairings of every root.
    pub pairings: Vec<Vec<i64>>,
    /// Invariant form: value on `(X_a, X_{-a})`, per root index.
    pub form_root: Vec<Rat>,
    /// Invariant form on the coroot block.
    pub form_h: Matrix<Rat>,
    neg: Vec<usize>,
    sum: BTreeMap<(usize, usize), usize>,
}

impl ChevalleyBasis {
    pub fn dim(&self) -> usize {
        self.num_roots + self.rank
    }

    /// Coordinate vector of a single root vector.
    pub fn root_axis<S: Scalar>(&self, r: usize) -> Vec<S> {
        let mut v = vec![S::zero(); self.dim()];
        v[r] = S::one();
        v
    }

    /// Coordinate vector of a coroot generator.
    pub fn h_axis<S: Scalar>(&self, j: usize) -> Vec<S> {
        let mut v = vec![S::zero(); self.dim()];
        v[self.num_roots + j] = S::one();
        v
    }

    pub fn structure_constant(&self, a: usize, b: usize) -> Option<i64> {
        self.consts.get(&(a, b)).copied()
    }

    /// Bracket of two coordinate vectors.
    pub fn bracket<S: Scalar>(&self, x: &[S], y: &[S]) -> Vec<S> {
        let nr = self.num_roots;
        let mut out = vec![S::zero(); self.dim()];
        for a in 0..nr {
            if x[a].is_zero() {
                continue;
            }
            for b in 0..nr {
                if y[b].is_zero() {
                    continue;
                }
                let prod = x[a].clone() * y[b].clone();
                if b == self.neg[a] {
                    for (j, &c) in self.coroots[a].iter().enumerate() {
                        out[nr + j] =
                            out[nr + j].clone() + prod.clone() * S::from_int(c);
                    }
                } else if let Some(&s) = self.sum.get(&(a, b)) {
                    let n = self.consts[&(a, b)];
                    out[s] = out[s].clone() + prod * S::from_int(n);
                }
            }
        }
        // h against root vectors
        for j in 0..self.rank {
            let (xh, yh) = (x[nr + j].clone(), y[nr + j].clone());
            for b in 0..nr {
                if !y[b].is_zero() {
                    out[b] = out[b].clone()
                        + xh.clone() * y[b].clone() * S::from_int(self.pairings[b][j]);
                }
                if !x[b].is_zero() {
                    out[b] = out[b].clone()
                        - yh.clone() * x[b].clone() * S::from_int(self.pairings[b][j]);
                }
            }
        }
        out
    }

    /// Invariant bilinear form on coordinate vectors.
    pub fn form<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        let nr = self.num_roots;
        let mut acc = S::zero();
        for a in 0..nr {
            if !x[a].is_zero() {
                let b = self.neg[a];
                if !y[b].is_zero() {
                    acc = acc
                        + x[a].clone() * y[b].clone() * S::from_rat(&self.form_root[a]);
                }
            }
        }
        for i in 0..self.rank {
            for j in 0..self.rank {
                if !x[nr + i].is_zero() && !y[nr + j].is_zero() {
                    acc = acc
                        + x[nr + i].clone()
                            * y[nr + j].clone()
                            * S::from_rat(&self.form_h[(i, j)]);
                }
            }
        }
        acc
    }
}

/// Extract the structure constants and form data, using one faithful module
/// per component and certifying exact proportionality.
pub fn chevalley_basis(sys: &RootSystem, modules: &[HWModule]) -> ChevalleyBasis {
    let rank = sys.rank();
    let nr = sys.num_roots();
    // Designated module per simple index: the component's first fundamental.
    let mut module_of_simple = vec![0usize; rank];
    for comp in sys.components() {
        for &j in comp {
            module_of_simple[j] = comp[0];
        }
    }
    let module_of_root = |r: usize| -> usize {
        let coords = sys.root(r);
        let j = coords.iter().position(|&c| c != 0).expect("roots are nonzero");
        module_of_simple[j]
    };

    let mut consts = BTreeMap::new();
    let mut sum = BTreeMap::new();
    for a in 0..nr {
        for b in 0..nr {
            if b == sys.neg_index(a) || a == b {
                continue;
            }
            let v: Vec<i64> =
                sys.root(a).iter().zip(sys.root(b)).map(|(x, y)| x + y).collect();
            let Some(s) = sys.root_index(&v) else { continue };
            let m = &modules[module_of_root(a)];
            assert_eq!(module_of_root(a), module_of_root(b));
            let (ma, mb, ms) =
                (&m.root_vectors[a], &m.root_vectors[b], &m.root_vectors[s]);
            let com = ma.mul(mb).sub(&mb.mul(ma));
            // Proportionality factor read off a nonzero entry, then verified.
            let mut n: Option<Rat> = None;
            'find: for i in 0..m.dim {
                for j in 0..m.dim {
                    let denom = &ms[(i, j)];
                    if !denom.is_zero() {
                        n = Some(com[(i, j)].clone() / denom.clone());
                        break 'find;
                    }
                }
            }
            let n = n.expect("root vectors are nonzero in a faithful module");
            assert_eq!(com, ms.map(|x| x.clone() * n.clone()), "bracket proportionality");
            assert!(n.is_integer(), "structure constants are integers");
            use num_traits::ToPrimitive;
            let n = n.to_integer().to_i64().expect("structure constant fits in i64");
            assert!(n != 0, "root-sum brackets never vanish");
            consts.insert((a, b), n);
            sum.insert((a, b), s);
        }
    }

    let coroots: Vec<Vec<i64>> = (0..nr).map(|r| sys.coroot_coords(r)).collect();
    let pairings: Vec<Vec<i64>> = (0..nr)
        .map(|r| (0..rank).map(|j| sys.pairing_with_coroot(sys.root(r), j)).collect())
        .collect();
    let form_root: Vec<Rat> = (0..nr)
        .map(|r| rat_int(2) / sys.form(sys.root(r), sys.root(r)))
        .collect();
    let mut form_h = Matrix::zeros(rank, rank);
    for i in 0..rank {
        for j in 0..rank {
            let mut ei = vec![0i64; rank];
            ei[i] = 1;
            let mut ej = vec![0i64; rank];
            ej[j] = 1;
            let num = rat_int(4) * sys.form(&ei, &ej);
            let den = sys.form(&ei, &ei) * sys.form(&ej, &ej);
            form_h[(i, j)] = num / den;
        }
    }
    let neg: Vec<usize> = (0..nr).map(|r| sys.neg_index(r)).collect();
    ChevalleyBasis {
        rank,
        num_roots: nr,
        consts,
        coroots,
        pairings,
        form_root,
        form_h,
        neg,
        sum,
    }
}

// ---------------------------------------------------------------------------
// Bundled context with a faithful block representation.
// ---------------------------------------------------------------------------

/// Everything downstream stages need: all fundamental modules, the constant
/// table, and a faithful block representation (one designated module per
/// component) with a precomputed solver that expands matrices back into
/// algebra coordinates.
pub struct RepContext {
    pub modules: Vec<HWModule>,
    pub chevalley: ChevalleyBasis,
    /// Indices (into `modules`) of the designated faithful blocks.
    pub faithful: Vec<usize>,
    pivots: Vec<(usize, usize, usize)>,
    pivot_inv: Matrix<Rat>,
}

impl RepContext {
    pub fn new(sys: &RootSystem) -> Result<RepContext> {
        let mut modules = Vec::with_capacity(sys.rank());
        for i in 0..sys.rank() {
            modules.push(build_fundamental_module(sys, i)?);
        }
        let chevalley = chevalley_basis(sys, &modules);
        let faithful: Vec<usize> = sys.components().iter().map(|c| c[0]).collect();
        // Algebra basis elements as stacked matrices over the faithful blocks.
        let dim_g = chevalley.dim();
        let axis_mats = |k: usize| -> Vec<Matrix<Rat>> {
            faithful
                .iter()
                .map(|&mi| {
                    let m = &modules[mi];
                    if k < chevalley.num_roots {
                        m.root_vectors[k].clone()
                    } else {
                        m.h[k - chevalley.num_roots].clone()
                    }
                })
                .collect()
        };
        // Pivot positions: greedily pick entries that keep the stack of
        // flattened basis matrices at full rank.
        let mut pivots: Vec<(usize, usize, usize)> = Vec::new();
        let mut rows: Vec<Vec<Rat>> = Vec::new();
        let all_positions: Vec<(usize, usize, usize)> = faithful
            .iter()
            .enumerate()
            .flat_map(|(slot, &mi)| {
                let d = modules[mi].dim;
                (0..d).flat_map(move |i| (0..d).map(move |j| (slot, i, j)))
            })
            .collect();
        let basis_stacks: Vec<Vec<Matrix<Rat>>> = (0..dim_g).map(axis_mats).collect();
        for &(slot, i, j) in &all_positions {
            if pivots.len() == dim_g {
                break;
            }
            let col: Vec<Rat> =
                (0..dim_g).map(|k| basis_stacks[k][slot][(i, j)].clone()).collect();
            let mut trial = rows.clone();
            trial.push(col);
            let m = Matrix::from_rows(trial.clone());
            if m.rank() == trial.len() {
                rows = trial;
                pivots.push((slot, i, j));
            }
        }
        assert_eq!(pivots.len(), dim_g, "faithful blocks must separate the algebra");
        let a = Matrix::from_rows(
            (0..dim_g)
                .map(|k| {
                    pivots
                        .iter()
                        .map(|&(slot, i, j)| basis_stacks[k][slot][(i, j)].clone())
                        .collect()
                })
                .collect(),
        )
        .transpose();
        let pivot_inv = a.inverse().expect("pivot matrix is invertible");
        Ok(RepContext { modules, chevalley, faithful, pivots, pivot_inv })
    }

    /// Matrices of an algebra coordinate vector over the faithful blocks.
    pub fn algebra_matrices<S: Scalar>(&self, x: &[S]) -> Vec<Matrix<S>> {
        self.faithful
            .iter()
            .map(|&mi| {
                let m = &self.modules[mi];
                let mut acc = Matrix::<S>::zeros(m.dim, m.dim);
                for (k, c) in x.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let basis = if k < self.chevalley.num_roots {
                        &m.root_vectors[k]
                    } else {
                        &m.h[k - self.chevalley.num_roots]
                    };
                    acc = acc.add(&basis.map(|r| S::from_rat(r) * c.clone()));
                }
                acc
            })
            .collect()
    }

    /// Expand matrices over the faithful blocks into algebra coordinates;
    /// errors if the matrices do not lie in the image of the algebra.
    pub fn expand<S: Scalar>(&self, mats: &[Matrix<S>]) -> Result<Vec<S>> {
        let vals: Vec<S> = self
            .pivots
            .iter()
            .map(|&(slot, i, j)| mats[slot][(i, j)].clone())
            .collect();
        let coords = self.pivot_inv.map(S::from_rat).mul_vec(&vals);
        // Certify: the reconstruction must match every entry exactly.
        let rebuilt = self.algebra_matrices(&coords);
        for (a, b) in rebuilt.iter().zip(mats) {
            if a != b {
                return Err(Error::invalid(
                    "matrix does not lie in the algebra's image".to_string(),
                ));
            }
        }
        Ok(coords)
    }

    /// Conjugation action of a group word on algebra coordinates.
    pub fn adjoint<S: Scalar>(&self, g: &GroupElement<S>, x: &[S]) -> Result<Vec<S>> {
        let xm = self.algebra_matrices(x);
        let mut out = Vec::with_capacity(self.faithful.len());
        for (slot, &mi) in self.faithful.iter().enumerate() {
            let gm = g.evaluate(&self.modules[mi])?;
            let gi = gm
                .inverse()
                .ok_or_else(|| Error::invalid("group word is singular".to_string()))?;
            out.push(gm.mul(&xm[slot]).mul(&gi));
        }
        self.expand(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, ExactScalar};

    fn sysb(label: &str) -> RootSystem {
        RootSystem::build(label).unwrap()
    }

    #[test]
    fn the_rank_one_module_reproduces_the_classical_two_by_two_matrices() {
        let sys = sysb("A1");
        let m = build_fundamental_module(&sys, 0).unwrap();
        assert_eq!(m.dim, 2);
        let x = GroupElement::one_param(0, ExactScalar::int(7));
        let mat = x.evaluate(&m).unwrap();
        assert_eq!(mat[(0, 1)], ExactScalar::int(7));
        assert_eq!(mat[(0, 0)], ExactScalar::int(1));
        assert_eq!(mat[(1, 0)], ExactScalar::int(0));
        let s = GroupElement::<ExactScalar>::weyl_word(&[0]);
        let sm = s.evaluate(&m).unwrap();
        assert_eq!(sm[(0, 0)], ExactScalar::int(0));
        assert_eq!(sm[(0, 1)], ExactScalar::int(-1));
        assert_eq!(sm[(1, 0)], ExactScalar::int(1));
        assert_eq!(sm[(1, 1)], ExactScalar::int(0));
        // (f v, f v) = 1 for the fundamental weight.
        assert_eq!(m.gram[(1, 1)], rat_int(1));
    }

    #[test]
    fn dimensions_match_the_classical_tables() {
        let expect: &[(&str, &[usize])] = &[
            ("A1", &[2]),
            ("A1xA1", &[2, 2]),
            ("A2", &[3, 3]),
            ("B2", &[5, 4]),
            ("G2", &[14, 7]),
            ("A3", &[4, 6, 4]),
            ("B3", &[7, 21, 8]),
            ("C3", &[6, 14, 14]),
            ("A4", &[5, 10, 10, 5]),
            ("D4", &[8, 28, 8, 8]),
        ];
        for (label, dims) in expect {
            let sys = sysb(label);
            for (i, &d) in dims.iter().enumerate() {
                let m = build_fundamental_module(&sys, i).unwrap();
                assert_eq!(m.dim, d, "{label} fundamental {i}");
            }
        }
    }

    #[test]
    fn gram_blocks_are_weight_orthogonal_and_start_at_one() {
        for label in ["A2", "B2", "G2"] {
            let sys = sysb(label);
            for i in 0..sys.rank() {
                let m = build_fundamental_module(&sys, i).unwrap();
                assert_eq!(m.gram[(0, 0)], rat_int(1));
                for a in 0..m.dim {
                    for b in 0..m.dim {
                        assert_eq!(m.gram[(a, b)], m.gram[(b, a)]);
                        if m.weight_pairings[a] != m.weight_pairings[b] {
                            assert_eq!(m.gram[(a, b)], rat_int(0), "{label}");
                        }
                    }
                }
                assert!(m.gram.inverse().is_some());
            }
        }
    }

    #[test]
    fn contravariance_swaps_group_words_across_the_form() {
        let sys = sysb("B2");
        let m = build_fundamental_module(&sys, 1).unwrap();
        let g: GroupElement<ExactScalar> = GroupElement {
            factors: vec![
                Factor::OneParam { root: 0, t: ExactScalar::from_rat(&rat(2, 3)) },
                Factor::WeylRep { simple: 1 },
                Factor::OneParam {
                    root: sys.neg_index(1),
                    t: ExactScalar::int(5),
                },
                Factor::Torus {
                    entries: vec![ExactScalar::int(2), ExactScalar::from_rat(&rat(1, 2))],
                },
            ],
        };
        let gm = g.evaluate(&m).unwrap();
        let om = g.omega(&sys).evaluate(&m).unwrap();
        // (g u, w) = (u, omega(g) w) as matrices: g^T G = G omega(g).
        let lhs = gm.transpose().mul(&m.gram.map(ExactScalar::from_rat));
        let rhs = m.gram.map(ExactScalar::from_rat).mul(&om);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn weyl_representatives_satisfy_the_braid_relations() {
        for label in ["A2", "B2", "G2"] {
            let sys = sysb(label);
            let a = sys.cartan();
            let m_order = match (a[0][1] * a[1][0]).abs() {
                0 => 2,
                1 => 3,
                2 => 4,
                3 => 6,
                _ => unreachable!(),
            };
            let mut w1 = Vec::new();
            let mut w2 = Vec::new();
            for k in 0..m_order {
                w1.push(k % 2);
                w2.push(1 - (k % 2));
            }
            for i in 0..sys.rank() {
                let module = build_fundamental_module(&sys, i).unwrap();
                let m1 =
                    GroupElement::<ExactScalar>::weyl_word(&w1).evaluate(&module).unwrap();
                let m2 =
                    GroupElement::<ExactScalar>::weyl_word(&w2).evaluate(&module).unwrap();
                assert_eq!(m1, m2, "{label} braid relation in fundamental {i}");
            }
        }
    }

    #[test]
    fn omega_sends_weyl_representatives_to_their_inverses() {
        let sys = sysb("A2");
        let m = build_fundamental_module(&sys, 0).unwrap();
        let s = GroupElement::<ExactScalar>::weyl_word(&[0]);
        let sm = s.evaluate(&m).unwrap();
        let om = s.omega(&sys).evaluate(&m).unwrap();
        assert!(sm.mul(&om).is_identity());
    }

    #[test]
    fn evaluation_is_multiplicative_on_concatenated_words() {
        let sys = sysb("A2");
        let m = build_fundamental_module(&sys, 1).unwrap();
        let u: GroupElement<ExactScalar> = GroupElement {
            factors: vec![
                Factor::OneParam { root: 2, t: ExactScalar::int(3) },
                Factor::WeylRep { simple: 0 },
            ],
        };
        let v: GroupElement<ExactScalar> = GroupElement {
            factors: vec![
                Factor::Torus { entries: vec![ExactScalar::int(5), ExactScalar::int(1)] },
                Factor::OneParam { root: sys.neg_index(0), t: ExactScalar::int(-2) },
            ],
        };
        let prod = u.mul(&v).evaluate(&m).unwrap();
        let split = u.evaluate(&m).unwrap().mul(&v.evaluate(&m).unwrap());
        assert_eq!(prod, split);
        let inv = u.inverse(&sys).unwrap().evaluate(&m).unwrap();
        assert!(u.evaluate(&m).unwrap().mul(&inv).is_identity());
    }

    #[test]
    fn zero_torus_entries_are_rejected() {
        let sys = sysb("A1");
        let m = build_fundamental_module(&sys, 0).unwrap();
        let g = GroupElement::torus(vec![ExactScalar::int(0)]);
        match g.evaluate(&m) {
            Err(Error::ZeroTorusEntry { index: 0 }) => {}
            other => panic!("expected ZeroTorusEntry, got {other:?}"),
        }
    }

    #[test]
    fn structure_constants_are_integers_bounded_by_string_lengths() {
        for label in ["A2", "B2", "G2", "A3"] {
            let sys = sysb(label);
            let ctx = RepContext::new(&sys).unwrap();
            for (&(a, b), &n) in &ctx.chevalley.consts {
                // p is the length of the descending string from b through a.
                let mut p = 0i64;
                let mut probe: Vec<i64> =
                    sys.root(b).iter().zip(sys.root(a)).map(|(x, y)| x - y).collect();
                while sys.root_index(&probe).is_some() {
                    p += 1;
                    for (t, y) in probe.iter_mut().zip(sys.root(a)) {
                        *t -= y;
                    }
                }
                assert_eq!(n.abs(), p + 1, "{label}: |N| is one more than the string drop");
                if label == "A2" {
                    assert_eq!(n.abs(), 1);
                }
                if label == "G2" {
                    assert!((1..=3).contains(&n.abs()));
                }
            }
        }
    }

    #[test]
    fn the_abstract_bracket_satisfies_jacobi_and_invariance() {
        for label in ["A2", "B2", "G2"] {
            let sys = sysb(label);
            let ctx = RepContext::new(&sys).unwrap();
            let ch = &ctx.chevalley;
            let dim = ch.dim();
            let axes: Vec<Vec<ExactScalar>> = (0..dim)
                .map(|k| {
                    let mut v = vec![ExactScalar::int(0); dim];
                    v[k] = ExactScalar::int(1);
                    v
                })
                .collect();
            for x in 0..dim {
                for y in 0..dim {
                    for z in 0..dim {
                        let a = ch.bracket(&ch.bracket(&axes[x], &axes[y]), &axes[z]);
                        let b = ch.bracket(&axes[y], &ch.bracket(&axes[x], &axes[z]));
                        let c = ch.bracket(&axes[x], &ch.bracket(&axes[y], &axes[z]));
                        for t in 0..dim {
                            assert_eq!(
                                c[t].clone(),
                                a[t].clone() + b[t].clone(),
                                "{label} jacobi"
                            );
                        }
                    }
                    // invariance of the form: ([x,y], z) = (x, [y,z])
                    for z in 0..dim {
                        let lhs = ch.form(&ch.bracket(&axes[x], &axes[y]), &axes[z]);
                        let rhs = ch.form(&axes[x], &ch.bracket(&axes[y], &axes[z]));
                        assert_eq!(lhs, rhs, "{label} invariance");
                    }
                }
            }
        }
    }

    #[test]
    fn adjoint_action_matches_the_abstract_bracket_to_first_order() {
        // Conjugating by exp(eps X) moves Y to Y + eps [X, Y].
        let sys = sysb("A2");
        let ctx = RepContext::new(&sys).unwrap();
        let ch = &ctx.chevalley;
        use crate::scalar::Jet;
        type J = Jet<ExactScalar>;
        let a1 = sys.root_index(&[1, 0]).unwrap();
        let hi = sys.root_index(&[1, 1]).unwrap();
        let x_axis: Vec<J> = ch.root_axis(a1);
        let y_axis: Vec<J> = ch.root_axis(sys.neg_index(hi));
        let g: GroupElement<J> = GroupElement::one_param(
            a1,
            Jet::with_derivative(ExactScalar::int(0), ExactScalar::int(1)),
        );
        let moved = ctx.adjoint(&g, &y_axis).unwrap();
        let expect = ch.bracket(&x_axis, &y_axis);
        assert!(expect.iter().any(|c| !c.is_zero()), "the chosen bracket is nonzero");
        for t in 0..ch.dim() {
            assert_eq!(moved[t].v, y_axis[t].v, "value part is unmoved");
            assert_eq!(moved[t].d, expect[t].v, "derivative part is the bracket");
        }
    }

    #[test]
    fn expansion_rejects_matrices_outside_the_algebra() {
        let sys = sysb("A1");
        let ctx = RepContext::new(&sys).unwrap();
        let bad = vec![Matrix::<ExactScalar>::identity(2)];
        assert!(ctx.expand(&bad).is_err());
    }
}
