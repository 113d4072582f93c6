//! Root systems of finite type, the invariant bilinear form, and Weyl group
//! elements with exact integer matrices.
//!
//! Roots are stored as integer coordinate vectors over the simple roots. The
//! supported Cartan types are `A1..A4, B2, B3, C3, D4, G2` and arbitrary
//! products of these written `"A2xA1"`; a root system can also be built from
//! any valid finite-type Cartan matrix (used internally to re-coordinatize a
//! positive system adapted to a Weyl element). The bilinear form is the
//! invariant form normalized so that long roots in each irreducible component
//! have squared length 2, optionally multiplied by a global rational scale
//! (every downstream Poisson bracket is covariant in that scale, which is
//! exercised by the test suite).

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{rat_int, Rat};

/// Hard cap on closure size; generous for rank <= 8 products.
const MAX_ROOTS: usize = 400;

// ---------------------------------------------------------------------------
// Integer matrices acting on the root lattice
// ---------------------------------------------------------------------------

/// Small square integer matrix acting on root-lattice coordinate columns.
#[derive(Clone, PartialEq, Eq, Hash, Debug, serde::Serialize)]
pub struct IntMat {
    n: usize,
    data: Vec<i64>,
}

impl IntMat {
    /// Identity.
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0; n * n];
        for i in 0..n {
            data[i * n + i] = 1;
        }
        IntMat { n, data }
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry access.
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.n + j]
    }

    /// Mutable entry access.
    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.n + j] = v;
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = IntMat { n, data: vec![0; n * n] };
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.get(k, j);
                }
            }
        }
        out
    }

    /// Apply to a coordinate vector.
    pub fn apply(&self, v: &[i64]) -> Vec<i64> {
        assert_eq!(self.n, v.len());
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Is this the identity?
    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n)
    }

    /// Is this minus the identity?
    pub fn is_minus_identity(&self) -> bool {
        let mut m = Self::identity(self.n);
        for i in 0..self.n {
            m.set(i, i, -1);
        }
        *self == m
    }

    /// Convert to a rational matrix.
    pub fn to_rat(&self) -> Matrix<Rat> {
        let mut m = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = rat_int(self.get(i, j));
            }
        }
        m
    }
}

// ---------------------------------------------------------------------------
// Root systems
// ---------------------------------------------------------------------------

/// A finite root system with its invariant form.
#[derive(Clone, Debug)]
pub struct RootSystem {
    label: String,
    rank: usize,
    cartan: Vec<Vec<i64>>,
    /// partition of simple-root indices into connected components
    components: Vec<Vec<usize>>,
    /// `d_i = (alpha_i, alpha_i)/2` before global scaling; 1 on long roots
    form_diag: Vec<Rat>,
    form_scale: Rat,
    /// all roots; positives at `0..n_pos` in canonical order, negatives
    /// mirrored at `n_pos + i = -roots[i]`
    roots: Vec<Vec<i64>>,
    n_pos: usize,
    index: BTreeMap<Vec<i64>, usize>,
    refl: Vec<IntMat>,
}

fn parse_simple_type(token: &str) -> Result<(char, usize)> {
    let mut chars = token.chars();
    let family = chars
        .next()
        .ok_or_else(|| Error::Unsupported("empty type token".into()))?;
    let rank: usize = chars
        .as_str()
        .parse()
        .map_err(|_| Error::Unsupported(format!("bad rank in `{token}`")))?;
    let ok = matches!(
        (family, rank),
        ('A', 1..=4) | ('B', 2..=3) | ('C', 3) | ('D', 4) | ('G', 2)
    );
    if !ok {
        return Err(Error::Unsupported(format!(
            "type `{token}` (supported: A1..A4, B2, B3, C3, D4, G2 and their products)"
        )));
    }
    Ok((family, rank))
}

fn simple_cartan(family: char, rank: usize) -> Vec<Vec<i64>> {
    let mut a = vec![vec![0i64; rank]; rank];
    for i in 0..rank {
        a[i][i] = 2;
    }
    match family {
        'A' => {
            for i in 1..rank {
                a[i - 1][i] = -1;
                a[i][i - 1] = -1;
            }
        }
        'B' => {
            // last simple root short
            for i in 1..rank {
                a[i - 1][i] = -1;
                a[i][i - 1] = -1;
            }
            a[rank - 1][rank - 2] = -2;
        }
        'C' => {
            // last simple root long
            for i in 1..rank {
                a[i - 1][i] = -1;
                a[i][i - 1] = -1;
            }
            a[rank - 2][rank - 1] = -2;
        }
        'D' => {
            // node 1 (0-based) is the branch node: edges (0,1), (1,2), (1,3)
            for &(i, j) in &[(0usize, 1usize), (1, 2), (1, 3)] {
                a[i][j] = -1;
                a[j][i] = -1;
            }
        }
        'G' => {
            // first simple root long
            a[0][1] = -1;
            a[1][0] = -3;
        }
        _ => unreachable!(),
    }
    a
}

impl RootSystem {
    /// Build a root system from a Cartan type label, e.g. `"A2"`, `"G2"`,
    /// `"A1xB2"`.
    pub fn build(label: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        for token in label.split('x') {
            let (family, rank) = parse_simple_type(token.trim())?;
            blocks.push(simple_cartan(family, rank));
        }
        let rank: usize = blocks.iter().map(Vec::len).sum();
        let mut cartan = vec![vec![0i64; rank]; rank];
        let mut offset = 0;
        for block in &blocks {
            let r = block.len();
            for i in 0..r {
                for j in 0..r {
                    cartan[offset + i][offset + j] = block[i][j];
                }
            }
            offset += r;
        }
        Self::from_cartan(cartan, label)
    }

    /// Build a root system from an explicit Cartan matrix.
    ///
    /// The matrix must be a valid finite-type Cartan matrix (2 on the
    /// diagonal, nonpositive integers off it, symmetrizable, with a finite
    /// reflection closure).
    pub fn from_cartan(cartan: Vec<Vec<i64>>, label: &str) -> Result<Self> {
        let rank = cartan.len();
        if rank == 0 || cartan.iter().any(|row| row.len() != rank) {
            return Err(Error::Unsupported("Cartan matrix must be square and nonempty".into()));
        }
        for i in 0..rank {
            if cartan[i][i] != 2 {
                return Err(Error::Unsupported("Cartan diagonal must be 2".into()));
            }
            for j in 0..rank {
                if i != j {
                    if cartan[i][j] > 0 {
                        return Err(Error::Unsupported("off-diagonal Cartan entries must be <= 0".into()));
                    }
                    if (cartan[i][j] == 0) != (cartan[j][i] == 0) {
                        return Err(Error::Unsupported("Cartan zero pattern must be symmetric".into()));
                    }
                }
            }
        }
        // connected components of the Dynkin graph
        let mut seen = vec![false; rank];
        let mut components = Vec::new();
        for start in 0..rank {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(i) = queue.pop_front() {
                comp.push(i);
                for j in 0..rank {
                    if !seen[j] && cartan[i][j] != 0 {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        // symmetrizer: d_j / d_i = a_ij / a_ji on edges; normalize max per
        // component to 1 (long roots have squared length 2)
        let mut form_diag = vec![Rat::zero(); rank];
        for comp in &components {
            form_diag[comp[0]] = Rat::one();
            let mut queue = VecDeque::from([comp[0]]);
            let mut done: BTreeSet<usize> = BTreeSet::from([comp[0]]);
            while let Some(i) = queue.pop_front() {
                for &j in comp.iter() {
                    if !done.contains(&j) && cartan[i][j] != 0 {
                        form_diag[j] =
                            form_diag[i].clone() * rat_int(cartan[i][j]) / rat_int(cartan[j][i]);
                        done.insert(j);
                        queue.push_back(j);
                    }
                }
            }
            let max = comp
                .iter()
                .map(|&i| form_diag[i].clone())
                .max()
                .expect("nonempty component");
            for &i in comp {
                form_diag[i] = form_diag[i].clone() / max.clone();
            }
        }
        // symmetric consistency: d_i a_ij == d_j a_ji
        for i in 0..rank {
            for j in 0..rank {
                if form_diag[i].clone() * rat_int(cartan[i][j])
                    != form_diag[j].clone() * rat_int(cartan[j][i])
                {
                    return Err(Error::Unsupported("Cartan matrix is not symmetrizable".into()));
                }
            }
        }
        // simple reflection matrices on root coordinates:
        // s_i(alpha_j) = alpha_j - a[i][j] alpha_i
        let refl: Vec<IntMat> = (0..rank)
            .map(|i| {
                let mut m = IntMat::identity(rank);
                for j in 0..rank {
                    m.set(i, j, m.get(i, j) - cartan[i][j]);
                }
                m
            })
            .collect();
        // closure of the simple roots under simple reflections
        let mut pos: BTreeSet<Vec<i64>> = BTreeSet::new();
        let mut queue: VecDeque<Vec<i64>> = VecDeque::new();
        for i in 0..rank {
            let mut e = vec![0i64; rank];
            e[i] = 1;
            queue.push_back(e);
        }
        while let Some(v) = queue.pop_front() {
            if !pos.insert(v.clone()) {
                continue;
            }
            if pos.len() > MAX_ROOTS {
                return Err(Error::Unsupported(
                    "reflection closure did not terminate: not a finite-type Cartan matrix".into(),
                ));
            }
            for r in &refl {
                let w = r.apply(&v);
                if w.iter().any(|&c| c.abs() > 1 << 20) {
                    return Err(Error::Unsupported(
                        "root coordinates diverge: not a finite-type Cartan matrix".into(),
                    ));
                }
                if w.iter().all(|&c| c >= 0) && !pos.contains(&w) {
                    queue.push_back(w);
                }
            }
        }
        // canonical positive order: height ascending, then coordinates in
        // descending lexicographic order (so alpha_1 precedes alpha_2)
        let mut positives: Vec<Vec<i64>> = pos.into_iter().collect();
        positives.sort_by(|a, b| {
            let ha: i64 = a.iter().sum();
            let hb: i64 = b.iter().sum();
            ha.cmp(&hb).then_with(|| b.cmp(a))
        });
        let n_pos = positives.len();
        let mut roots = positives;
        for i in 0..n_pos {
            let neg: Vec<i64> = roots[i].iter().map(|&c| -c).collect();
            roots.push(neg);
        }
        let index = roots
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), i))
            .collect();
        Ok(RootSystem {
            label: label.to_string(),
            rank,
            cartan,
            components,
            form_diag,
            form_scale: Rat::one(),
            roots,
            n_pos,
            index,
            refl,
        })
    }

    /// Same system with the invariant form multiplied by `scale`.
    pub fn with_form_scale(mut self, scale: Rat) -> Self {
        assert!(scale.is_positive(), "form scale must be positive");
        self.form_scale = scale;
        self
    }

    /// The Cartan type label.
    pub fn type_label(&self) -> &str {
        &self.label
    }

    /// Rank (number of simple roots).
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of positive roots.
    pub fn num_positive(&self) -> usize {
        self.n_pos
    }

    /// Total number of roots.
    pub fn num_roots(&self) -> usize {
        self.roots.len()
    }

    /// Cartan matrix entry `a[i][j] = <alpha_j, alpha_i^vee>`.
    pub fn cartan(&self) -> &Vec<Vec<i64>> {
        &self.cartan
    }

    /// The global form scale.
    pub fn form_scale(&self) -> &Rat {
        &self.form_scale
    }

    /// Connected components as sets of simple indices.
    pub fn components(&self) -> &Vec<Vec<usize>> {
        &self.components
    }

    /// Root coordinates by index (positives first, then negatives mirrored).
    pub fn root(&self, idx: usize) -> &[i64] {
        &self.roots[idx]
    }

    /// All root indices.
    pub fn all_root_indices(&self) -> impl Iterator<Item = usize> {
        0..self.roots.len()
    }

    /// Look up a coordinate vector.
    pub fn root_index(&self, v: &[i64]) -> Option<usize> {
        self.index.get(v).copied()
    }

    /// Index of `-root(idx)`.
    pub fn neg_index(&self, idx: usize) -> usize {
        if idx < self.n_pos {
            idx + self.n_pos
        } else {
            idx - self.n_pos
        }
    }

    /// Is the root at `idx` positive (with respect to the standard system)?
    pub fn is_positive(&self, idx: usize) -> bool {
        idx < self.n_pos
    }

    /// Height (coordinate sum) of a root.
    pub fn height(&self, idx: usize) -> i64 {
        self.roots[idx].iter().sum()
    }

    /// Invariant form on integer lattice vectors (simple-root coordinates).
    pub fn form(&self, x: &[i64], y: &[i64]) -> Rat {
        let mut acc = Rat::zero();
        for i in 0..self.rank {
            if x[i] == 0 {
                continue;
            }
            for j in 0..self.rank {
                if y[j] == 0 {
                    continue;
                }
                // (alpha_i, alpha_j) = d_i * a[i][j]
                acc = acc
                    + rat_int(x[i] * y[j] * self.cartan[i][j]) * self.form_diag[i].clone();
            }
        }
        acc * self.form_scale.clone()
    }

    /// Invariant form on rational coordinate vectors.
    pub fn form_rat(&self, x: &[Rat], y: &[Rat]) -> Rat {
        let mut acc = Rat::zero();
        for i in 0..self.rank {
            if x[i].is_zero() {
                continue;
            }
            for j in 0..self.rank {
                if y[j].is_zero() {
                    continue;
                }
                acc = acc
                    + x[i].clone()
                        * y[j].clone()
                        * rat_int(self.cartan[i][j])
                        * self.form_diag[i].clone();
            }
        }
        acc * self.form_scale.clone()
    }

    /// Integer pairing `<beta, alpha_i^vee>` for a lattice vector `beta`.
    pub fn simple_pairing(&self, beta: &[i64], i: usize) -> i64 {
        (0..self.rank).map(|j| self.cartan[i][j] * beta[j]).sum()
    }

    /// Pairing `<x, alpha^vee>` (scale-free) of a lattice vector with the
    /// coroot of the root at `idx`; always an integer.
    pub fn pairing_with_coroot(&self, x: &[i64], idx: usize) -> i64 {
        let alpha = &self.roots[idx];
        let two_xa = self.form(x, alpha) * rat_int(2);
        let aa = self.form(alpha, alpha);
        let q = two_xa / aa;
        assert!(q.denom().is_one(), "coroot pairing must be integral");
        let v: i64 = q.numer().try_into().expect("pairing fits in i64");
        v
    }

    /// Coordinates of `alpha^vee` in the coroot basis `{alpha_i^vee}`;
    /// integer for any root.
    pub fn coroot_coords(&self, idx: usize) -> Vec<i64> {
        let alpha = &self.roots[idx];
        let aa = self.form(alpha, alpha);
        (0..self.rank)
            .map(|j| {
                // c_j = n_j (alpha_j, alpha_j) / (alpha, alpha)
                let c = rat_int(alpha[j])
                    * self.form_diag[j].clone()
                    * rat_int(2)
                    * self.form_scale.clone()
                    / aa.clone();
                assert!(c.denom().is_one(), "coroot coordinates must be integral");
                let v: i64 = c.numer().try_into().expect("coroot coordinate fits in i64");
                v
            })
            .collect()
    }

    /// The simple reflection `s_i` as a Weyl element.
    pub fn simple_reflection(&self, i: usize) -> WeylElement {
        WeylElement { word: vec![i], mat: self.refl[i].clone() }
    }

    /// Reflection matrix in the root at `idx`.
    pub fn reflection_matrix(&self, idx: usize) -> IntMat {
        let alpha = &self.roots[idx];
        let n = self.rank;
        let mut m = IntMat::identity(n);
        for j in 0..n {
            let mut e = vec![0i64; n];
            e[j] = 1;
            let p = self.pairing_with_coroot(&e, idx);
            for i in 0..n {
                m.set(i, j, m.get(i, j) - p * alpha[i]);
            }
        }
        m
    }

    /// Weyl element from a word in simple reflections (0-based indices).
    pub fn weyl_from_word(&self, word: &[usize]) -> WeylElement {
        let mut mat = IntMat::identity(self.rank);
        for &i in word {
            assert!(i < self.rank, "reflection index out of range");
            mat = mat.mul(&self.refl[i]);
        }
        WeylElement { word: word.to_vec(), mat }
    }

    /// Weyl element with a freshly computed greedy reduced word for `mat`.
    pub fn weyl_from_matrix(&self, mat: IntMat) -> Result<WeylElement> {
        let word = self.reduced_word_of(&mat)?;
        Ok(WeylElement { word, mat })
    }

    /// Greedy (smallest-descent-first) reduced word of a Weyl group matrix.
    pub fn reduced_word_of(&self, mat: &IntMat) -> Result<Vec<usize>> {
        let mut w = mat.clone();
        let mut rev = Vec::new();
        let bound = 2 * self.n_pos + 2;
        while !w.is_identity() {
            if rev.len() > bound {
                return Err(Error::invalid("matrix is not a Weyl group element"));
            }
            let mut found = None;
            for i in 0..self.rank {
                let img = w.apply(self.root(i));
                if self.root_index(&img).is_none() {
                    return Err(Error::invalid("matrix does not permute the roots"));
                }
                if img.iter().all(|&c| c <= 0) {
                    found = Some(i);
                    break;
                }
            }
            let i = found.ok_or_else(|| Error::invalid("matrix is not a Weyl group element"))?;
            w = w.mul(&self.refl[i]);
            rev.push(i);
        }
        rev.reverse();
        Ok(rev)
    }

    /// The inversion set `{alpha in P : w(alpha) in -P}` of a Weyl matrix
    /// against an arbitrary positive system `P`, given as root indices.
    pub fn inversion_set_in(&self, mat: &IntMat, positives: &[usize]) -> Vec<usize> {
        let pos_set: BTreeSet<usize> = positives.iter().copied().collect();
        positives
            .iter()
            .copied()
            .filter(|&idx| {
                let img = mat.apply(self.root(idx));
                let img_idx = self.root_index(&img).expect("Weyl image is a root");
                !pos_set.contains(&img_idx)
            })
            .collect()
    }

    /// Standard positive-root index list.
    pub fn standard_positive_indices(&self) -> Vec<usize> {
        (0..self.n_pos).collect()
    }

    /// Full analysis of a Weyl element against the standard positive system.
    pub fn weyl_analyze(&self, w: &WeylElement) -> WeylAnalysis {
        self.weyl_analyze_in(w, &self.standard_positive_indices())
    }

    /// Full analysis against a caller-supplied positive system.
    pub fn weyl_analyze_in(&self, w: &WeylElement, positives: &[usize]) -> WeylAnalysis {
        let inversions = self.inversion_set_in(&w.mat, positives);
        let reduced_word = self
            .reduced_word_of(&w.mat)
            .expect("WeylElement matrices are valid");
        // order by repeated multiplication
        let mut order = 1usize;
        let mut acc = w.mat.clone();
        while !acc.is_identity() {
            acc = acc.mul(&w.mat);
            order += 1;
            assert!(order <= 10_000, "runaway order computation");
        }
        WeylAnalysis { length: inversions.len(), reduced_word, inversion_set: inversions, order }
    }

    /// Greedy reduced word of the longest element.
    pub fn longest_word(&self) -> Vec<usize> {
        let mut w = IntMat::identity(self.rank);
        let mut word = Vec::new();
        loop {
            // pick the smallest simple index still sent to a positive root
            let mut found = None;
            for i in 0..self.rank {
                let img = w.apply(self.root(i));
                if img.iter().all(|&c| c >= 0) {
                    found = Some(i);
                    break;
                }
            }
            match found {
                Some(i) => {
                    w = w.mul(&self.refl[i]);
                    word.push(i);
                }
                None => break,
            }
        }
        // the loop multiplies on the right, producing a word for w0 read
        // left to right
        assert_eq!(word.len(), self.n_pos);
        word.reverse();
        word
    }

    /// Parse an element description: `"id"`, `"w0"`/`"longest"`, `"coxeter"`
    /// (= s1 s2 ... sl), `"-1"` (longest element when it acts by -1), a
    /// comma/space-separated 1-based word like `"1,2,1"`, or `"r:c1,...,cl"`
    /// for the reflection in the root with the given coordinates.
    pub fn parse_element(&self, text: &str) -> Result<WeylElement> {
        let t = text.trim();
        match t {
            "id" | "e" => return Ok(self.weyl_from_word(&[])),
            "w0" | "longest" => {
                let word = self.longest_word();
                return Ok(self.weyl_from_word(&word));
            }
            "coxeter" => {
                let word: Vec<usize> = (0..self.rank).collect();
                return Ok(self.weyl_from_word(&word));
            }
            "-1" => {
                let w0 = self.weyl_from_word(&self.longest_word());
                if w0.mat.is_minus_identity() {
                    return Ok(w0);
                }
                return Err(Error::invalid(format!(
                    "the longest element of {} does not act by -1",
                    self.label
                )));
            }
            _ => {}
        }
        if let Some(coords) = t.strip_prefix("r:") {
            let v: Vec<i64> = coords
                .split(',')
                .map(|c| c.trim().parse::<i64>().map_err(|e| Error::Parse(e.to_string())))
                .collect::<Result<_>>()?;
            if v.len() != self.rank {
                return Err(Error::Parse(format!(
                    "expected {} coordinates in reflection spec",
                    self.rank
                )));
            }
            let idx = self
                .root_index(&v)
                .ok_or_else(|| Error::Parse(format!("{v:?} is not a root of {}", self.label)))?;
            return self.weyl_from_matrix(self.reflection_matrix(idx));
        }
        let word: Vec<usize> = t
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .map(|p| {
                let k: usize = p
                    .trim_start_matches('s')
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad reflection index `{p}`")))?;
                if k == 0 || k > self.rank {
                    return Err(Error::Parse(format!(
                        "reflection index {k} out of range 1..={}",
                        self.rank
                    )));
                }
                Ok(k - 1)
            })
            .collect::<Result<_>>()?;
        Ok(self.weyl_from_word(&word))
    }
}

/// Outcome of [`RootSystem::weyl_analyze`].
#[derive(Clone, Debug, Serialize)]
pub struct WeylAnalysis {
    /// Length (inversion count) with respect to the chosen positive system.
    pub length: usize,
    /// Greedy reduced word with respect to the standard simple roots.
    pub reduced_word: Vec<usize>,
    /// Root indices inverted by the element.
    pub inversion_set: Vec<usize>,
    /// Group-theoretic order.
    pub order: usize,
}

/// A Weyl group element: a word in simple reflections together with its
/// integer matrix on root coordinates. Equality is matrix equality (words
/// are not canonical).
#[derive(Clone, Debug)]
pub struct WeylElement {
    /// Some word (not necessarily reduced) evaluating to `mat`.
    pub word: Vec<usize>,
    /// Action on root-lattice coordinates.
    pub mat: IntMat,
}

impl PartialEq for WeylElement {
    fn eq(&self, other: &Self) -> bool {
        self.mat == other.mat
    }
}
impl Eq for WeylElement {}

impl WeylElement {
    /// Product.
    pub fn mul(&self, rhs: &Self) -> Self {
        let mut word = self.word.clone();
        word.extend_from_slice(&rhs.word);
        WeylElement { word, mat: self.mat.mul(&rhs.mat) }
    }

    /// Inverse: the word reverses (reflections are involutions) and the
    /// matrix is inverted exactly.
    pub fn inverse(&self) -> Self {
        let word: Vec<usize> = self.word.iter().rev().copied().collect();
        let inv = self
            .mat
            .to_rat()
            .inverse()
            .expect("Weyl matrices are invertible");
        let n = self.mat.dim();
        let mut m = IntMat::identity(n);
        for i in 0..n {
            for j in 0..n {
                let e = &inv[(i, j)];
                assert!(e.denom().is_one(), "Weyl inverse must be integral");
                m.set(i, j, e.numer().try_into().expect("entry fits in i64"));
            }
        }
        WeylElement { word, mat: m }
    }

    /// Identity element of the given rank.
    pub fn identity(rank: usize) -> Self {
        WeylElement { word: Vec::new(), mat: IntMat::identity(rank) }
    }
}

// ---------------------------------------------------------------------------
// Full Weyl group enumeration and conjugacy classes
// ---------------------------------------------------------------------------

/// The fully enumerated Weyl group of a root system, with conjugacy classes.
///
/// Enumeration is breadth-first over right multiplication by simple
/// reflections in index order, so each element receives a canonical
/// shortlex-minimal word. Intended for the supported desk-scale ranks
/// (|W| <= a few hundred).
pub struct WeylGroup {
    /// Element matrices, BFS order (identity first).
    pub elements: Vec<IntMat>,
    /// Shortlex-minimal word per element.
    pub words: Vec<Vec<usize>>,
    index: HashMap<IntMat, usize>,
    /// Conjugacy classes as sorted element-index lists, sorted by their
    /// minimal representative.
    pub classes: Vec<Vec<usize>>,
}

impl WeylGroup {
    /// Enumerate the Weyl group of `sys`.
    pub fn enumerate(sys: &RootSystem) -> Self {
        let id = IntMat::identity(sys.rank());
        let mut elements = vec![id.clone()];
        let mut words: Vec<Vec<usize>> = vec![Vec::new()];
        let mut index = HashMap::new();
        index.insert(id, 0usize);
        let mut head = 0;
        while head < elements.len() {
            let current = elements[head].clone();
            let word = words[head].clone();
            for i in 0..sys.rank() {
                let next = current.mul(&sys.refl[i]);
                if !index.contains_key(&next) {
                    index.insert(next.clone(), elements.len());
                    elements.push(next);
                    let mut w = word.clone();
                    w.push(i);
                    words.push(w);
                }
            }
            head += 1;
        }
        // conjugacy classes by orbit closure under conjugation by generators
        let n = elements.len();
        let mut class_of = vec![usize::MAX; n];
        let mut classes = Vec::new();
        for start in 0..n {
            if class_of[start] != usize::MAX {
                continue;
            }
            let cid = classes.len();
            let mut members = Vec::new();
            let mut queue = VecDeque::from([start]);
            class_of[start] = cid;
            while let Some(e) = queue.pop_front() {
                members.push(e);
                for i in 0..sys.rank() {
                    let conj = sys.refl[i].mul(&elements[e]).mul(&sys.refl[i]);
                    let j = index[&conj];
                    if class_of[j] == usize::MAX {
                        class_of[j] = cid;
                        queue.push_back(j);
                    }
                }
            }
            members.sort_unstable();
            classes.push(members);
        }
        WeylGroup { elements, words, index, classes }
    }

    /// Group order.
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Element index of a matrix.
    pub fn index_of(&self, mat: &IntMat) -> Option<usize> {
        self.index.get(mat).copied()
    }

    /// Canonical representative of each conjugacy class: minimal by
    /// (word length, word lex) within the class; classes sorted likewise.
    pub fn class_representatives(&self, sys: &RootSystem) -> Vec<WeylElement> {
        let mut reps: Vec<WeylElement> = self
            .classes
            .iter()
            .map(|members| {
                let best = members
                    .iter()
                    .min_by(|&&a, &&b| {
                        let wa = &self.words[a];
                        let wb = &self.words[b];
                        wa.len().cmp(&wb.len()).then_with(|| wa.cmp(wb))
                    })
                    .expect("nonempty class");
                sys.weyl_from_word(&self.words[*best])
            })
            .collect();
        reps.sort_by(|a, b| {
            a.word
                .len()
                .cmp(&b.word.len())
                .then_with(|| a.word.cmp(&b.word))
        });
        reps
    }
}
