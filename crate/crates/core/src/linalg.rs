//! Dense exact linear algebra over any [`Scalar`].
//!
//! Everything here is textbook Gaussian elimination made deterministic:
//! pivots are always the first usable entry, so identical inputs produce
//! identical echelon forms, kernels and factorizations on every run. Sizes in
//! this crate stay small (matrices up to the dimension of the largest
//! fundamental module, 28), so no effort is spent on asymptotics — the effort
//! goes into exactness and reproducibility.

use num::bigint::BigInt;
use num::rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::scalar::{Rat, Scalar};

/// A dense row-major matrix over an exact scalar.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    /// Zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    /// Build from nested rows; panics if the rows are ragged.
    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    /// Row count.
    pub fn nrows(&self) -> usize {
        self.rows
    }

    /// Column count.
    pub fn ncols(&self) -> usize {
        self.cols
    }

    /// Borrow row `i` as a slice.
    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Column `j` as a vector.
    pub fn col(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    /// Matrix product.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matrix product");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let term = a.clone() * rhs[(k, j)].clone();
                    out[(i, j)] = out[(i, j)].clone() + term;
                }
            }
        }
        out
    }

    /// Matrix–vector product.
    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in matrix-vector product");
        (0..self.rows)
            .map(|i| {
                let mut acc = S::zero();
                for j in 0..self.cols {
                    if !self[(i, j)].is_zero() && !v[j].is_zero() {
                        acc = acc + self[(i, j)].clone() * v[j].clone();
                    }
                }
                acc
            })
            .collect()
    }

    /// Entrywise sum.
    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    /// Entrywise difference.
    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.clone() - b.clone())
            .collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    /// Multiply every entry by `c`.
    pub fn scale(&self, c: &S) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.clone() * c.clone()).collect(),
        }
    }

    /// Transpose.
    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    /// Apply `f` to every entry, possibly changing the scalar type.
    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Is this the identity?
    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    if i == j {
                        self[(i, j)] == S::one()
                    } else {
                        self[(i, j)].is_zero()
                    }
                })
            })
    }

    /// Is every entry zero?
    pub fn is_zero_matrix(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Row echelon form; returns (echelon matrix, pivot columns).
    fn echelon(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m[(r, c)].clone().try_inv().expect("nonzero pivot");
            for j in c..m.cols {
                m[(r, j)] = m[(r, j)].clone() * inv.clone();
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let factor = m[(i, c)].clone();
                    for j in c..m.cols {
                        let t = factor.clone() * m[(r, j)].clone();
                        m[(i, j)] = m[(i, j)].clone() - t;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Rank.
    pub fn rank(&self) -> usize {
        self.echelon().1.len()
    }

    /// Exact inverse, `None` if singular.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        // augmented [A | I] to reduced echelon
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = S::one();
        }
        let (red, pivots) = aug.echelon();
        if pivots.len() < n || pivots.iter().enumerate().any(|(i, &c)| c != i) {
            return None;
        }
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = red[(i, n + j)].clone();
            }
        }
        Some(out)
    }

    /// Solve `A x = b` for square invertible `A`; `None` if singular.
    pub fn solve(&self, b: &[S]) -> Option<Vec<S>> {
        assert_eq!(self.rows, b.len());
        let inv = self.inverse()?;
        Some(inv.mul_vec(b))
    }

    /// Solve `A x = b` for any shape of `A`: returns the particular solution
    /// with every free variable set to zero, or `None` when the system is
    /// inconsistent.
    pub fn solve_any(&self, b: &[S]) -> Option<Vec<S>> {
        assert_eq!(self.rows, b.len());
        let mut aug = Self::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = b[i].clone();
        }
        let (red, pivots) = aug.echelon();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![S::zero(); self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = red[(r, self.cols)].clone();
        }
        Some(x)
    }

    /// Basis of the right kernel `{x : A x = 0}`, deterministic: one basis
    /// vector per free column, in ascending column order, with the free
    /// coordinate normalized to 1.
    pub fn kernel_basis(&self) -> Vec<Vec<S>> {
        let (red, pivots) = self.echelon();
        let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![S::zero(); self.cols];
            v[free] = S::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -red[(r, free)].clone();
            }
            basis.push(v);
        }
        basis
    }

    /// Exact `A = L D U` with `L` unit lower triangular, `D` diagonal, `U`
    /// unit upper triangular. `None` when a leading principal minor vanishes
    /// (callers translate this into a domain error: the input sits outside
    /// the generic-position locus where the factorization it encodes exists).
    pub fn ldu(&self) -> Option<(Self, Self, Self)> {
        assert_eq!(self.rows, self.cols, "LDU of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut l = Self::identity(n);
        let mut u = Self::identity(n);
        let mut d = Self::zeros(n, n);
        for k in 0..n {
            let pivot = a[(k, k)].clone();
            let pinv = pivot.clone().try_inv()?;
            d[(k, k)] = pivot.clone();
            for i in k + 1..n {
                l[(i, k)] = a[(i, k)].clone() * pinv.clone();
            }
            for j in k + 1..n {
                u[(k, j)] = a[(k, j)].clone() * pinv.clone();
            }
            for i in k + 1..n {
                if a[(i, k)].is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let t = l[(i, k)].clone() * a[(k, j)].clone();
                    a[(i, j)] = a[(i, j)].clone() - t;
                }
            }
        }
        Some((l, d, u))
    }
}

impl<S> std::ops::Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

/// Saturated basis of the integer kernel `{x in Z^n : A x = 0}` of a matrix
/// with rational entries.
///
/// Rows are cleared of denominators (a row operation, so the kernel is
/// unchanged), then integer column reduction with a unimodular tracking
/// matrix produces a basis of the kernel *lattice* — saturation is automatic
/// because the basis vectors are columns of a unimodular matrix. The basis is
/// sign-normalized (first nonzero entry positive) and sorted for determinism.
pub fn integer_kernel(a: &Matrix<Rat>) -> Vec<Vec<BigInt>> {
    let m = a.nrows();
    let n = a.ncols();
    // clear denominators row by row
    let mut work: Vec<Vec<BigInt>> = (0..m)
        .map(|i| {
            let mut lcm = BigInt::one();
            for j in 0..n {
                lcm = num::integer::lcm(lcm, a[(i, j)].denom().clone());
            }
            (0..n)
                .map(|j| {
                    let x: BigRational = &a[(i, j)] * BigRational::from_integer(lcm.clone());
                    debug_assert!(x.denom().is_one());
                    x.numer().clone()
                })
                .collect()
        })
        .collect();
    let mut u: Vec<Vec<BigInt>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    // column reduction: after processing a row, at most one column among the
    // still-active ones is nonzero in it, and that column retires.
    let mut active = 0usize; // columns < active are pivot columns
    for r in 0..m {
        loop {
            let nonzero: Vec<usize> = (active..n).filter(|&j| !work[r][j].is_zero()).collect();
            match nonzero.len() {
                0 => break,
                1 => {
                    let j = nonzero[0];
                    swap_cols(&mut work, &mut u, j, active);
                    active += 1;
                    break;
                }
                _ => {
                    // reduce against the column with the smallest nonzero |entry|
                    let &j0 = nonzero
                        .iter()
                        .min_by_key(|&&j| work[r][j].abs())
                        .expect("nonempty");
                    for &j in &nonzero {
                        if j == j0 {
                            continue;
                        }
                        let q = &work[r][j] / &work[r][j0]; // truncated division
                        if !q.is_zero() {
                            sub_col(&mut work, &mut u, j, j0, &q);
                        }
                    }
                }
            }
        }
    }
    let mut basis: Vec<Vec<BigInt>> = (active..n).map(|j| (0..n).map(|i| u[i][j].clone()).collect()).collect();
    for v in &mut basis {
        if let Some(first) = v.iter().find(|x| !x.is_zero()) {
            if first.is_negative() {
                for x in v.iter_mut() {
                    *x = -x.clone();
                }
            }
        }
    }
    basis.sort();
    basis
}

fn swap_cols(work: &mut [Vec<BigInt>], u: &mut [Vec<BigInt>], a: usize, b: usize) {
    if a == b {
        return;
    }
    for row in work.iter_mut() {
        row.swap(a, b);
    }
    for row in u.iter_mut() {
        row.swap(a, b);
    }
}

fn sub_col(work: &mut [Vec<BigInt>], u: &mut [Vec<BigInt>], j: usize, j0: usize, q: &BigInt) {
    for row in work.iter_mut() {
        let t = q * &row[j0];
        row[j] = &row[j] - t;
    }
    for row in u.iter_mut() {
        let t = q * &row[j0];
        row[j] = &row[j] - t;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int, ExactScalar};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rng: &mut StdRng, n: usize) -> Matrix<ExactScalar> {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = ExactScalar::rational(rat(rng.gen_range(-9..=9), rng.gen_range(1..=4)));
            }
        }
        m
    }

    #[test]
    fn inverse_round_trips() {
        let mut rng = StdRng::seed_from_u64(5);
        let mut inverted = 0;
        while inverted < 25 {
            let m = random_matrix(&mut rng, 4);
            if let Some(inv) = m.inverse() {
                assert!(m.mul(&inv).is_identity());
                assert!(inv.mul(&m).is_identity());
                inverted += 1;
            }
        }
    }

    #[test]
    fn rank_nullity_holds() {
        let mut rng = StdRng::seed_from_u64(6);
        for _ in 0..30 {
            // random products guarantee non-trivial kernels now and then
            let a = random_matrix(&mut rng, 4);
            let mut b = Matrix::<ExactScalar>::zeros(4, 4);
            for i in 0..4 {
                for j in 0..2 {
                    b[(i, j)] = a[(i, j)].clone();
                }
            }
            let rank = b.rank();
            let kernel = b.kernel_basis();
            assert_eq!(rank + kernel.len(), 4);
            for v in &kernel {
                assert!(b.mul_vec(v).iter().all(|x| x.is_zero()));
            }
        }
    }

    #[test]
    fn ldu_reassembles_and_detects_bad_pivots() {
        let mut rng = StdRng::seed_from_u64(7);
        let mut done = 0;
        while done < 20 {
            let m = random_matrix(&mut rng, 4);
            match m.ldu() {
                Some((l, d, u)) => {
                    assert_eq!(l.mul(&d).mul(&u), m);
                    // unit triangular shapes
                    for i in 0..4 {
                        assert_eq!(l[(i, i)], ExactScalar::int(1));
                        assert_eq!(u[(i, i)], ExactScalar::int(1));
                        for j in i + 1..4 {
                            assert!(l[(i, j)].is_zero());
                            assert!(u[(j, i)].is_zero());
                        }
                    }
                    done += 1;
                }
                None => continue,
            }
        }
        // leading zero pivot: no factorization
        let singular_leading = Matrix::from_rows(vec![
            vec![ExactScalar::int(0), ExactScalar::int(1)],
            vec![ExactScalar::int(1), ExactScalar::int(0)],
        ]);
        assert!(singular_leading.ldu().is_none());
    }

    #[test]
    fn integer_kernel_is_saturated_and_exact() {
        // kernel of (2 -2) is generated by (1,1), not (2,2)
        let a = Matrix::from_rows(vec![vec![rat_int(2), rat_int(-2)]]);
        assert_eq!(integer_kernel(&a), vec![vec![BigInt::from(1), BigInt::from(1)]]);
        // rational entries are fine: kernel of (1/2  1/3) over Z
        let b = Matrix::from_rows(vec![vec![rat(1, 2), rat(1, 3)]]);
        assert_eq!(integer_kernel(&b), vec![vec![BigInt::from(2), BigInt::from(-3)]]);
        // dependent rows
        let c = Matrix::from_rows(vec![
            vec![rat_int(1), rat_int(2), rat_int(3)],
            vec![rat_int(2), rat_int(4), rat_int(6)],
        ]);
        let basis = integer_kernel(&c);
        assert_eq!(basis.len(), 2);
        for v in &basis {
            let s: BigInt =
                v[0].clone() + BigInt::from(2) * &v[1] + BigInt::from(3) * &v[2];
            assert!(s.is_zero());
        }
        // full-rank kernel is empty
        let d = Matrix::from_rows(vec![
            vec![rat_int(1), rat_int(0)],
            vec![rat_int(0), rat_int(1)],
        ]);
        assert!(integer_kernel(&d).is_empty());
    }

    #[test]
    fn kernel_vectors_are_primitive() {
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..20 {
            let mut rows = Vec::new();
            for _ in 0..2 {
                rows.push((0..4).map(|_| rat_int(rng.gen_range(-6..=6))).collect::<Vec<_>>());
            }
            let a = Matrix::from_rows(rows);
            for v in integer_kernel(&a) {
                let mut g = BigInt::zero();
                for x in &v {
                    g = num::integer::gcd(g, x.clone());
                }
                assert!(g.is_one(), "non-primitive kernel vector {v:?}");
                // and it actually lies in the kernel
                let prod = a.mul_vec(&v.iter().map(|x| BigRational::from_integer(x.clone())).collect::<Vec<_>>());
                assert!(prod.iter().all(Zero::is_zero));
            }
        }
    }
}
