//! Coordinates on the double cosets of a Borel subgroup, indexed by Weyl
//! group elements.
//!
//! Every element of the coset attached to `w` factors uniquely as
//! `n * w^{-1} * h * n_w` with `n` upper unipotent, `h` in the torus, and
//! `n_w` a product of one-parameter factors over the roots inverted by
//! `w^{-1}`, taken along a normal ordering whose initial segment is exactly
//! that inversion set.  This module recovers all three pieces from matrix
//! coefficients of the fundamental modules:
//!
//! * the `q` parameters of `n_w` by an inductive ratio of contravariant
//!   pairings against reflection-translated highest vectors, peeling one
//!   factor per step;
//! * the `r` parameters of `n` by the same kind of ratio applied to
//!   `g * n_w^{-1} * w`, which lies in the Borel subgroup;
//! * the torus part as `h = w n^{-1} g n_w^{-1}`, read off highest-weight
//!   diagonal entries and certified diagonal.
//!
//! Each ratio's normalizing constant depends only on the chosen reflection
//! representatives and root vectors, never on the input, so it is *measured*
//! once per position: apply the root vector to the reflected vector and read
//! off the coefficient.  A vanishing denominator is precisely the membership
//! test for the coset, and surfaces as [`Error::ZeroDenominator`].

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::ordering::{ordering_from_reduced_word, NormalOrdering};
use crate::rep::{Factor, GroupElement, RepContext};
use crate::rootsys::RootSystem;
use crate::scalar::{rat_int, Rat, Scalar};
use num_traits::Zero as _;

/// The full coordinate tuple of a cell element.
#[derive(Clone, Debug, PartialEq)]
pub struct CellCoordinates<S> {
    /// Reduced word of the indexing Weyl element.
    pub word: Vec<usize>,
    /// Normal ordering used; the first `q.len()` roots are the inversion set
    /// of the inverse of the indexing element.
    pub ordering: NormalOrdering,
    /// Parameters of the trailing unipotent factor, innermost first.
    pub q: Vec<S>,
    /// Parameters of the leading unipotent factor along the full ordering.
    pub r: Vec<S>,
    /// Torus entries.
    pub h: Vec<S>,
}

/// Prepared data for coordinate recovery on the cell of one Weyl element:
/// the extended normal ordering, reflection-translated highest vectors, the
/// measured normalization constants, and the fixed representative of the
/// element in every fundamental module.
pub struct CellProblem<'a> {
    pub sys: &'a RootSystem,
    pub ctx: &'a RepContext,
    /// Reduced word of the indexing element (first `k` letters of the full
    /// word below).
    pub word: Vec<usize>,
    /// Normal ordering of the whole positive system extending the inversion
    /// set of the indexing element's inverse.
    pub ordering: NormalOrdering,
    k: usize,
    /// `wv[m][p]`: the product of the first `p` reflection representatives
    /// (innermost first) applied to the highest vector of module `m`.
    wv: Vec<Vec<Vec<Rat>>>,
    /// Measured normalization constant per ordering position.
    c: Vec<Rat>,
    /// Representative of the indexing element per module.
    w_rep: Vec<Matrix<Rat>>,
}

impl<'a> CellProblem<'a> {
    pub fn new(sys: &'a RootSystem, ctx: &'a RepContext, word: &[usize]) -> Result<Self> {
        let rank = sys.rank();
        for &i in word {
            if i >= rank {
                return Err(Error::invalid(format!("letter {i} out of range")));
            }
        }
        // Greedily extend the word to one of the longest element, so the
        // inversion set of the inverse becomes an initial segment.
        let mut full = word.to_vec();
        loop {
            let mat = sys.weyl_from_word(&full).mat;
            let mut found = None;
            for i in 0..rank {
                let img = mat.apply(sys.root(i));
                if img.iter().all(|&x| x >= 0) {
                    found = Some(i);
                    break;
                }
            }
            match found {
                Some(i) => full.push(i),
                None => break,
            }
        }
        let positives: Vec<usize> = (0..sys.num_positive()).collect();
        let ordering = ordering_from_reduced_word(sys, &positives, &full)?;
        debug_assert_eq!(&ordering.reduced_word[..word.len()], word);

        let total = ordering.sequence.len();
        let mut wv = Vec::with_capacity(rank);
        let mut refl_mats: Vec<Vec<Matrix<Rat>>> = Vec::with_capacity(rank);
        for m in 0..rank {
            let module = &ctx.modules[m];
            let mut mats = Vec::with_capacity(total);
            for p in 0..total {
                let beta = ordering.sequence[p];
                mats.push(GroupElement::<Rat>::reflection_rep(sys, beta).evaluate(module)?);
            }
            let mut vecs = Vec::with_capacity(total + 1);
            let mut v = vec![rat_int(0); module.dim];
            v[module.highest()] = rat_int(1);
            vecs.push(v);
            for p in 0..total {
                let next = mats[p].mul_vec(&vecs[p]);
                vecs.push(next);
            }
            wv.push(vecs);
            refl_mats.push(mats);
        }

        // Measure the normalization constants: the root vector sends the
        // reflected vector back to a nonzero multiple of the unreflected one.
        let mut c = Vec::with_capacity(total);
        for p in 1..=total {
            let m = ordering.reduced_word[p - 1];
            let beta = ordering.sequence[p - 1];
            let u = &wv[m][p - 1];
            let xv = ctx.modules[m].root_vectors[beta].mul_vec(&wv[m][p]);
            let t = u
                .iter()
                .position(|x| !x.is_zero())
                .expect("reflected highest vectors are nonzero");
            let kappa = xv[t].clone() / u[t].clone();
            assert!(!kappa.is_zero(), "lowest vectors map onto highest ones");
            let expected: Vec<Rat> = u.iter().map(|x| x.clone() * kappa.clone()).collect();
            assert_eq!(xv, expected, "two-dimensional string acts by a scalar");
            c.push(rat_int(1) / kappa);
        }

        let mut w_rep = Vec::with_capacity(rank);
        for m in 0..rank {
            w_rep.push(GroupElement::<Rat>::weyl_word(word).evaluate(&ctx.modules[m])?);
        }
        Ok(CellProblem { sys, ctx, word: word.to_vec(), ordering, k: word.len(), wv, c, w_rep })
    }

    /// Number of trailing unipotent parameters (the length of the indexing
    /// element).
    pub fn num_q(&self) -> usize {
        self.k
    }

    /// The measured normalization constants with their provenance, one per
    /// ordering position: `(module, root, value)`, where `module` is the
    /// fundamental module the pairing ratio is read in and `root` is the
    /// ordering root whose reflection representative and root vector the
    /// constant depends on.  The same constants normalize both the trailing
    /// and the leading recursion, because both ratios are built from the
    /// same reflected-vector chains.
    pub fn measured_constants(&self) -> Vec<(usize, usize, Rat)> {
        (0..self.c.len())
            .map(|p| (self.ordering.reduced_word[p], self.ordering.sequence[p], self.c[p].clone()))
            .collect()
    }

    fn one_param_matrix<S: Scalar>(&self, m: usize, beta: usize, t: S) -> Matrix<S> {
        GroupElement::one_param(beta, t)
            .evaluate(&self.ctx.modules[m])
            .expect("one-parameter factors always evaluate")
    }

    /// Modules' matrices of the input, multiplied on the right by the inverse
    /// one-parameter factors for the already-recovered `q` prefix.
    fn corrected<S: Scalar>(&self, g: &GroupElement<S>, q: &[S]) -> Result<Vec<Matrix<S>>> {
        let rank = self.sys.rank();
        let mut mats = Vec::with_capacity(rank);
        for m in 0..rank {
            let mut acc = g.evaluate(&self.ctx.modules[m])?;
            for (p, qp) in q.iter().enumerate() {
                let beta = self.ordering.sequence[p];
                acc = acc.mul(&self.one_param_matrix(m, beta, -qp.clone()));
            }
            mats.push(acc);
        }
        Ok(mats)
    }

    /// Recover the trailing unipotent parameters by the peeling recursion.
    /// A vanishing denominator means the input is outside the cell.
    pub fn coordinates_q<S: Scalar>(&self, g: &GroupElement<S>) -> Result<Vec<S>> {
        let rank = self.sys.rank();
        let mut corrected: Vec<Matrix<S>> = (0..rank)
            .map(|m| g.evaluate(&self.ctx.modules[m]))
            .collect::<Result<_>>()?;
        let mut q: Vec<S> = Vec::with_capacity(self.k);
        for p in 1..=self.k {
            let m = self.word[p - 1];
            let module = &self.ctx.modules[m];
            let a = self.w_rep[m].map(S::from_rat).mul(&corrected[m]);
            let u: Vec<S> = self.wv[m][p - 1].iter().map(|x| S::from_rat(x)).collect();
            let u_next: Vec<S> = self.wv[m][p].iter().map(|x| S::from_rat(x)).collect();
            let num = module.contravariant_pair(&u, &a.mul_vec(&u_next));
            let den = module.contravariant_pair(&u, &a.mul_vec(&u));
            let inv = den.try_inv().ok_or_else(|| {
                Error::zero_den(format!("cell membership ratio at position {p}"))
            })?;
            let qp = S::from_rat(&self.c[p - 1]) * num * inv;
            for (mm, mat) in corrected.iter_mut().enumerate() {
                let beta = self.ordering.sequence[p - 1];
                *mat = mat.mul(&self.one_param_matrix(mm, beta, -qp.clone()));
            }
            q.push(qp);
        }
        Ok(q)
    }

    /// Recover the leading unipotent parameters and the torus entries, given
    /// the trailing parameters.
    pub fn coordinates_r_and_h<S: Scalar>(
        &self,
        g: &GroupElement<S>,
        q: &[S],
    ) -> Result<(Vec<S>, Vec<S>)> {
        let rank = self.sys.rank();
        let total = self.ordering.sequence.len();
        let corrected = self.corrected(g, q)?; // g * n_w^{-1}
        let b: Vec<Matrix<S>> = (0..rank)
            .map(|m| corrected[m].mul(&self.w_rep[m].map(S::from_rat)))
            .collect();
        let mut r = Vec::with_capacity(total);
        for p in 1..=total {
            let m = self.ordering.reduced_word[p - 1];
            let module = &self.ctx.modules[m];
            let u_prev: Vec<S> = self.wv[m][p - 1].iter().map(|x| S::from_rat(x)).collect();
            let u_cur: Vec<S> = self.wv[m][p].iter().map(|x| S::from_rat(x)).collect();
            let bv = b[m].mul_vec(&u_cur);
            let num = module.contravariant_pair(&u_prev, &bv);
            let den = module.contravariant_pair(&u_cur, &bv);
            let inv = den.try_inv().ok_or_else(|| {
                Error::zero_den(format!("unipotent ratio at position {p}"))
            })?;
            r.push(S::from_rat(&self.c[p - 1]) * num * inv);
        }
        // h = w * n^{-1} * g * n_w^{-1}, certified to be a torus matrix.
        let mut h_entries = Vec::with_capacity(rank);
        let mut h_mats = Vec::with_capacity(rank);
        for m in 0..rank {
            let mut acc = self.w_rep[m].map(S::from_rat);
            for p in (1..=total).rev() {
                let beta = self.ordering.sequence[p - 1];
                acc = acc.mul(&self.one_param_matrix(m, beta, -r[p - 1].clone()));
            }
            let hm = acc.mul(&corrected[m]);
            h_mats.push(hm);
        }
        for (i, hm) in h_mats.iter().enumerate() {
            let t = hm[(self.ctx.modules[i].highest(), self.ctx.modules[i].highest())].clone();
            if t.is_zero() {
                return Err(Error::zero_den(format!("torus entry {i} vanished")));
            }
            h_entries.push(t);
        }
        let torus = GroupElement::torus(h_entries.clone());
        for (m, hm) in h_mats.iter().enumerate() {
            let expect = torus.evaluate(&self.ctx.modules[m])?;
            if hm != &expect {
                return Err(Error::invalid(
                    "recovered complement is not a torus element; input outside the cell",
                ));
            }
        }
        Ok((r, h_entries))
    }

    /// Full coordinate recovery.
    pub fn coordinates<S: Scalar>(&self, g: &GroupElement<S>) -> Result<CellCoordinates<S>> {
        let q = self.coordinates_q(g)?;
        let (r, h) = self.coordinates_r_and_h(g, &q)?;
        Ok(CellCoordinates {
            word: self.word.clone(),
            ordering: self.ordering.clone(),
            q,
            r,
            h,
        })
    }

    /// Assemble the cell element `n * w^{-1} * h * n_w` from coordinates; the
    /// round-trip oracle for the recovery above.
    pub fn assemble<S: Scalar>(&self, h: &[S], q: &[S], r: &[S]) -> Result<GroupElement<S>> {
        let total = self.ordering.sequence.len();
        if q.len() != self.k || r.len() != total || h.len() != self.sys.rank() {
            return Err(Error::invalid("coordinate tuple has wrong lengths"));
        }
        let mut factors: Vec<Factor<S>> = Vec::new();
        for (p, rp) in r.iter().enumerate() {
            factors.push(Factor::OneParam { root: self.ordering.sequence[p], t: rp.clone() });
        }
        let winv = GroupElement::<S>::weyl_word(&self.word).inverse(self.sys)?;
        factors.extend(winv.factors);
        factors.push(Factor::Torus { entries: h.to_vec() });
        for p in (0..self.k).rev() {
            factors.push(Factor::OneParam { root: self.ordering.sequence[p], t: q[p].clone() });
        }
        Ok(GroupElement { factors })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(label: &str) -> (RootSystem, RepContext) {
        let sys = RootSystem::build(label).unwrap();
        let ctx = RepContext::new(&sys).unwrap();
        (sys, ctx)
    }

    fn random_rat(rng: &mut ChaCha8Rng) -> Rat {
        rat(rng.gen_range(-9..=9), rng.gen_range(1..=5))
    }

    fn random_nonzero(rng: &mut ChaCha8Rng) -> Rat {
        let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
        rat(sign * rng.gen_range(1..=9), rng.gen_range(1..=5))
    }

    #[test]
    fn a_bare_inverse_representative_has_all_zero_coordinates() {
        let (sys, ctx) = setup("A1");
        let cell = CellProblem::new(&sys, &ctx, &[0]).unwrap();
        let g = GroupElement::<Rat>::weyl_word(&[0]).inverse(&sys).unwrap();
        let coords = cell.coordinates(&g).unwrap();
        assert_eq!(coords.q, vec![rat_int(0)]);
        assert_eq!(coords.r, vec![rat_int(0)]);
        assert_eq!(coords.h, vec![rat_int(1)]);
    }

    #[test]
    fn a_rank_one_twist_recovers_its_parameter() {
        let (sys, ctx) = setup("A1");
        let cell = CellProblem::new(&sys, &ctx, &[0]).unwrap();
        let mut g = GroupElement::<Rat>::weyl_word(&[0]).inverse(&sys).unwrap();
        g = g.mul(&GroupElement::one_param(0, rat_int(5)));
        let q = cell.coordinates_q(&g).unwrap();
        assert_eq!(q, vec![rat_int(5)]);
    }

    #[test]
    fn the_rank_one_assembly_matches_a_direct_matrix_product() {
        let (sys, ctx) = setup("A1");
        let cell = CellProblem::new(&sys, &ctx, &[0]).unwrap();
        let g = cell.assemble(&[rat_int(1)], &[rat_int(2)], &[rat_int(3)]).unwrap();
        let m = g.evaluate(&ctx.modules[0]).unwrap();
        // X(3) * s^{-1} * X(2) with s = [[0,-1],[1,0]]:
        let expect = Matrix::from_rows(vec![
            vec![rat_int(-3), rat_int(-5)],
            vec![rat_int(-1), rat_int(-2)],
        ]);
        assert_eq!(m, expect);
        let coords = cell.coordinates(&g).unwrap();
        assert_eq!(coords.q, vec![rat_int(2)]);
        assert_eq!(coords.r, vec![rat_int(3)]);
        assert_eq!(coords.h, vec![rat_int(1)]);
    }

    #[test]
    fn the_identity_sits_outside_the_big_cell() {
        let (sys, ctx) = setup("A1");
        let cell = CellProblem::new(&sys, &ctx, &[0]).unwrap();
        let g = GroupElement::<Rat>::identity();
        match cell.coordinates_q(&g) {
            Err(Error::ZeroDenominator { .. }) => {}
            other => panic!("expected a zero denominator, got {other:?}"),
        }
    }

    #[test]
    fn torus_entries_come_back_verbatim() {
        let (sys, ctx) = setup("A2");
        let cell = CellProblem::new(&sys, &ctx, &[0, 1]).unwrap();
        let h = vec![rat_int(2), rat_int(3)];
        let q = vec![rat(1, 2), rat_int(-4)];
        let r = vec![rat_int(1), rat_int(0), rat(2, 3)];
        let g = cell.assemble(&h, &q, &r).unwrap();
        let coords = cell.coordinates(&g).unwrap();
        assert_eq!(coords.h, h);
        assert_eq!(coords.q, q);
        assert_eq!(coords.r, r);
    }

    #[test]
    fn round_trips_recover_every_coordinate_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for label in ["A1", "A2", "B2"] {
            let (sys, ctx) = setup(label);
            let group = crate::rootsys::WeylGroup::enumerate(&sys);
            for word in &group.words {
                let cell = CellProblem::new(&sys, &ctx, word).unwrap();
                let total = cell.ordering.sequence.len();
                for _ in 0..100 {
                    let h: Vec<Rat> =
                        (0..sys.rank()).map(|_| random_nonzero(&mut rng)).collect();
                    let q: Vec<Rat> =
                        (0..cell.num_q()).map(|_| random_rat(&mut rng)).collect();
                    let r: Vec<Rat> = (0..total).map(|_| random_rat(&mut rng)).collect();
                    let g = cell.assemble(&h, &q, &r).unwrap();
                    let coords = cell.coordinates(&g).unwrap();
                    assert_eq!(coords.q, q, "{label} word {word:?}");
                    assert_eq!(coords.r, r, "{label} word {word:?}");
                    assert_eq!(coords.h, h, "{label} word {word:?}");
                }
            }
        }
    }

    #[test]
    fn distinct_coordinates_assemble_to_distinct_elements() {
        let (sys, ctx) = setup("A2");
        let cell = CellProblem::new(&sys, &ctx, &[0, 1]).unwrap();
        let g1 = cell
            .assemble(
                &[rat_int(1), rat_int(1)],
                &[rat_int(1), rat_int(2)],
                &[rat_int(0), rat_int(0), rat_int(0)],
            )
            .unwrap();
        let g2 = cell
            .assemble(
                &[rat_int(1), rat_int(1)],
                &[rat_int(1), rat_int(3)],
                &[rat_int(0), rat_int(0), rat_int(0)],
            )
            .unwrap();
        let differs = (0..sys.rank()).any(|m| {
            g1.evaluate(&ctx.modules[m]).unwrap() != g2.evaluate(&ctx.modules[m]).unwrap()
        });
        assert!(differs);
    }

    #[test]
    fn rebuilt_problems_recover_identical_coordinates() {
        let (sys, ctx) = setup("B2");
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let word = vec![0, 1, 0];
        let cell1 = CellProblem::new(&sys, &ctx, &word).unwrap();
        let cell2 = CellProblem::new(&sys, &ctx, &word).unwrap();
        let h: Vec<Rat> = (0..sys.rank()).map(|_| random_nonzero(&mut rng)).collect();
        let q: Vec<Rat> = (0..cell1.num_q()).map(|_| random_rat(&mut rng)).collect();
        let r: Vec<Rat> =
            (0..cell1.ordering.sequence.len()).map(|_| random_rat(&mut rng)).collect();
        let g = cell1.assemble(&h, &q, &r).unwrap();
        let c1 = cell1.coordinates(&g).unwrap();
        let c2 = cell2.coordinates(&g).unwrap();
        assert_eq!(c1.q, c2.q);
        assert_eq!(c1.r, c2.r);
        assert_eq!(c1.h, c2.h);
    }
}
