//! Transversal-cell coordinates for a fixed Weyl class.
//!
//! For a Weyl group element `s` the positive system adapted to `s` splits
//! into a nilradical run `β₁..β_d` and a trailing block of roots fixed by
//! `s`.  Every generic group element factors as `n⁻¹·n_s·z·s⁻¹·n` where `n`
//! is a one-parameter word over the run, `n_s` is supported on the roots
//! sent to negatives by `s`, and `z` lies in the reductive subgroup spanned
//! by the fixed roots and the `s`-fixed torus directions.  The coordinates
//! of `n` are recovered by a measured pairing recursion in the fundamental
//! modules, and iterating the same conjugation step yields the projection
//! operator onto conjugation-invariant functions.

use std::collections::BTreeSet;

use num::bigint::BigInt;
use num::traits::ToPrimitive;
use num_traits::{One as _, Zero as _};
use rand::{Rng, SeedableRng};

use crate::carter::{
    associated_positive_system, carter_decompose, invariant_subspaces, CarterDecomposition,
    PositiveSystemS,
};
use crate::error::{Error, Result};
use crate::linalg::{integer_kernel, Matrix};
use crate::ordering::{build_associated_ordering, AssociatedOrdering};
use crate::rep::{GroupElement, RepContext};
use crate::rootsys::{RootSystem, WeylElement};
use crate::scalar::{rat_int, Rat, Scalar};

/// Precomputed data for transversal-cell factorization in one Weyl class.
///
/// Immutable after construction; all evaluations are pure, so one context
/// can serve any number of concurrent factorizations.
pub struct SliceContext<'a> {
    pub sys: &'a RootSystem,
    pub ctx: &'a RepContext,
    /// The class representative whose adapted ordering drives everything.
    pub s: WeylElement,
    /// Reduced word of `s` in the standard simple reflections.
    pub s_word: Vec<usize>,
    pub decomposition: CarterDecomposition,
    pub positive_system: PositiveSystemS,
    pub ordering: AssociatedOrdering,
    /// Length of the nilradical run (number of recursion coordinates).
    pub d: usize,
    /// Root indices `β₁..β_d`: the adapted positives outside the fixed block.
    pub nilradical: Vec<usize>,
    /// The roots of the run that `s` sends to adapted negatives, in run order.
    pub ns_roots: Vec<usize>,
    /// The fixed-block positives, in adapted (tail) order.
    pub levi_positive: Vec<usize>,
    /// Integer coroot-coordinate vectors spanning the `s`-fixed cocharacters.
    pub fixed_cocharacters: Vec<Vec<i64>>,
    /// Word mapping the standard positives onto the adapted positives.
    pub chamber_word: Vec<usize>,
    /// Standard fundamental module attached to each adapted simple letter.
    module_of_letter: Vec<usize>,
    /// Extremal vector playing the highest-weight role for the adapted
    /// system, per standard fundamental module.
    twisted_highest: Vec<Vec<Rat>>,
    /// `wv[m][p]`: the first `p` run reflections applied to the extremal
    /// vector of module `m`.
    wv: Vec<Vec<Vec<Rat>>>,
    /// Measured normalization constants of the recursion, `p = 1..d`.
    c: Vec<Rat>,
    /// Matrices of the fixed representative of `s`, per module.
    s_rep: Vec<Matrix<Rat>>,
    /// Grading key separating the reductive factor from the nilradical:
    /// zero on fixed-block root shifts, strictly positive on run roots.
    grade: Vec<Vec<Rat>>,
    /// Second grading, strictly positive on every adapted positive; orders
    /// each module basis for the triangular splitting of the `z` factor.
    psi: Vec<Vec<Rat>>,
    /// Designated faithful module for reading coordinates at each root.
    module_of_root: Vec<usize>,
    /// Integer change of basis expressing each standard fundamental weight
    /// over the extremal weights read off the designated diagonal entries.
    weight_change: Vec<Vec<i64>>,
}

/// The three factor words of a transversal-cell point, plus the raw
/// coordinates they were built from (aligned with the context's root lists).
#[derive(Clone, Debug, PartialEq)]
pub struct SliceFactorization<S> {
    /// Recursion coordinates `t₁..t_d`.
    pub t: Vec<S>,
    /// `n = X_{β_d}(t_d)…X_{β₁}(t₁)`.
    pub n: GroupElement<S>,
    /// Word over `ns_roots` in run order.
    pub ns: GroupElement<S>,
    /// Word in the reductive factor: lowered fixed-block roots, then a torus
    /// factor, then raised fixed-block roots.
    pub z: GroupElement<S>,
    /// Coordinates of `ns`, aligned with `ns_roots`.
    pub ns_params: Vec<S>,
    /// Coordinates of the lowering factors of `z`, aligned with
    /// `levi_positive`.
    pub z_lower: Vec<S>,
    /// Entries of the torus factor of `z`.
    pub torus_entries: Vec<S>,
    /// Coordinates of the raising factors of `z`, aligned with
    /// `levi_positive`.
    pub z_upper: Vec<S>,
}

fn unit_vec(rank: usize, j: usize) -> Vec<i64> {
    let mut e = vec![0i64; rank];
    e[j] = 1;
    e
}

fn to_rat_vec(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&x| rat_int(x)).collect()
}

fn first_nonzero(m: &Matrix<Rat>) -> (usize, usize) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if !m[(i, j)].is_zero() {
                return (i, j);
            }
        }
    }
    panic!("requested the leading entry of a zero matrix");
}

impl<'a> SliceContext<'a> {
    pub fn new(
        sys: &'a RootSystem,
        ctx: &'a RepContext,
        s_word: &[usize],
        seed: u64,
    ) -> Result<Self> {
        let s = sys.weyl_from_word(s_word);
        let decomposition = carter_decompose(sys, &s, seed)?;
        let spectral = invariant_subspaces(sys, &s, &decomposition, seed)?;
        let positive_system = associated_positive_system(sys, &spectral)?;
        let ordering = build_associated_ordering(sys, &decomposition, &positive_system, &s)?;

        let sequence = ordering.base.sequence.clone();
        let total = sequence.len();
        let d = ordering.markers.fixed_tail.0;
        let nilradical: Vec<usize> = sequence[..d].to_vec();
        let levi_positive: Vec<usize> = sequence[d..].to_vec();

        // The tail carries exactly the roots fixed by `s`, and those roots
        // are fixed pointwise, so the reductive block is `s`-stable.
        for &r in &levi_positive {
            assert_eq!(
                s.mat.apply(sys.root(r)),
                sys.root(r),
                "the trailing block must consist of fixed roots"
            );
        }
        let fixed_set: BTreeSet<usize> = positive_system.fixed_positive().into_iter().collect();
        assert_eq!(
            levi_positive.iter().copied().collect::<BTreeSet<_>>(),
            fixed_set,
            "the trailing block must exhaust the fixed positives"
        );

        let ns_roots: Vec<usize> = nilradical
            .iter()
            .copied()
            .filter(|&r| {
                let img = sys
                    .root_index(&s.mat.apply(sys.root(r)))
                    .expect("Weyl images of roots are roots");
                !positive_system.is_positive(img)
            })
            .collect();
        // Both the run and its inverted part are closed under root addition,
        // so the corresponding unipotent sets really are subgroups.
        for closed in [&nilradical, &ns_roots] {
            let set: BTreeSet<usize> = closed.iter().copied().collect();
            for &a in closed {
                for &b in closed {
                    let sum: Vec<i64> = sys
                        .root(a)
                        .iter()
                        .zip(sys.root(b))
                        .map(|(x, y)| x + y)
                        .collect();
                    if let Some(r) = sys.root_index(&sum) {
                        assert!(set.contains(&r), "coordinate root sets must be closed");
                    }
                }
            }
        }

        // Word mapping the standard positive system onto the adapted one:
        // repeatedly reflect away a standard simple root whose negative is
        // still on the adapted positive side.
        let mut carried: BTreeSet<usize> = positive_system.positive_roots.iter().copied().collect();
        let mut chamber_word = Vec::new();
        for _ in 0..=sys.num_positive() {
            let step = (0..sys.rank()).find(|&i| {
                let simple = sys
                    .root_index(&unit_vec(sys.rank(), i))
                    .expect("simple roots are roots");
                carried.contains(&sys.neg_index(simple))
            });
            match step {
                Some(i) => {
                    let refl = sys.simple_reflection(i);
                    carried = carried
                        .iter()
                        .map(|&r| {
                            sys.root_index(&refl.mat.apply(sys.root(r)))
                                .expect("reflections permute roots")
                        })
                        .collect();
                    chamber_word.push(i);
                }
                None => break,
            }
        }
        assert!(
            carried.iter().all(|&r| sys.is_positive(r)),
            "the chamber word must land on the standard positives"
        );
        let chamber = sys.weyl_from_word(&chamber_word);

        // Match each adapted simple letter with the standard fundamental
        // module whose weight it moves: letter `l` acts on the module `j`
        // with `chamber(alpha_j)` equal to the letter's simple root.
        let simples = ordering.base.simples.clone();
        let mut module_of_letter = vec![usize::MAX; simples.len()];
        for (l, &root) in simples.iter().enumerate() {
            let j = (0..sys.rank())
                .find(|&j| {
                    sys.root_index(&chamber.mat.apply(&unit_vec(sys.rank(), j))) == Some(root)
                })
                .expect("adapted simples are images of standard simples");
            module_of_letter[l] = j;
        }

        let modules = &ctx.modules;
        let chamber_rep = GroupElement::<Rat>::weyl_word(&chamber_word);
        let mut twisted_highest = Vec::with_capacity(modules.len());
        for module in modules.iter() {
            let mat = chamber_rep.evaluate(module)?;
            let mut top = vec![Rat::zero(); module.dim];
            top[module.highest()] = Rat::one();
            let hv = mat.mul_vec(&top);
            assert_eq!(
                module.contravariant_pair(&hv, &hv),
                Rat::one(),
                "extremal vectors keep unit pairing"
            );
            twisted_highest.push(hv);
        }

        let mut wv: Vec<Vec<Vec<Rat>>> = Vec::with_capacity(modules.len());
        for (m, module) in modules.iter().enumerate() {
            let mut chain = vec![twisted_highest[m].clone()];
            for p in 1..=d {
                let refl =
                    GroupElement::<Rat>::reflection_rep(sys, nilradical[p - 1]).evaluate(module)?;
                let next = refl.mul_vec(&chain[p - 1]);
                chain.push(next);
            }
            wv.push(chain);
        }

        let mut c = Vec::with_capacity(d);
        for p in 1..=d {
            let beta = nilradical[p - 1];
            let m = module_of_letter[ordering.base.reduced_word[p - 1]];
            let u = &wv[m][p - 1];
            let xv = modules[m].root_vectors[beta].mul_vec(&wv[m][p]);
            let t = u
                .iter()
                .position(|x| !x.is_zero())
                .expect("reflected extremal vectors are nonzero");
            let kappa = xv[t].clone() / u[t].clone();
            assert!(!kappa.is_zero(), "lowered vectors map back onto raised ones");
            let expected: Vec<Rat> = u.iter().map(|x| x.clone() * kappa.clone()).collect();
            assert_eq!(xv, expected, "two-dimensional string acts by a scalar");
            c.push(rat_int(1) / kappa);
        }

        let s_element = GroupElement::<Rat>::weyl_word(s_word);
        let mut s_rep = Vec::with_capacity(modules.len());
        for module in modules.iter() {
            s_rep.push(s_element.evaluate(module)?);
        }

        // Grading functional: zero on the fixed block, positive on the run.
        // Project candidates onto the moving subspace of `s` (killing the
        // fixed block automatically) and check run positivity exactly.
        let rank = sys.rank();
        let mut order = 1usize;
        let mut power = s.mat.clone();
        while !power.is_identity() {
            power = power.mul(&s.mat);
            order += 1;
        }
        let mut averaged = Matrix::<Rat>::zeros(rank, rank);
        let mut power = crate::rootsys::IntMat::identity(rank);
        for _ in 0..order {
            averaged = averaged.add(&power.to_rat());
            power = power.mul(&s.mat);
        }
        let fixed_projector = averaged.scale(&(rat_int(1) / rat_int(order as i64)));
        let moving_projector = Matrix::<Rat>::identity(rank).sub(&fixed_projector);
        let rho_adapted: Vec<Rat> = {
            let mut sum = vec![Rat::zero(); rank];
            for &r in &positive_system.positive_roots {
                for (k, x) in sys.root(r).iter().enumerate() {
                    sum[k] = sum[k].clone() + rat_int(*x);
                }
            }
            sum
        };
        let accepts = |v: &[Rat]| -> bool {
            nilradical
                .iter()
                .all(|&r| sys.form_rat(v, &to_rat_vec(sys.root(r))) > Rat::zero())
        };
        let mut phi_vector = moving_projector.mul_vec(&rho_adapted);
        if !accepts(&phi_vector) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x51_1CE);
            let mut span = 4i64;
            loop {
                let w: Vec<Rat> = (0..rank).map(|_| rat_int(rng.gen_range(-span..=span))).collect();
                let v = moving_projector.mul_vec(&w);
                if accepts(&v) {
                    phi_vector = v;
                    break;
                }
                span = (span + 1).min(1 << 20);
            }
        }
        for &r in &levi_positive {
            assert!(
                sys.form_rat(&phi_vector, &to_rat_vec(sys.root(r))).is_zero(),
                "the grading must vanish on the fixed block"
            );
        }
        let phi_simple: Vec<Rat> = (0..rank)
            .map(|j| sys.form_rat(&phi_vector, &to_rat_vec(&unit_vec(rank, j))))
            .collect();
        let psi_simple: Vec<Rat> = (0..rank)
            .map(|j| sys.form_rat(&rho_adapted, &to_rat_vec(&unit_vec(rank, j))))
            .collect();
        for &r in &positive_system.positive_roots {
            assert!(
                sys.form_rat(&rho_adapted, &to_rat_vec(sys.root(r))) > Rat::zero(),
                "the half-sum functional must be positive on adapted positives"
            );
        }
        let key = |weights: &[Rat], monomial: &[usize]| -> Rat {
            let mut acc = Rat::zero();
            for &letter in monomial {
                acc = acc - weights[letter].clone();
            }
            acc
        };
        let mut grade = Vec::with_capacity(modules.len());
        let mut psi = Vec::with_capacity(modules.len());
        for module in modules.iter() {
            grade.push(module.monomials.iter().map(|m| key(&phi_simple, m)).collect());
            psi.push(module.monomials.iter().map(|m| key(&psi_simple, m)).collect());
        }

        // Matrix of `s` on cocharacters; its fixed sublattice parameterizes
        // the torus directions commuting with the class representative.
        let mut cochar = Matrix::<Rat>::zeros(rank, rank);
        for j in 0..rank {
            let simple = sys
                .root_index(&unit_vec(rank, j))
                .expect("simple roots are roots");
            let image = sys
                .root_index(&s.mat.apply(sys.root(simple)))
                .expect("Weyl images of roots are roots");
            for (i, x) in sys.coroot_coords(image).iter().enumerate() {
                cochar[(i, j)] = rat_int(*x);
            }
        }
        let moved = cochar.sub(&Matrix::identity(rank));
        let fixed_cocharacters: Vec<Vec<i64>> = integer_kernel(&moved)
            .into_iter()
            .map(|v| {
                v.iter()
                    .map(|b: &BigInt| b.to_i64().expect("small kernel coordinates"))
                    .collect()
            })
            .collect();

        let mut module_of_root = vec![usize::MAX; sys.num_roots()];
        for r in 0..sys.num_roots() {
            let support = sys
                .root(r)
                .iter()
                .position(|&x| x != 0)
                .expect("roots are nonzero");
            let comp = sys
                .components()
                .iter()
                .position(|c| c.contains(&support))
                .expect("every simple index lies in a component");
            module_of_root[r] = ctx.faithful[comp];
        }

        // Express each standard fundamental weight over the extremal weights
        // `chamber(omega_b)`; the recovered torus diagonal lives on the
        // latter basis, the torus factor's entries on the former.
        let cartan = sys.cartan();
        let cartan_rat = Matrix::from_rows(
            (0..rank)
                .map(|k| (0..rank).map(|t| rat_int(cartan[k][t])).collect())
                .collect(),
        );
        let cartan_inv = cartan_rat.inverse().expect("Cartan matrices are invertible");
        let chamber_rat = chamber.mat.to_rat();
        let mut pair_matrix = Matrix::<Rat>::zeros(rank, rank);
        for j in 0..rank {
            let coords = cartan_inv.mul_vec(&to_rat_vec(&unit_vec(rank, j)));
            let moved = chamber_rat.mul_vec(&coords);
            let pairings = cartan_rat.mul_vec(&moved);
            for (k, x) in pairings.iter().enumerate() {
                pair_matrix[(k, j)] = x.clone();
            }
        }
        let pair_inv = pair_matrix.inverse().expect("extremal weights form a basis");
        let mut weight_change = vec![vec![0i64; rank]; rank];
        for i in 0..rank {
            let coords = pair_inv.mul_vec(&to_rat_vec(&unit_vec(rank, i)));
            for (b, x) in coords.iter().enumerate() {
                assert!(x.is_integer(), "the change of weight basis is integral");
                weight_change[b][i] = x.to_integer().to_i64().expect("small basis coordinates");
            }
        }

        assert_eq!(total, sys.num_positive());
        Ok(SliceContext {
            sys,
            ctx,
            s,
            s_word: s_word.to_vec(),
            decomposition,
            positive_system,
            ordering,
            d,
            nilradical,
            ns_roots,
            levi_positive,
            fixed_cocharacters,
            chamber_word,
            module_of_letter,
            twisted_highest,
            wv,
            c,
            s_rep,
            grade,
            psi,
            module_of_root,
            weight_change,
        })
    }

    /// The fixed word used for `s⁻¹` in assemblies and factorizations.
    pub fn s_inverse_word<S: Scalar>(&self) -> GroupElement<S> {
        GroupElement::<S>::weyl_word(&self.s_word)
            .inverse(self.sys)
            .expect("reflection words invert without torus factors")
    }

    /// The measured recursion constants with their provenance, one per run
    /// position: `(module, root, value)`, where `module` is the fundamental
    /// module the pairing ratio is read in and `root` is the run root whose
    /// reflection representative and root vector the constant depends on.
    pub fn measured_constants(&self) -> Vec<(usize, usize, Rat)> {
        (0..self.d)
            .map(|p| {
                let m = self.module_of_letter[self.ordering.base.reduced_word[p]];
                (m, self.nilradical[p], self.c[p].clone())
            })
            .collect()
    }

    /// Core conjugation sweep: at step `p` evaluate the pairing ratio of the
    /// current point, then conjugate the point by the corresponding
    /// one-parameter factor.  Returns the recorded coordinates, the final
    /// per-module matrices (the fully conjugated point) and the final word.
    fn conjugation_chain<S: Scalar>(
        &self,
        g: &GroupElement<S>,
    ) -> Result<(Vec<S>, Vec<Matrix<S>>, GroupElement<S>)> {
        let modules = &self.ctx.modules;
        let mut mats: Vec<Matrix<S>> = Vec::with_capacity(modules.len());
        for module in modules.iter() {
            mats.push(g.evaluate(module)?);
        }
        let mut front: Vec<GroupElement<S>> = Vec::with_capacity(self.d);
        let mut back: Vec<GroupElement<S>> = Vec::with_capacity(self.d);
        let mut coords = Vec::with_capacity(self.d);
        for p in 1..=self.d {
            let beta = self.nilradical[p - 1];
            let m = self.module_of_letter[self.ordering.base.reduced_word[p - 1]];
            let twisted = self.s_rep[m].map(S::from_rat).mul(&mats[m]);
            let prev: Vec<S> = self.wv[m][p - 1].iter().map(S::from_rat).collect();
            let cur: Vec<S> = self.wv[m][p].iter().map(S::from_rat).collect();
            let num = self.ctx.modules[m].contravariant_pair(&prev, &twisted.mul_vec(&cur));
            let den = self.ctx.modules[m].contravariant_pair(&prev, &twisted.mul_vec(&prev));
            let inv = den.try_inv().ok_or_else(|| Error::ZeroDenominator {
                context: format!("transversal recursion step {p}"),
            })?;
            let t = S::from_rat(&self.c[p - 1]) * num * inv;
            let twist = GroupElement::one_param(beta, t.clone());
            let untwist = GroupElement::one_param(beta, -t.clone());
            for (mm, module) in modules.iter().enumerate() {
                let e = twist.evaluate(module)?;
                let e_inv = untwist.evaluate(module)?;
                mats[mm] = e.mul(&mats[mm]).mul(&e_inv);
            }
            front.push(twist);
            back.push(untwist);
            coords.push(t);
        }
        let mut word = GroupElement::identity();
        for f in front.iter().rev() {
            word = word.mul(f);
        }
        word = word.mul(g);
        for b in back.iter() {
            word = word.mul(b);
        }
        Ok((coords, mats, word))
    }

    /// Recover the coordinates `t₁..t_d` of the conjugating factor of a
    /// cell point, together with the factor `n = X_{β_d}(t_d)…X_{β₁}(t₁)`.
    pub fn t_recursion<S: Scalar>(&self, g: &GroupElement<S>) -> Result<(Vec<S>, GroupElement<S>)> {
        let (t, _, _) = self.conjugation_chain(g)?;
        let mut n = GroupElement::identity();
        for p in (1..=self.d).rev() {
            n = n.mul(&GroupElement::one_param(self.nilradical[p - 1], t[p - 1].clone()));
        }
        Ok((t, n))
    }

    /// The projection's point transform: the composite of the step
    /// conjugations, each evaluated at the partially transformed point.
    /// Applying a function to the result evaluates the projected function.
    pub fn pi_transform<S: Scalar>(&self, g: &GroupElement<S>) -> Result<GroupElement<S>> {
        let (_, _, word) = self.conjugation_chain(g)?;
        Ok(word)
    }

    /// Evaluate the projection of `f` at `g`: each step's coefficient is
    /// computed once per point, so the composite costs `d` conjugations.
    pub fn zhelobenko_apply<S: Scalar>(
        &self,
        f: impl Fn(&GroupElement<S>) -> Result<S>,
        g: &GroupElement<S>,
    ) -> Result<S> {
        let word = self.pi_transform(g)?;
        f(&word)
    }

    /// Strip a unipotent word over `roots` (in the given order) from the
    /// per-module matrices by reading each leading coefficient in the
    /// designated faithful module.  The matrices are reduced in place and
    /// must finish at the identity.
    fn peel_unipotent<S: Scalar>(
        &self,
        mats: &mut [Matrix<S>],
        roots: &[usize],
        stage: &str,
    ) -> Result<Vec<S>> {
        let modules = &self.ctx.modules;
        let mut coords = Vec::with_capacity(roots.len());
        for &root in roots {
            let m = self.module_of_root[root];
            let generator = &modules[m].root_vectors[root];
            let (i, j) = first_nonzero(generator);
            let lead = S::from_rat(&generator[(i, j)])
                .try_inv()
                .expect("leading entries are nonzero");
            let a = mats[m][(i, j)].clone() * lead;
            let strip = GroupElement::one_param(root, -a.clone());
            for (mm, module) in modules.iter().enumerate() {
                mats[mm] = strip.evaluate(module)?.mul(&mats[mm]);
            }
            coords.push(a);
        }
        if mats.iter().any(|m| !m.is_identity()) {
            return Err(Error::invalid(format!(
                "the point is outside the factorization domain: {stage} does not close"
            )));
        }
        Ok(coords)
    }

    /// Factor a cell point as `n⁻¹·n_s·z·s⁻¹·n`, all three factors as words.
    pub fn slice_factorize<S: Scalar>(&self, g: &GroupElement<S>) -> Result<SliceFactorization<S>> {
        let modules = &self.ctx.modules;
        let (t, conjugated, _) = self.conjugation_chain(g)?;
        let mut n = GroupElement::identity();
        for p in (1..=self.d).rev() {
            n = n.mul(&GroupElement::one_param(self.nilradical[p - 1], t[p - 1].clone()));
        }

        // The conjugated point times the fixed representative of `s` is a
        // unipotent factor over the run times a block-preserving factor:
        // the grading separates them.
        let mut products: Vec<Matrix<S>> = Vec::with_capacity(modules.len());
        let mut blocks: Vec<Matrix<S>> = Vec::with_capacity(modules.len());
        let mut unipotents: Vec<Matrix<S>> = Vec::with_capacity(modules.len());
        for (m, module) in modules.iter().enumerate() {
            let y = conjugated[m].mul(&self.s_rep[m].map(S::from_rat));
            let dim = module.dim;
            let mut z = Matrix::<S>::zeros(dim, dim);
            for r in 0..dim {
                for col in 0..dim {
                    if self.grade[m][r] == self.grade[m][col] {
                        z[(r, col)] = y[(r, col)].clone();
                    }
                }
            }
            let z_inv = z.inverse().ok_or_else(|| Error::ZeroDenominator {
                context: "separating the block-preserving factor".into(),
            })?;
            unipotents.push(y.mul(&z_inv));
            blocks.push(z);
            products.push(y);
        }

        // Unipotent coordinates over the whole run; roots moved to the
        // positive side by `s` must carry coordinate zero.
        let run_coords = self.peel_unipotent(&mut unipotents, &self.nilradical, "the run factor")?;
        let ns_set: BTreeSet<usize> = self.ns_roots.iter().copied().collect();
        let mut ns = GroupElement::identity();
        let mut ns_params = Vec::with_capacity(self.ns_roots.len());
        for (p, a) in run_coords.into_iter().enumerate() {
            let root = self.nilradical[p];
            if ns_set.contains(&root) {
                ns = ns.mul(&GroupElement::one_param(root, a.clone()));
                ns_params.push(a);
            } else if !a.is_zero() {
                return Err(Error::invalid(
                    "the point is outside the factorization domain: \
                     a coordinate survives on a root kept positive by s",
                ));
            }
        }

        // Torus entries: the extremal diagonal of the block factor gives the
        // character on the extremal weights; change basis to the standard
        // fundamental weights.
        let rank = self.sys.rank();
        let mut extremal = Vec::with_capacity(rank);
        for b in 0..rank {
            let hv: Vec<S> = self.twisted_highest[b].iter().map(S::from_rat).collect();
            let image = blocks[b].mul_vec(&hv);
            let axis = hv
                .iter()
                .position(|x| !x.is_zero())
                .expect("extremal vectors are nonzero");
            let tau = image[axis].clone()
                * hv[axis].try_inv().expect("extremal coordinates are units");
            if tau.is_zero() {
                return Err(Error::ZeroDenominator {
                    context: "reading the torus diagonal".into(),
                });
            }
            extremal.push(tau);
        }
        let mut torus_entries = Vec::with_capacity(rank);
        for j in 0..rank {
            let mut value = S::one();
            for (b, tau) in extremal.iter().enumerate() {
                let k = self.weight_change[b][j];
                if k != 0 {
                    value = value
                        * tau.try_pow(k).ok_or_else(|| Error::ZeroDenominator {
                            context: "inverting a torus diagonal entry".into(),
                        })?;
                }
            }
            torus_entries.push(value);
        }

        // Triangular splitting of the block factor: sort each module basis
        // by descending second grade, split off unit-triangular factors on
        // both sides of the torus diagonal, and peel them into words over
        // the fixed block.
        let mut lowers: Vec<Matrix<S>> = Vec::with_capacity(modules.len());
        let mut uppers: Vec<Matrix<S>> = Vec::with_capacity(modules.len());
        for (m, module) in modules.iter().enumerate() {
            let dim = module.dim;
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by(|&a, &b| self.psi[m][b].cmp(&self.psi[m][a]).then(a.cmp(&b)));
            let mut permuted = Matrix::<S>::zeros(dim, dim);
            for r in 0..dim {
                for col in 0..dim {
                    permuted[(r, col)] = blocks[m][(order[r], order[col])].clone();
                }
            }
            let (l, _, u) = permuted.ldu().ok_or_else(|| Error::ZeroDenominator {
                context: "triangular splitting of the block factor".into(),
            })?;
            let mut lower = Matrix::<S>::zeros(dim, dim);
            let mut upper = Matrix::<S>::zeros(dim, dim);
            for r in 0..dim {
                for col in 0..dim {
                    lower[(order[r], order[col])] = l[(r, col)].clone();
                    upper[(order[r], order[col])] = u[(r, col)].clone();
                }
            }
            lowers.push(lower);
            uppers.push(upper);
        }
        let lowered: Vec<usize> = self
            .levi_positive
            .iter()
            .map(|&r| self.sys.neg_index(r))
            .collect();
        let z_lower = self.peel_unipotent(&mut lowers, &lowered, "the lowering block factor")?;
        let z_upper = self.peel_unipotent(&mut uppers, &self.levi_positive, "the raising block factor")?;

        let mut z = GroupElement::identity();
        for (k, a) in z_lower.iter().enumerate() {
            z = z.mul(&GroupElement::one_param(lowered[k], a.clone()));
        }
        z = z.mul(&GroupElement::torus(torus_entries.clone()));
        for (k, a) in z_upper.iter().enumerate() {
            z = z.mul(&GroupElement::one_param(self.levi_positive[k], a.clone()));
        }

        // Certificate: the two recovered words must reproduce the
        // conjugated point in every fundamental module.
        let recombined = ns.mul(&z);
        for (m, module) in modules.iter().enumerate() {
            if recombined.evaluate(module)? != products[m] {
                return Err(Error::invalid(
                    "the point is outside the factorization domain: \
                     the recovered factors do not recombine",
                ));
            }
        }

        Ok(SliceFactorization {
            t,
            n,
            ns,
            z,
            ns_params,
            z_lower,
            torus_entries,
            z_upper,
        })
    }

    /// Rebuild the group word `n⁻¹·n_s·z·s⁻¹·n` of a factorization.
    pub fn assemble<S: Scalar>(&self, f: &SliceFactorization<S>) -> Result<GroupElement<S>> {
        let n_inv = f.n.inverse(self.sys)?;
        Ok(n_inv
            .mul(&f.ns)
            .mul(&f.z)
            .mul(&self.s_inverse_word())
            .mul(&f.n))
    }

    /// Draw a random cell point with exact rational coordinates; the
    /// returned factorization is the ground truth for round trips.
    pub fn sample_factorization(&self, rng: &mut impl Rng) -> SliceFactorization<Rat> {
        let rat = |rng: &mut dyn rand::RngCore| {
            crate::scalar::rat(
                rand::Rng::gen_range(&mut *rng, -6..=6),
                rand::Rng::gen_range(&mut *rng, 1..=4),
            )
        };
        let nonzero = |rng: &mut dyn rand::RngCore| loop {
            let x = crate::scalar::rat(
                rand::Rng::gen_range(&mut *rng, -6..=6),
                rand::Rng::gen_range(&mut *rng, 1..=4),
            );
            if !x.is_zero() {
                break x;
            }
        };
        let t: Vec<Rat> = (0..self.d).map(|_| rat(rng)).collect();
        let mut n = GroupElement::identity();
        for p in (1..=self.d).rev() {
            n = n.mul(&GroupElement::one_param(self.nilradical[p - 1], t[p - 1].clone()));
        }
        let ns_params: Vec<Rat> = (0..self.ns_roots.len()).map(|_| rat(rng)).collect();
        let mut ns = GroupElement::identity();
        for (k, a) in ns_params.iter().enumerate() {
            ns = ns.mul(&GroupElement::one_param(self.ns_roots[k], a.clone()));
        }
        let z_lower: Vec<Rat> = (0..self.levi_positive.len()).map(|_| rat(rng)).collect();
        let z_upper: Vec<Rat> = (0..self.levi_positive.len()).map(|_| rat(rng)).collect();
        let mut torus_entries = vec![Rat::one(); self.sys.rank()];
        for kappa in &self.fixed_cocharacters {
            let u = nonzero(rng);
            for (j, &e) in kappa.iter().enumerate() {
                torus_entries[j] = torus_entries[j].clone()
                    * u.try_pow(e).expect("nonzero parameters have integer powers");
            }
        }
        let mut z = GroupElement::identity();
        for (k, a) in z_lower.iter().enumerate() {
            z = z.mul(&GroupElement::one_param(
                self.sys.neg_index(self.levi_positive[k]),
                a.clone(),
            ));
        }
        z = z.mul(&GroupElement::torus(torus_entries.clone()));
        for (k, a) in z_upper.iter().enumerate() {
            z = z.mul(&GroupElement::one_param(self.levi_positive[k], a.clone()));
        }
        SliceFactorization {
            t,
            n,
            ns,
            z,
            ns_params,
            z_lower,
            torus_entries,
            z_upper,
        }
    }
}
