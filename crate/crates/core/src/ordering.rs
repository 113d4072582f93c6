//! Normal orderings of positive systems and the block-structured ordering
//! adapted to a two-involution factorization.
//!
//! A *normal ordering* of a positive system lists its roots so that whenever
//! the sum of two listed roots is again a root, the sum appears strictly
//! between the two summands.  Normal orderings are exactly the sequences
//! `beta_j = s_{i_1} ... s_{i_{j-1}}(eta_{i_j})` arising from reduced words of
//! the longest element with respect to the indecomposable roots of the system,
//! and any two of them are connected by *elementary transpositions*: reversals
//! of short contiguous segments that form a rank-two subsystem pattern.
//!
//! On top of this the module builds the ordering adapted to a factorization
//! `s = s1 * s2` of a Weyl element into two involutions, each a product of
//! reflections in mutually orthogonal roots.  That ordering splits the
//! positive system into five consecutive regions — the roots inverted by the
//! first involution, a middle band, the image of the first block under the
//! second involution, the roots inverted by the second involution, and the
//! roots fixed by `s` — with the reflection roots of the two involutions
//! pinned near the two ends of a distinguished *gamma segment* whose length
//! is forced by a counting identity.  The search for such an ordering is an
//! exhaustive depth-first scan over reduced words in lexicographic generator
//! order with incremental pruning; the first hit is returned, which makes the
//! output deterministic.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::carter::{CarterDecomposition, PositiveSystemS};
use crate::error::{Error, Result};
use crate::rootsys::{IntMat, RootSystem, WeylElement};

/// A normal ordering of a positive system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NormalOrdering {
    /// Root indices in order; a permutation of the underlying positive set.
    pub sequence: Vec<usize>,
    /// The reduced word producing `sequence`, as indices into `simples`.
    pub reduced_word: Vec<usize>,
    /// Root indices of the indecomposable roots of the positive system.
    pub simples: Vec<usize>,
}

/// Indecomposable roots of a positive system: those positives that are not a
/// sum of two other positives.  For a positive system of a semisimple system
/// their number equals the rank.
pub fn twisted_simple_roots(sys: &RootSystem, positives: &[usize]) -> Vec<usize> {
    let pos_set: BTreeSet<usize> = positives.iter().copied().collect();
    let mut simples = Vec::new();
    for &alpha in positives {
        let a = sys.root(alpha);
        let decomposable = positives.iter().any(|&beta| {
            if beta == alpha {
                return false;
            }
            let b = sys.root(beta);
            let diff: Vec<i64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            sys.root_index(&diff).map(|d| pos_set.contains(&d)).unwrap_or(false)
        });
        if !decomposable {
            simples.push(alpha);
        }
    }
    assert_eq!(
        simples.len(),
        sys.rank(),
        "a positive system of a semisimple root system has rank-many indecomposables"
    );
    simples
}

/// Build the normal ordering attached to a reduced word of the longest
/// element of the positive system `positives`.  The word is given as indices
/// into the indecomposable-root list of the system (for the standard positive
/// system this is the usual simple-root numbering, zero-based).
///
/// Errors with [`Error::NotReduced`] when the word revisits an inversion and
/// with [`Error::NotLongest`] when it is reduced but does not exhaust the
/// positive system.
pub fn ordering_from_reduced_word(
    sys: &RootSystem,
    positives: &[usize],
    word: &[usize],
) -> Result<NormalOrdering> {
    let simples = twisted_simple_roots(sys, positives);
    let pos_set: BTreeSet<usize> = positives.iter().copied().collect();
    let refl: Vec<IntMat> = simples.iter().map(|&i| sys.reflection_matrix(i)).collect();

    let mut u = IntMat::identity(sys.rank());
    let mut sequence = Vec::with_capacity(word.len());
    for (j, &letter) in word.iter().enumerate() {
        if letter >= simples.len() {
            return Err(Error::invalid(format!(
                "word letter {letter} at position {j} out of range for {} generators",
                simples.len()
            )));
        }
        let beta = u.apply(sys.root(simples[letter]));
        let beta_idx = sys.root_index(&beta).expect("Weyl image of a root is a root");
        if !pos_set.contains(&beta_idx) {
            // The word is not reduced: report the true length of the product.
            let mut full = IntMat::identity(sys.rank());
            for &l in word {
                full = full.mul(&refl[l]);
            }
            let actual = sys.inversion_set_in(&full, positives).len();
            return Err(Error::NotReduced { word: word.to_vec(), actual });
        }
        sequence.push(beta_idx);
        u = u.mul(&refl[letter]);
    }
    if sequence.len() < positives.len() {
        return Err(Error::NotLongest);
    }
    Ok(NormalOrdering { sequence, reduced_word: word.to_vec(), simples })
}

/// Recover the reduced word that generates a given root sequence, if one
/// exists.  Inverse of [`ordering_from_reduced_word`].
pub fn word_from_sequence(
    sys: &RootSystem,
    positives: &[usize],
    sequence: &[usize],
) -> Result<NormalOrdering> {
    let simples = twisted_simple_roots(sys, positives);
    let refl: Vec<IntMat> = simples.iter().map(|&i| sys.reflection_matrix(i)).collect();
    let mut u = IntMat::identity(sys.rank());
    let mut word = Vec::with_capacity(sequence.len());
    for &beta_idx in sequence {
        // The next reflection is u^{-1}(beta), which must be indecomposable.
        let u_inv = invert_weyl_matrix(sys, &u);
        let eta = u_inv.apply(sys.root(beta_idx));
        let eta_idx = sys.root_index(&eta).ok_or_else(|| {
            Error::invalid("sequence entry does not pull back to a root".to_string())
        })?;
        let letter = simples.iter().position(|&s| s == eta_idx).ok_or_else(|| {
            Error::invalid("sequence is not generated by any reduced word".to_string())
        })?;
        word.push(letter);
        u = u.mul(&refl[letter]);
    }
    Ok(NormalOrdering { sequence: sequence.to_vec(), reduced_word: word, simples })
}

fn invert_weyl_matrix(sys: &RootSystem, m: &IntMat) -> IntMat {
    // Weyl matrices have finite order, so repeated multiplication reaches the
    // inverse; cheaper and exact compared to a rational inverse.
    let mut acc = m.clone();
    let mut prev = IntMat::identity(sys.rank());
    let mut guard = 0usize;
    while !acc.is_identity() {
        prev = acc.clone();
        acc = acc.mul(m);
        guard += 1;
        assert!(guard <= 10_000, "runaway matrix order");
    }
    prev
}

/// Check the defining property of a normal ordering: for every pair of listed
/// roots whose sum is again a listed root, the sum lies strictly between
/// them.  Returns the first violating triple `(alpha, beta, alpha+beta)` as
/// root indices.
pub fn validate_normal(
    sys: &RootSystem,
    sequence: &[usize],
) -> std::result::Result<(), (usize, usize, usize)> {
    let position: BTreeMap<usize, usize> =
        sequence.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    assert_eq!(position.len(), sequence.len(), "sequence must not repeat roots");
    for (i, &a) in sequence.iter().enumerate() {
        for &b in sequence.iter().skip(i + 1) {
            let sum: Vec<i64> =
                sys.root(a).iter().zip(sys.root(b)).map(|(x, y)| x + y).collect();
            if let Some(sum_idx) = sys.root_index(&sum) {
                if let Some(&k) = position.get(&sum_idx) {
                    let j = position[&b];
                    if !(i < k && k < j) {
                        return Err((a, b, sum_idx));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Enumerate every normal ordering of the positive system by exhausting all
/// reduced words of its longest element.  Exponential in rank; intended for
/// the small systems this crate supports.
pub fn all_normal_orderings(sys: &RootSystem, positives: &[usize]) -> Vec<NormalOrdering> {
    let simples = twisted_simple_roots(sys, positives);
    let pos_set: BTreeSet<usize> = positives.iter().copied().collect();
    let refl: Vec<IntMat> = simples.iter().map(|&i| sys.reflection_matrix(i)).collect();
    let mut out = Vec::new();
    let mut seq = Vec::new();
    let mut word = Vec::new();
    fn rec(
        sys: &RootSystem,
        simples: &[usize],
        refl: &[IntMat],
        pos_set: &BTreeSet<usize>,
        u: IntMat,
        depth: usize,
        total: usize,
        seq: &mut Vec<usize>,
        word: &mut Vec<usize>,
        out: &mut Vec<NormalOrdering>,
    ) {
        if depth == total {
            out.push(NormalOrdering {
                sequence: seq.clone(),
                reduced_word: word.clone(),
                simples: simples.to_vec(),
            });
            return;
        }
        for (gi, &srt) in simples.iter().enumerate() {
            let beta = u.apply(sys.root(srt));
            let beta_idx = sys.root_index(&beta).expect("Weyl image of a root is a root");
            if !pos_set.contains(&beta_idx) {
                continue;
            }
            seq.push(beta_idx);
            word.push(gi);
            rec(sys, simples, refl, pos_set, u.mul(&refl[gi]), depth + 1, total, seq, word, out);
            seq.pop();
            word.pop();
        }
    }
    rec(
        sys,
        &simples,
        &refl,
        &pos_set,
        IntMat::identity(sys.rank()),
        0,
        positives.len(),
        &mut seq,
        &mut word,
        &mut out,
    );
    out
}

/// One elementary transposition applicable to a normal ordering: the
/// half-open segment of the sequence to reverse, together with the ordering
/// that results.
#[derive(Clone, Debug, Serialize)]
pub struct Transposition {
    pub start: usize,
    pub end: usize,
    pub result: NormalOrdering,
}

/// List every elementary transposition applicable to a normal ordering.
///
/// A transposition reverses a contiguous segment whose endpoints `x`, `y`
/// satisfy `x - y` not a root and whose interior is exactly the set of
/// positive combinations of `x` and `y` in one of the rank-two patterns:
/// `[x, y]` (orthogonal pair, `x + y` not a root), `[x, x+y, y]`,
/// `[x, x+y, x+2y, y]`, or `[x, x+y, 2x+3y, x+2y, x+3y, y]`, read in either
/// direction.  Each reversal yields another normal ordering; this is asserted
/// and its reduced word recomputed.
pub fn elementary_transpositions(
    sys: &RootSystem,
    positives: &[usize],
    ordering: &NormalOrdering,
) -> Vec<Transposition> {
    let seq = &ordering.sequence;
    let combo = |a: usize, b: usize, ca: i64, cb: i64| -> Option<usize> {
        let v: Vec<i64> = sys
            .root(a)
            .iter()
            .zip(sys.root(b))
            .map(|(x, y)| ca * x + cb * y)
            .collect();
        sys.root_index(&v)
    };
    // Segment patterns as (length, interior as (coeff_x, coeff_y) pairs).
    let patterns: [(usize, &[(i64, i64)]); 4] = [
        (2, &[]),
        (3, &[(1, 1)]),
        (4, &[(1, 1), (1, 2)]),
        (6, &[(1, 1), (2, 3), (1, 2), (1, 3)]),
    ];
    let matches_pattern = |slice: &[usize], interior: &[(i64, i64)]| -> bool {
        let x = slice[0];
        let y = slice[slice.len() - 1];
        if combo(x, y, 1, -1).is_some() {
            return false; // difference of the endpoints must not be a root
        }
        if interior.is_empty() && combo(x, y, 1, 1).is_some() {
            return false; // a length-2 segment requires an orthogonal-type pair
        }
        interior.iter().enumerate().all(|(k, &(cx, cy))| {
            combo(x, y, cx, cy).map(|r| r == slice[k + 1]).unwrap_or(false)
        })
    };
    let mut out = Vec::new();
    for (len, interior) in patterns {
        if len > seq.len() {
            continue;
        }
        for start in 0..=(seq.len() - len) {
            let slice = &seq[start..start + len];
            let rev: Vec<usize> = slice.iter().rev().copied().collect();
            if matches_pattern(slice, interior) || matches_pattern(&rev, interior) {
                let mut new_seq = seq.clone();
                new_seq[start..start + len].reverse();
                assert!(
                    validate_normal(sys, &new_seq).is_ok(),
                    "an elementary transposition must preserve normality"
                );
                let result = word_from_sequence(sys, positives, &new_seq)
                    .expect("a normal ordering comes from a reduced word");
                out.push(Transposition { start, end: start + len, result });
            }
        }
    }
    out
}

/// A positive system arranged on a circle: the sequence followed by its
/// negatives.  Root `a` precedes root `b` when walking clockwise from `a`
/// reaches `b` in fewer than half a turn.
#[derive(Clone, Debug, Serialize)]
pub struct CircularOrdering {
    /// Root indices around the circle: the normal ordering, then the
    /// negatives of its entries in the same order.
    pub circle: Vec<usize>,
    #[serde(skip)]
    position: BTreeMap<usize, usize>,
}

impl CircularOrdering {
    pub fn new(sys: &RootSystem, ordering: &NormalOrdering) -> Self {
        let mut circle = ordering.sequence.clone();
        for &r in &ordering.sequence {
            circle.push(sys.neg_index(r));
        }
        let position = circle.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        CircularOrdering { circle, position }
    }

    /// Strict precedence: `a` comes before `b` within one half-turn.
    /// Antisymmetric on pairs that are not equal or opposite.
    pub fn less(&self, a: usize, b: usize) -> bool {
        let n = self.circle.len();
        let pa = self.position[&a];
        let pb = self.position[&b];
        let d = (pb + n - pa) % n;
        d > 0 && d < n / 2
    }

    /// The arc from `a` to `b` inclusive, provided it spans less than half
    /// the circle; `None` otherwise.  When defined, the arc is the unique
    /// minimal segment containing both endpoints.
    pub fn minimal_segment(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        if a == b {
            return Some(vec![a]);
        }
        if !self.less(a, b) {
            return None;
        }
        let n = self.circle.len();
        let pa = self.position[&a];
        let pb = self.position[&b];
        let mut arc = Vec::new();
        let mut i = pa;
        loop {
            arc.push(self.circle[i]);
            if i == pb {
                break;
            }
            i = (i + 1) % n;
        }
        Some(arc)
    }

    /// Check that for every minimal pair whose root sum exists, the sum lies
    /// strictly inside the arc.  Returns the first violating pair.
    pub fn check_sums_inside(
        &self,
        sys: &RootSystem,
    ) -> std::result::Result<(), (usize, usize)> {
        for &a in &self.circle {
            for &b in &self.circle {
                if a == b || !self.less(a, b) {
                    continue;
                }
                let sum: Vec<i64> =
                    sys.root(a).iter().zip(sys.root(b)).map(|(x, y)| x + y).collect();
                if let Some(s) = sys.root_index(&sum) {
                    let arc = self.minimal_segment(a, b).expect("less implies an arc");
                    let inside = arc[1..arc.len() - 1].contains(&s);
                    if !inside {
                        return Err((a, b));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Half-open position ranges that mark the block structure of an adapted
/// ordering.  Empty ranges are `(k, k)`.
#[derive(Clone, Debug, Serialize)]
pub struct SegmentMarkers {
    /// Roots inverted by the first involution.
    pub inverted_by_first: (usize, usize),
    /// Roots inverted by the second involution.
    pub inverted_by_second: (usize, usize),
    /// Image of the first block under the second involution; together with
    /// the second block this is the inversion run of `s` itself.
    pub image_of_first: (usize, usize),
    /// Contiguous run carrying exactly the roots inverted by `s`.
    pub inversion_run: (usize, usize),
    /// Trailing positions of the roots fixed by `s`.
    pub fixed_tail: (usize, usize),
    /// Roots negated by the first involution (a segment inside its block).
    pub negated_by_first: (usize, usize),
    /// Roots negated by the second involution (a segment inside its block).
    pub negated_by_second: (usize, usize),
    /// Distinguished segment running from the first reflection root of the
    /// first involution to the last reflection root of the second; its length
    /// obeys the counting identity checked by `gamma_segment_length`.
    pub gamma_segment: (usize, usize),
    /// Positions of the reflection roots of the first involution.
    pub gamma_positions_first: Vec<usize>,
    /// Positions of the reflection roots of the second involution.
    pub gamma_positions_second: Vec<usize>,
}

/// Recomputed pass/fail record for each structural property of an adapted
/// ordering.
#[derive(Clone, Debug, Serialize)]
pub struct ShapeReport {
    /// The five regions partition the ordering in the stated order.
    pub blocks_partition: bool,
    /// The roots negated by the first involution form a segment ending at a
    /// reflection root, with half the non-reflection ones before the first.
    pub negated_first_structure: bool,
    /// Mirror property for the second involution: its negated roots form a
    /// segment starting at a reflection root, with half the non-reflection
    /// ones after the last.
    pub negated_second_structure: bool,
    /// The gamma segment has length `D - ((l(s) - l')/2 + D0)` where `D` is
    /// the number of positive roots, `l'` the total number of reflection
    /// roots and `D0` the number of positive fixed roots.
    pub gamma_segment_length: bool,
    /// No sum of two gamma-segment roots is a nonnegative integer combination
    /// of reflection roots lying strictly between them.
    pub no_representation: bool,
    /// Every root moved by `s` but kept positive appears before its image.
    pub image_after: bool,
    /// Shifting a kept-positive root by lower-stratum roots moves its image
    /// later: if `s(a)+b` and `a+c` are roots for `b`, `c` in a common lower
    /// stratum, both stay positive and `s(a)+b` appears after `a+c`.
    pub shift_property: bool,
    /// Adding a fixed root to the image of a kept-positive root lands
    /// positive and later: `s(a)+f` a root implies it appears after `a`.
    pub fixed_shift_property: bool,
    /// The inversion set of `s` occupies exactly the marked run.
    pub inversion_run_matches: bool,
}

impl ShapeReport {
    pub fn all_hold(&self) -> bool {
        self.blocks_partition
            && self.negated_first_structure
            && self.negated_second_structure
            && self.gamma_segment_length
            && self.no_representation
            && self.image_after
            && self.shift_property
            && self.fixed_shift_property
            && self.inversion_run_matches
    }
}

/// A normal ordering adapted to a two-involution factorization, with its
/// block markers and the recomputed structural report.
#[derive(Clone, Debug, Serialize)]
pub struct AssociatedOrdering {
    pub base: NormalOrdering,
    pub markers: SegmentMarkers,
    pub report: ShapeReport,
    /// Search nodes visited before the match; the ordering is the first hit
    /// in lexicographic word order, which we fix as the canonical choice.
    pub searched: u64,
    pub selection: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Region {
    FirstBlock,
    MiddleFree,
    ImageOfFirst,
    SecondBlock,
    FixedTail,
}

struct ShapeContext<'a> {
    sys: &'a RootSystem,
    positives: Vec<usize>,
    pos_set: BTreeSet<usize>,
    simples: Vec<usize>,
    refl: Vec<IntMat>,
    region_of_position: Vec<Region>,
    region_of_root: BTreeMap<usize, Region>,
    /// Roots negated by the first/second involution, and the positive
    /// representatives of the reflection roots of each.
    a1: BTreeSet<usize>,
    a2: BTreeSet<usize>,
    g1: BTreeSet<usize>,
    g2: BTreeSet<usize>,
    /// `s`-images and preimages by root index, over the whole root set.
    s_img: Vec<usize>,
    s_pre: Vec<usize>,
    stratum_of: &'a BTreeMap<usize, usize>,
    strata: &'a [Vec<usize>],
    gamma_len: usize,
    p1: usize,
    n1: usize,
    p2: usize,
    n2: usize,
    first_len: usize,
    second_len: usize,
    run_len: usize,
    fixed_len: usize,
}

#[derive(Default)]
struct SearchState {
    a1_placed: usize,
    g1_placed: usize,
    a2_placed: usize,
    g2_placed: usize,
    searched: u64,
}

/// Build the adapted ordering for the factorization recorded in `decomp`
/// against the positive system `possys`, searching reduced words in
/// lexicographic generator order and returning the first ordering satisfying
/// every structural property.
pub fn build_associated_ordering(
    sys: &RootSystem,
    decomp: &CarterDecomposition,
    possys: &PositiveSystemS,
    s: &WeylElement,
) -> Result<AssociatedOrdering> {
    let positives = possys.positive_roots.clone();
    let pos_set: BTreeSet<usize> = positives.iter().copied().collect();
    let total = positives.len();

    let s1 = decomp.first_involution(sys);
    let s2 = decomp.second_involution(sys);
    let inv1: BTreeSet<usize> = sys.inversion_set_in(&s1, &positives).into_iter().collect();
    let inv2: BTreeSet<usize> = sys.inversion_set_in(&s2, &positives).into_iter().collect();
    let inv_s: BTreeSet<usize> = sys.inversion_set_in(&s.mat, &positives).into_iter().collect();
    let first_len = inv1.len();
    let second_len = inv2.len();
    if inv_s.len() != first_len + second_len {
        return Err(Error::invalid(format!(
            "factorization is not length-additive on this positive system: {} vs {} + {}",
            inv_s.len(),
            first_len,
            second_len
        )));
    }

    // Image of the first block under the second involution; must stay
    // positive and fill the head of the inversion run.
    let mut image_of_first = BTreeSet::new();
    for &r in &inv1 {
        let img = s2.apply(sys.root(r));
        let idx = sys.root_index(&img).expect("Weyl image of a root is a root");
        if !pos_set.contains(&idx) {
            return Err(Error::invalid(
                "second involution must keep the first block positive".to_string(),
            ));
        }
        image_of_first.insert(idx);
    }

    let mut s_img = vec![0usize; sys.num_roots()];
    let mut s_pre = vec![0usize; sys.num_roots()];
    for r in sys.all_root_indices() {
        let img = s.mat.apply(sys.root(r));
        let idx = sys.root_index(&img).expect("Weyl image of a root is a root");
        s_img[r] = idx;
        s_pre[idx] = r;
    }

    let fixed: BTreeSet<usize> =
        positives.iter().copied().filter(|&r| s_img[r] == r).collect();
    let fixed_len = fixed.len();

    // Region of every positive root.
    let mut region_of_root = BTreeMap::new();
    for &r in &positives {
        let reg = if inv1.contains(&r) {
            Region::FirstBlock
        } else if inv2.contains(&r) {
            Region::SecondBlock
        } else if image_of_first.contains(&r) {
            Region::ImageOfFirst
        } else if fixed.contains(&r) {
            Region::FixedTail
        } else {
            Region::MiddleFree
        };
        region_of_root.insert(r, reg);
    }

    // Region of every position.  The middle band must be wide enough to hold
    // the image of the first block at its far end.
    let run_len = first_len + second_len;
    let active = total - fixed_len;
    let middle = active - first_len - second_len;
    if middle < first_len {
        return Err(Error::invalid(
            "middle band too narrow to carry the image of the first block".to_string(),
        ));
    }
    let mut region_of_position = Vec::with_capacity(total);
    for j in 0..total {
        let reg = if j < first_len {
            Region::FirstBlock
        } else if j < first_len + (middle - first_len) {
            Region::MiddleFree
        } else if j < middle + first_len {
            Region::ImageOfFirst
        } else if j < active {
            Region::SecondBlock
        } else {
            Region::FixedTail
        };
        region_of_position.push(reg);
    }

    // Reflection-root representatives and the roots each involution negates.
    let g1: BTreeSet<usize> = decomp
        .gamma1
        .iter()
        .map(|&g| possys.positive_representative(sys, g))
        .collect();
    let g2: BTreeSet<usize> = decomp
        .gamma2
        .iter()
        .map(|&g| possys.positive_representative(sys, g))
        .collect();
    let negates = |m: &IntMat, r: usize| -> bool {
        let img = m.apply(sys.root(r));
        img.iter().zip(sys.root(r)).all(|(x, y)| *x == -y)
    };
    let a1: BTreeSet<usize> = positives.iter().copied().filter(|&r| negates(&s1, r)).collect();
    let a2: BTreeSet<usize> = positives.iter().copied().filter(|&r| negates(&s2, r)).collect();
    assert!(g1.is_subset(&a1) && g2.is_subset(&a2));
    let (p1, n1, p2, n2) = (a1.len(), g1.len(), a2.len(), g2.len());
    assert!((p1 - n1) % 2 == 0 && (p2 - n2) % 2 == 0);

    // Forced length of the gamma segment.
    let l_prime = n1 + n2;
    let gamma_len = total - ((run_len - l_prime) / 2 + fixed_len);

    let simples = twisted_simple_roots(sys, &positives);
    let refl: Vec<IntMat> = simples.iter().map(|&i| sys.reflection_matrix(i)).collect();

    let ctx = ShapeContext {
        sys,
        positives: positives.clone(),
        pos_set,
        simples,
        refl,
        region_of_position,
        region_of_root,
        a1,
        a2,
        g1,
        g2,
        s_img,
        s_pre,
        stratum_of: &possys.stratum_of,
        strata: &possys.strata,
        gamma_len,
        p1,
        n1,
        p2,
        n2,
        first_len,
        second_len,
        run_len,
        fixed_len,
    };

    let mut state = SearchState::default();
    let mut seq = Vec::with_capacity(total);
    let mut word = Vec::with_capacity(total);
    let mut placed = vec![false; sys.num_roots()];
    let found = dfs(
        &ctx,
        IntMat::identity(sys.rank()),
        &mut seq,
        &mut word,
        &mut placed,
        &mut state,
    );
    let (sequence, reduced_word) = match found {
        Some(pair) => pair,
        None => {
            return Err(Error::NotFound {
                context: format!(
                    "no reduced word of the longest element yields the adapted block shape \
                     for this factorization (positive system of {total} roots)"
                ),
                searched: state.searched as usize,
            })
        }
    };

    let base = NormalOrdering { sequence, reduced_word, simples: ctx.simples.clone() };
    let markers = compute_markers(&ctx, &base.sequence);
    let report = verify_shape(sys, decomp, possys, s, &base, &markers);
    assert!(report.all_hold(), "search output must satisfy every structural property");
    Ok(AssociatedOrdering {
        base,
        markers,
        report,
        searched: state.searched,
        selection: "lexicographic-first".to_string(),
    })
}

fn dfs(
    ctx: &ShapeContext,
    u: IntMat,
    seq: &mut Vec<usize>,
    word: &mut Vec<usize>,
    placed: &mut Vec<bool>,
    state: &mut SearchState,
) -> Option<(Vec<usize>, Vec<usize>)> {
    state.searched += 1;
    let depth = seq.len();
    if depth == ctx.positives.len() {
        if end_checks(ctx, seq) {
            return Some((seq.clone(), word.clone()));
        }
        return None;
    }
    let reg = ctx.region_of_position[depth];
    for (gi, &srt) in ctx.simples.iter().enumerate() {
        let beta = u.apply(ctx.sys.root(srt));
        let beta_idx = ctx.sys.root_index(&beta).expect("Weyl image of a root is a root");
        if !ctx.pos_set.contains(&beta_idx) || ctx.region_of_root[&beta_idx] != reg {
            continue;
        }
        // A root moved by s but kept positive must come after its preimage.
        let pre = ctx.s_pre[beta_idx];
        if pre != beta_idx && ctx.pos_set.contains(&pre) && !placed[pre] {
            continue;
        }
        let is_a1 = ctx.a1.contains(&beta_idx);
        let is_g1 = ctx.g1.contains(&beta_idx);
        let is_a2 = ctx.a2.contains(&beta_idx);
        let is_g2 = ctx.g2.contains(&beta_idx);
        if reg == Region::FirstBlock {
            if is_a1 {
                if is_g1 {
                    if state.g1_placed == 0 && state.a1_placed != (ctx.p1 - ctx.n1) / 2 {
                        continue;
                    }
                    if state.g1_placed == ctx.n1 - 1 && state.a1_placed != ctx.p1 - 1 {
                        continue;
                    }
                } else {
                    if state.g1_placed == 0 && state.a1_placed >= (ctx.p1 - ctx.n1) / 2 {
                        continue;
                    }
                    if state.g1_placed == ctx.n1 {
                        continue;
                    }
                }
            } else if state.a1_placed > 0 && state.a1_placed < ctx.p1 {
                continue;
            }
        }
        if reg == Region::SecondBlock {
            if is_a2 {
                if is_g2 {
                    let trailing = (ctx.p2 - ctx.n2) / 2;
                    if state.g2_placed == ctx.n2 - 1
                        && state.a2_placed != ctx.p2 - trailing - 1
                    {
                        continue;
                    }
                } else if state.g2_placed == 0 {
                    continue;
                }
            } else if state.a2_placed > 0 && state.a2_placed < ctx.p2 {
                continue;
            }
        }

        seq.push(beta_idx);
        word.push(gi);
        placed[beta_idx] = true;
        state.a1_placed += is_a1 as usize;
        state.g1_placed += is_g1 as usize;
        state.a2_placed += is_a2 as usize;
        state.g2_placed += is_g2 as usize;
        let hit = dfs(ctx, u.mul(&ctx.refl[gi]), seq, word, placed, state);
        state.a1_placed -= is_a1 as usize;
        state.g1_placed -= is_g1 as usize;
        state.a2_placed -= is_a2 as usize;
        state.g2_placed -= is_g2 as usize;
        placed[beta_idx] = false;
        seq.pop();
        word.pop();
        if hit.is_some() {
            return hit;
        }
    }
    None
}

/// Bounds of the gamma segment inside a full sequence, when determined.
fn gamma_segment_bounds(ctx: &ShapeContext, seq: &[usize]) -> Option<(usize, usize)> {
    if ctx.gamma_len == 0 {
        return Some((0, 0));
    }
    let pos_of = |set: &BTreeSet<usize>| -> Vec<usize> {
        let mut v: Vec<usize> = seq
            .iter()
            .enumerate()
            .filter(|(_, r)| set.contains(r))
            .map(|(i, _)| i)
            .collect();
        v.sort_unstable();
        v
    };
    let end = if ctx.n2 > 0 {
        *pos_of(&ctx.g2).last().unwrap()
    } else if ctx.n1 > 0 {
        *pos_of(&ctx.g1).last().unwrap()
    } else {
        return None;
    };
    let start = if ctx.n1 > 0 {
        *pos_of(&ctx.g1).first().unwrap()
    } else {
        (end + 1).checked_sub(ctx.gamma_len)?
    };
    if end + 1 - start != ctx.gamma_len {
        return None;
    }
    Some((start, end + 1))
}

fn end_checks(ctx: &ShapeContext, seq: &[usize]) -> bool {
    let sys = ctx.sys;
    let Some((gs, ge)) = gamma_segment_bounds(ctx, seq) else {
        return false;
    };

    // No sum of two gamma-segment roots may be a nonnegative integer
    // combination of the reflection roots strictly between them.  The
    // reflection roots are mutually orthogonal, so the candidate coefficients
    // are forced by pairings and only need to be checked.
    let gammas: Vec<usize> = (gs..ge)
        .filter(|&i| ctx.g1.contains(&seq[i]) || ctx.g2.contains(&seq[i]))
        .collect();
    for i in gs..ge {
        for j in (i + 1)..ge {
            let sum: Vec<i64> = sys
                .root(seq[i])
                .iter()
                .zip(sys.root(seq[j]))
                .map(|(x, y)| x + y)
                .collect();
            let between: Vec<usize> = gammas
                .iter()
                .copied()
                .filter(|&k| i < k && k < j)
                .map(|k| seq[k])
                .collect();
            if representable(sys, &sum, &between) {
                return false;
            }
        }
    }

    // Stratum-shift comparisons.  Positions for fast lookups.
    let mut position = vec![usize::MAX; sys.num_roots()];
    for (i, &r) in seq.iter().enumerate() {
        position[r] = i;
    }
    let root_sum = |a: usize, b: usize| -> Option<usize> {
        let v: Vec<i64> =
            sys.root(a).iter().zip(sys.root(b)).map(|(x, y)| x + y).collect();
        sys.root_index(&v)
    };
    for &alpha in &ctx.positives {
        let sa = ctx.s_img[alpha];
        if sa == alpha || !ctx.pos_set.contains(&sa) {
            continue;
        }
        // Image strictly later (already enforced by the search, re-checked
        // cheaply here).
        if position[sa] <= position[alpha] {
            return false;
        }
        let k = ctx.stratum_of[&alpha];
        // Shifts by roots of a common lower stratum.
        for (j, stratum) in ctx.strata.iter().enumerate() {
            if j >= k {
                break;
            }
            for &b in stratum {
                let Some(sab) = root_sum(sa, b) else { continue };
                for &c in stratum {
                    let Some(ac) = root_sum(alpha, c) else { continue };
                    if !ctx.pos_set.contains(&sab) || !ctx.pos_set.contains(&ac) {
                        return false;
                    }
                    if position[sab] <= position[ac] {
                        return false;
                    }
                }
            }
        }
        // Shifts of the image by fixed roots land positive and later.
        for &f in &ctx.positives {
            if ctx.s_img[f] != f {
                continue;
            }
            for ff in [f, sys.neg_index(f)] {
                let Some(saf) = root_sum(sa, ff) else { continue };
                if !ctx.pos_set.contains(&saf) || position[saf] <= position[alpha] {
                    return false;
                }
            }
        }
    }
    true
}

/// Is `v` a nonnegative integer combination of the pairwise orthogonal roots
/// in `gammas`?  Orthogonality forces each coefficient to be the pairing of
/// `v` with the root over its length, so existence reduces to a direct check.
fn representable(sys: &RootSystem, v: &[i64], gammas: &[usize]) -> bool {
    use num::bigint::BigInt;
    use num_traits::Zero as _;
    if gammas.is_empty() {
        return false;
    }
    let mut coeffs: Vec<BigInt> = Vec::with_capacity(gammas.len());
    for &g in gammas {
        let gv = sys.root(g);
        let c = sys.form(v, gv) / sys.form(gv, gv);
        if !c.is_integer() || c < crate::scalar::Rat::zero() {
            return false;
        }
        coeffs.push(c.to_integer());
    }
    let mut rebuilt = vec![BigInt::zero(); v.len()];
    for (c, &g) in coeffs.iter().zip(gammas) {
        for (acc, &x) in rebuilt.iter_mut().zip(sys.root(g)) {
            *acc += c * x;
        }
    }
    rebuilt.iter().zip(v).all(|(a, &b)| *a == BigInt::from(b))
}

fn compute_markers(ctx: &ShapeContext, seq: &[usize]) -> SegmentMarkers {
    let total = seq.len();
    let active = total - ctx.fixed_len;
    let middle = active - ctx.first_len - ctx.second_len;
    let seg_of = |set: &BTreeSet<usize>| -> (usize, usize) {
        let pos: Vec<usize> = seq
            .iter()
            .enumerate()
            .filter(|(_, r)| set.contains(r))
            .map(|(i, _)| i)
            .collect();
        match (pos.first(), pos.last()) {
            (Some(&a), Some(&b)) => (a, b + 1),
            _ => (0, 0),
        }
    };
    let pos_list = |set: &BTreeSet<usize>| -> Vec<usize> {
        seq.iter()
            .enumerate()
            .filter(|(_, r)| set.contains(r))
            .map(|(i, _)| i)
            .collect()
    };
    let (gs, ge) = gamma_segment_bounds(ctx, seq).expect("markers of a validated sequence");
    SegmentMarkers {
        inverted_by_first: (0, ctx.first_len),
        inverted_by_second: (active - ctx.second_len, active),
        image_of_first: (middle, middle + ctx.first_len),
        inversion_run: (active - ctx.run_len, active),
        fixed_tail: (active, total),
        negated_by_first: seg_of(&ctx.a1),
        negated_by_second: seg_of(&ctx.a2),
        gamma_segment: (gs, ge),
        gamma_positions_first: pos_list(&ctx.g1),
        gamma_positions_second: pos_list(&ctx.g2),
    }
}

/// Recompute every structural property of an adapted ordering from scratch.
pub fn verify_shape(
    sys: &RootSystem,
    decomp: &CarterDecomposition,
    possys: &PositiveSystemS,
    s: &WeylElement,
    ordering: &NormalOrdering,
    markers: &SegmentMarkers,
) -> ShapeReport {
    let positives = &possys.positive_roots;
    let pos_set: BTreeSet<usize> = positives.iter().copied().collect();
    let seq = &ordering.sequence;
    let total = seq.len();
    let mut position = vec![usize::MAX; sys.num_roots()];
    for (i, &r) in seq.iter().enumerate() {
        position[r] = i;
    }

    let s1 = decomp.first_involution(sys);
    let s2 = decomp.second_involution(sys);
    let inv1: BTreeSet<usize> = sys.inversion_set_in(&s1, positives).into_iter().collect();
    let inv2: BTreeSet<usize> = sys.inversion_set_in(&s2, positives).into_iter().collect();
    let inv_s: BTreeSet<usize> = sys.inversion_set_in(&s.mat, positives).into_iter().collect();
    let image_of_first: BTreeSet<usize> = inv1
        .iter()
        .map(|&r| {
            sys.root_index(&s2.apply(sys.root(r))).expect("Weyl image of a root is a root")
        })
        .collect();
    let fixed: BTreeSet<usize> = positives
        .iter()
        .copied()
        .filter(|&r| {
            let img = s.mat.apply(sys.root(r));
            sys.root_index(&img) == Some(r)
        })
        .collect();

    let in_range = |range: (usize, usize), set: &BTreeSet<usize>| -> bool {
        (range.0..range.1).all(|i| set.contains(&seq[i]))
            && set.iter().all(|r| {
                let p = position[*r];
                p >= range.0 && p < range.1
            })
    };
    let blocks_partition = in_range(markers.inverted_by_first, &inv1)
        && in_range(markers.inverted_by_second, &inv2)
        && in_range(markers.image_of_first, &image_of_first)
        && in_range(markers.fixed_tail, &fixed)
        && markers.inverted_by_first.0 == 0
        && markers.fixed_tail.1 == total;
    let inversion_run_matches = in_range(markers.inversion_run, &inv_s);

    let negates = |m: &IntMat, r: usize| -> bool {
        let img = m.apply(sys.root(r));
        img.iter().zip(sys.root(r)).all(|(x, y)| *x == -y)
    };
    let a1: Vec<usize> = seq.iter().copied().filter(|&r| negates(&s1, r)).collect();
    let a2: Vec<usize> = seq.iter().copied().filter(|&r| negates(&s2, r)).collect();
    let g1: BTreeSet<usize> =
        decomp.gamma1.iter().map(|&g| possys.positive_representative(sys, g)).collect();
    let g2: BTreeSet<usize> =
        decomp.gamma2.iter().map(|&g| possys.positive_representative(sys, g)).collect();

    let contiguous = |pos: &[usize]| -> bool {
        pos.windows(2).all(|w| w[1] == w[0] + 1)
    };
    let a1_pos: Vec<usize> = a1.iter().map(|&r| position[r]).collect();
    let negated_first_structure = if a1.is_empty() {
        true
    } else {
        let flags: Vec<bool> = a1.iter().map(|r| g1.contains(r)).collect();
        let first_g = flags.iter().position(|&f| f);
        contiguous(&a1_pos)
            && flags.last() == Some(&true)
            && first_g == Some((a1.len() - g1.len()) / 2)
    };
    let a2_pos: Vec<usize> = a2.iter().map(|&r| position[r]).collect();
    let negated_second_structure = if a2.is_empty() {
        true
    } else {
        let flags: Vec<bool> = a2.iter().map(|r| g2.contains(r)).collect();
        let last_g = flags.iter().rposition(|&f| f);
        contiguous(&a2_pos)
            && flags.first() == Some(&true)
            && last_g == Some(a2.len() - 1 - (a2.len() - g2.len()) / 2)
    };

    let l_prime = g1.len() + g2.len();
    let run_len = inv_s.len();
    let expected = total - ((run_len - l_prime) / 2 + fixed.len());
    let (gs, ge) = markers.gamma_segment;
    let gamma_segment_length = ge - gs == expected
        && if l_prime > 0 {
            let last_gamma = if g2.is_empty() { &g1 } else { &g2 };
            let end_anchor = last_gamma.iter().map(|&r| position[r]).max().unwrap();
            let start_ok = if g1.is_empty() {
                true
            } else {
                gs == g1.iter().map(|&r| position[r]).min().unwrap()
            };
            start_ok && ge == end_anchor + 1
        } else {
            ge == gs
        };

    let gammas_in_seg: Vec<usize> = (gs..ge)
        .filter(|&i| g1.contains(&seq[i]) || g2.contains(&seq[i]))
        .collect();
    let mut no_representation = true;
    'outer: for i in gs..ge {
        for j in (i + 1)..ge {
            let sum: Vec<i64> = sys
                .root(seq[i])
                .iter()
                .zip(sys.root(seq[j]))
                .map(|(x, y)| x + y)
                .collect();
            let between: Vec<usize> = gammas_in_seg
                .iter()
                .copied()
                .filter(|&k| i < k && k < j)
                .map(|k| seq[k])
                .collect();
            if representable(sys, &sum, &between) {
                no_representation = false;
                break 'outer;
            }
        }
    }

    let mut s_img = vec![0usize; sys.num_roots()];
    for r in sys.all_root_indices() {
        s_img[r] =
            sys.root_index(&s.mat.apply(sys.root(r))).expect("Weyl image of a root is a root");
    }
    let root_sum = |a: usize, b: usize| -> Option<usize> {
        let v: Vec<i64> = sys.root(a).iter().zip(sys.root(b)).map(|(x, y)| x + y).collect();
        sys.root_index(&v)
    };
    let mut image_after = true;
    let mut shift_property = true;
    let mut fixed_shift_property = true;
    for &alpha in positives {
        let sa = s_img[alpha];
        if sa == alpha || !pos_set.contains(&sa) {
            continue;
        }
        if position[sa] <= position[alpha] {
            image_after = false;
        }
        let k = possys.stratum_of[&alpha];
        for (j, stratum) in possys.strata.iter().enumerate() {
            if j >= k {
                break;
            }
            for &b in stratum {
                let Some(sab) = root_sum(sa, b) else { continue };
                for &c in stratum {
                    let Some(ac) = root_sum(alpha, c) else { continue };
                    if !pos_set.contains(&sab)
                        || !pos_set.contains(&ac)
                        || position[sab] <= position[ac]
                    {
                        shift_property = false;
                    }
                }
            }
        }
        for &f in &fixed {
            for ff in [f, sys.neg_index(f)] {
                let Some(saf) = root_sum(sa, ff) else { continue };
                if !pos_set.contains(&saf) || position[saf] <= position[alpha] {
                    fixed_shift_property = false;
                }
            }
        }
    }

    ShapeReport {
        blocks_partition,
        negated_first_structure,
        negated_second_structure,
        gamma_segment_length,
        no_representation,
        image_after,
        shift_property,
        fixed_shift_property,
        inversion_run_matches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carter::{associated_positive_system, carter_decompose, invariant_subspaces};
    use crate::rootsys::WeylGroup;

    fn std_positives(sys: &RootSystem) -> Vec<usize> {
        sys.standard_positive_indices()
    }

    fn idx(sys: &RootSystem, coords: &[i64]) -> usize {
        sys.root_index(coords).expect("root exists")
    }

    #[test]
    fn the_two_generator_word_gives_the_height_ordered_sequence() {
        let sys = RootSystem::build("A2").unwrap();
        let ord = ordering_from_reduced_word(&sys, &std_positives(&sys), &[0, 1, 0]).unwrap();
        let expect = vec![idx(&sys, &[1, 0]), idx(&sys, &[1, 1]), idx(&sys, &[0, 1])];
        assert_eq!(ord.sequence, expect);
        assert!(validate_normal(&sys, &ord.sequence).is_ok());
    }

    #[test]
    fn a_sum_listed_outside_its_summands_is_rejected() {
        let sys = RootSystem::build("A2").unwrap();
        let bad = vec![idx(&sys, &[1, 0]), idx(&sys, &[0, 1]), idx(&sys, &[1, 1])];
        let err = validate_normal(&sys, &bad).unwrap_err();
        assert_eq!(err, (idx(&sys, &[1, 0]), idx(&sys, &[0, 1]), idx(&sys, &[1, 1])));
    }

    #[test]
    fn non_reduced_and_short_words_error_distinctly() {
        let sys = RootSystem::build("A2").unwrap();
        let pos = std_positives(&sys);
        match ordering_from_reduced_word(&sys, &pos, &[0, 0]) {
            Err(Error::NotReduced { word, actual }) => {
                assert_eq!(word, vec![0, 0]);
                assert_eq!(actual, 0);
            }
            other => panic!("expected NotReduced, got {other:?}"),
        }
        match ordering_from_reduced_word(&sys, &pos, &[0]) {
            Err(Error::NotLongest) => {}
            other => panic!("expected NotLongest, got {other:?}"),
        }
    }

    #[test]
    fn the_four_letter_word_in_b2_interleaves_the_short_and_long_roots() {
        let sys = RootSystem::build("B2").unwrap();
        let ord =
            ordering_from_reduced_word(&sys, &std_positives(&sys), &[0, 1, 0, 1]).unwrap();
        let expect = vec![
            idx(&sys, &[1, 0]),
            idx(&sys, &[1, 1]),
            idx(&sys, &[1, 2]),
            idx(&sys, &[0, 1]),
        ];
        assert_eq!(ord.sequence, expect);
        assert!(validate_normal(&sys, &ord.sequence).is_ok());
    }

    #[test]
    fn every_reduced_word_of_small_systems_yields_a_normal_ordering() {
        for label in ["A1", "A1xA1", "A2", "B2", "G2", "A3"] {
            let sys = RootSystem::build(label).unwrap();
            let all = all_normal_orderings(&sys, &std_positives(&sys));
            let expected = match label {
                "A1" => 1,
                "A1xA1" => 2,
                "A2" | "B2" | "G2" => 2,
                "A3" => 16,
                _ => unreachable!(),
            };
            assert_eq!(all.len(), expected, "{label}");
            for ord in &all {
                assert!(validate_normal(&sys, &ord.sequence).is_ok(), "{label}");
            }
        }
    }

    #[test]
    fn rank_two_orderings_match_a_pattern_and_one_transposition_connects_them() {
        for label in ["A2", "B2", "G2"] {
            let sys = RootSystem::build(label).unwrap();
            let pos = std_positives(&sys);
            let all = all_normal_orderings(&sys, &pos);
            assert_eq!(all.len(), 2);
            // The whole sequence of one is the reverse of the other.
            let rev: Vec<usize> = all[0].sequence.iter().rev().copied().collect();
            assert_eq!(rev, all[1].sequence, "{label}");
            let trans = elementary_transpositions(&sys, &pos, &all[0]);
            assert!(
                trans.iter().any(|t| t.result.sequence == all[1].sequence),
                "{label}: some transposition must reach the other ordering"
            );
        }
    }

    #[test]
    fn transpositions_connect_all_orderings_of_a3() {
        let sys = RootSystem::build("A3").unwrap();
        let pos = std_positives(&sys);
        let all = all_normal_orderings(&sys, &pos);
        assert_eq!(all.len(), 16);
        let key = |o: &NormalOrdering| o.sequence.clone();
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut queue = vec![all[0].clone()];
        seen.insert(key(&all[0]));
        while let Some(cur) = queue.pop() {
            for t in elementary_transpositions(&sys, &pos, &cur) {
                if seen.insert(key(&t.result)) {
                    queue.push(t.result);
                }
            }
        }
        assert_eq!(seen.len(), 16, "transpositions reach every normal ordering");
    }

    #[test]
    fn circular_precedence_wraps_and_minimal_segments_close_under_sums() {
        let sys = RootSystem::build("A2").unwrap();
        let pos = std_positives(&sys);
        let ord = ordering_from_reduced_word(&sys, &pos, &[0, 1, 0]).unwrap();
        let circ = CircularOrdering::new(&sys, &ord);
        let first = ord.sequence[0];
        let last = ord.sequence[2];
        assert!(circ.less(first, last));
        assert!(circ.less(last, sys.neg_index(first)));
        assert!(!circ.less(first, sys.neg_index(first)));
        // A short arc crossing the sign boundary.
        let a2 = idx(&sys, &[0, 1]);
        let na1 = sys.neg_index(idx(&sys, &[1, 0]));
        assert_eq!(circ.minimal_segment(a2, na1), Some(vec![a2, na1]));
        // Antisymmetry away from opposite pairs.
        for &a in &circ.circle {
            for &b in &circ.circle {
                if a != b && b != sys.neg_index(a) {
                    assert_ne!(circ.less(a, b), circ.less(b, a));
                }
            }
        }
        for label in ["A2", "B2", "G2"] {
            let sys = RootSystem::build(label).unwrap();
            let pos = std_positives(&sys);
            for ord in all_normal_orderings(&sys, &pos) {
                let circ = CircularOrdering::new(&sys, &ord);
                assert!(circ.check_sums_inside(&sys).is_ok(), "{label}");
            }
        }
    }

    fn adapted(label: &str, word: &[usize]) -> (RootSystem, AssociatedOrdering) {
        let sys = RootSystem::build(label).unwrap();
        let s = sys.weyl_from_word(word);
        let decomp = carter_decompose(&sys, &s, 0).unwrap();
        let spectral = invariant_subspaces(&sys, &s, &decomp, 0).unwrap();
        let possys = associated_positive_system(&sys, &spectral).unwrap();
        let ord = build_associated_ordering(&sys, &decomp, &possys, &s).unwrap();
        (sys, ord)
    }

    #[test]
    fn the_single_reflection_in_rank_one_is_its_own_gamma_segment() {
        let (_, ord) = adapted("A1", &[0]);
        assert_eq!(ord.base.sequence.len(), 1);
        assert_eq!(ord.markers.gamma_segment, (0, 1));
        assert!(ord.report.all_hold());
    }

    #[test]
    fn the_rank_two_rotation_uses_the_full_positive_system_as_gamma_segment() {
        let (_, ord) = adapted("A2", &[0, 1]);
        assert_eq!(ord.base.sequence.len(), 3);
        assert_eq!(ord.markers.gamma_segment, (0, 3));
        assert_eq!(ord.markers.fixed_tail, (3, 3));
        assert!(ord.report.all_hold());
    }

    #[test]
    fn the_identity_pins_everything_into_the_fixed_tail() {
        let sys = RootSystem::build("A2").unwrap();
        let s = sys.weyl_from_word(&[]);
        let decomp = carter_decompose(&sys, &s, 0).unwrap();
        let spectral = invariant_subspaces(&sys, &s, &decomp, 0).unwrap();
        let possys = associated_positive_system(&sys, &spectral).unwrap();
        let ord = build_associated_ordering(&sys, &decomp, &possys, &s).unwrap();
        assert_eq!(ord.markers.fixed_tail, (0, 3));
        assert_eq!(ord.markers.gamma_segment, (0, 0));
        assert!(ord.report.all_hold());
    }

    #[test]
    fn quarter_turn_in_b2_pins_gammas_at_both_ends() {
        let (_, ord) = adapted("B2", &[0, 1]);
        assert_eq!(ord.base.sequence.len(), 4);
        assert_eq!(ord.markers.gamma_segment, (0, 4));
        assert_eq!(ord.markers.gamma_positions_first, vec![0]);
        assert_eq!(ord.markers.gamma_positions_second, vec![3]);
        assert!(ord.report.all_hold());
    }

    #[test]
    fn single_reflection_in_b2_leaves_a_fixed_pair_outside_the_run() {
        let (_, ord) = adapted("B2", &[0]);
        assert_eq!(ord.markers.fixed_tail, (3, 4));
        assert_eq!(ord.markers.inversion_run, (0, 3));
        assert_eq!(ord.markers.gamma_segment.1 - ord.markers.gamma_segment.0, 2);
        assert!(ord.report.all_hold());
    }

    #[test]
    fn commuting_reflections_in_a3_form_a_single_second_factor() {
        // An involution negates the spans of all its reflection roots, so the
        // first factor must be trivial and both gammas sit in the second
        // block, adjacent to each other.
        let (_, ord) = adapted("A3", &[0, 2]);
        assert!(ord.markers.gamma_positions_first.is_empty());
        let g2 = &ord.markers.gamma_positions_second;
        assert_eq!(g2.len(), 2);
        assert_eq!(g2[1], g2[0] + 1);
        assert_eq!(ord.markers.inverted_by_first, (0, 0));
        assert!(ord.report.all_hold());
    }

    #[test]
    fn adapted_orderings_exist_for_every_class_of_the_small_types() {
        for label in ["A1", "A1xA1", "A2", "B2", "G2", "A3"] {
            let sys = RootSystem::build(label).unwrap();
            let group = WeylGroup::enumerate(&sys);
            for rep in group.class_representatives(&sys) {
                let decomp = carter_decompose(&sys, &rep, 0).unwrap();
                let spectral = invariant_subspaces(&sys, &rep, &decomp, 0).unwrap();
                let possys = associated_positive_system(&sys, &spectral).unwrap();
                let ord = build_associated_ordering(&sys, &decomp, &possys, &rep).unwrap();
                assert!(
                    validate_normal(&sys, &ord.base.sequence).is_ok(),
                    "{label}: adapted ordering must be normal"
                );
                assert!(ord.report.all_hold(), "{label}");
                let d = possys.positive_roots.len();
                let run = ord.markers.inversion_run.1 - ord.markers.inversion_run.0;
                let l_prime = decomp.gamma1.len() + decomp.gamma2.len();
                let fixed = ord.markers.fixed_tail.1 - ord.markers.fixed_tail.0;
                assert_eq!(
                    ord.markers.gamma_segment.1 - ord.markers.gamma_segment.0,
                    d - ((run - l_prime) / 2 + fixed),
                    "{label}: gamma-segment length identity"
                );
            }
        }
    }

    #[test]
    fn adapted_orderings_exist_for_the_full_rotations_of_the_bigger_types() {
        for label in ["A3", "B3", "C3", "A4", "D4"] {
            let sys = RootSystem::build(label).unwrap();
            let word: Vec<usize> = (0..sys.rank()).collect();
            let s = sys.weyl_from_word(&word);
            let decomp = carter_decompose(&sys, &s, 0).unwrap();
            let spectral = invariant_subspaces(&sys, &s, &decomp, 0).unwrap();
            let possys = associated_positive_system(&sys, &spectral).unwrap();
            let ord = build_associated_ordering(&sys, &decomp, &possys, &s).unwrap();
            assert!(ord.report.all_hold(), "{label}");
            assert!(validate_normal(&sys, &ord.base.sequence).is_ok(), "{label}");
        }
    }

    #[test]
    fn markers_serialize_with_the_ordering() {
        let (_, ord) = adapted("B2", &[0, 1]);
        let json = serde_json::to_string(&ord).unwrap();
        assert!(json.contains("gamma_segment"));
        assert!(json.contains("lexicographic-first"));
    }
}
