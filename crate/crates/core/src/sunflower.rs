//! Links, sunflowers with a prescribed kernel, and L-sunflower / L-clique search.
//!
//! A sunflower with kernel `A` is the same thing as a matching in the link
//! `F(A)`, so every search here reduces to set packing on link members.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::clique;
use crate::error::{Error, Result};
use crate::setcore::{build_graph_sizes, KSet, SetFamily, SizeSet};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SunflowerWitness {
    pub kernel: KSet,
    pub petal_indices: Vec<usize>,
}

impl SunflowerWitness {
    /// Direct pairwise check against the family.
    pub fn verify(&self, f: &SetFamily) -> bool {
        if self.petal_indices.is_empty() {
            return false;
        }
        if !self
            .petal_indices
            .iter()
            .all(|&i| i < f.len() && self.kernel.is_subset(f.member(i)))
        {
            return false;
        }
        let p = &self.petal_indices;
        for (x, &i) in p.iter().enumerate() {
            for &j in &p[x + 1..] {
                if i == j || f.member(i).intersection(f.member(j)) != self.kernel {
                    return false;
                }
            }
        }
        true
    }
}

/// `F(A)` with back-pointers into the original family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Link {
    pub sets: Vec<KSet>,
    pub origin: Vec<usize>,
}

impl Link {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

pub fn link(f: &SetFamily, a: &KSet) -> Link {
    let mut sets = Vec::new();
    let mut origin = Vec::new();
    for (i, m) in f.members().iter().enumerate() {
        if a.is_subset(m) {
            sets.push(m.difference(a));
            origin.push(i);
        }
    }
    Link { sets, origin }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Greedy,
    Exact,
}

/// Maximal (greedy, input order) or maximum (exact) sunflower with kernel `a`.
pub fn max_sunflower(f: &SetFamily, a: &KSet, mode: Mode) -> Result<SunflowerWitness> {
    let lk = link(f, a);
    if lk.is_empty() {
        return Err(Error::KernelUncovered(a.elems().to_vec()));
    }
    let bits: Vec<FixedBitSet> = lk.sets.iter().map(|s| s.to_bits(f.n())).collect();
    let chosen = match mode {
        Mode::Greedy => greedy_packing(&bits),
        Mode::Exact => max_packing(&bits, usize::MAX),
    };
    Ok(SunflowerWitness {
        kernel: a.clone(),
        petal_indices: chosen.into_iter().map(|i| lk.origin[i]).collect(),
    })
}

/// Number of petals of a maximum sunflower with kernel `a`, stopping early
/// once `target` is reached. Returns 0 if `a` is in no member.
pub fn petal_count_at_least(f: &SetFamily, a: &KSet, target: usize) -> usize {
    let lk = link(f, a);
    let bits: Vec<FixedBitSet> = lk.sets.iter().map(|s| s.to_bits(f.n())).collect();
    max_packing(&bits, target).len()
}

/// Union of the petals (minus `a`) of a greedy maximal sunflower with kernel
/// `a` when it has fewer than `m` petals; empty otherwise.
pub fn psi(f: &SetFamily, a: &KSet, m: usize) -> KSet {
    let lk = link(f, a);
    let bits: Vec<FixedBitSet> = lk.sets.iter().map(|s| s.to_bits(f.n())).collect();
    let chosen = greedy_packing(&bits);
    if chosen.len() >= m {
        return KSet::empty();
    }
    KSet::from_unsorted(chosen.iter().flat_map(|&i| lk.sets[i].elems().iter().copied()))
}

pub(crate) fn greedy_packing(sets: &[FixedBitSet]) -> Vec<usize> {
    let Some(first) = sets.first() else {
        return Vec::new();
    };
    let mut used = FixedBitSet::with_capacity(first.len());
    let mut out = Vec::new();
    for (i, s) in sets.iter().enumerate() {
        if used.is_disjoint(s) {
            used.union_with(s);
            out.push(i);
        }
    }
    out
}

struct Packing<'a> {
    sets: &'a [FixedBitSet],
    best: Vec<usize>,
    target: usize,
    set_size: usize,
}

impl Packing<'_> {
    fn go(&mut self, start: usize, used: &FixedBitSet, free: usize, cur: &mut Vec<usize>) {
        if cur.len() > self.best.len() {
            self.best = cur.clone();
        }
        if self.best.len() >= self.target {
            return;
        }
        let remaining = self.sets.len() - start;
        let by_elements = free.checked_div(self.set_size).unwrap_or(usize::MAX);
        if cur.len() + remaining.min(by_elements) <= self.best.len() {
            return;
        }
        for i in start..self.sets.len() {
            if cur.len() + (self.sets.len() - i) <= self.best.len() {
                return;
            }
            if used.is_disjoint(&self.sets[i]) {
                let mut next = used.clone();
                next.union_with(&self.sets[i]);
                cur.push(i);
                self.go(i + 1, &next, free.saturating_sub(self.set_size), cur);
                cur.pop();
                if self.best.len() >= self.target {
                    return;
                }
            }
        }
    }
}

/// Maximum packing of equal-size sets (indices ascending), stopping at `target`.
pub(crate) fn max_packing(sets: &[FixedBitSet], target: usize) -> Vec<usize> {
    let Some(first) = sets.first() else {
        return Vec::new();
    };
    let set_size = first.count_ones(..);
    if set_size == 0 {
        // Only one empty set can appear in a link of distinct members.
        return vec![0];
    }
    let mut union = FixedBitSet::with_capacity(first.len());
    for s in sets {
        union.union_with(s);
    }
    let greedy = greedy_packing(sets);
    let mut p = Packing {
        sets,
        best: greedy,
        target,
        set_size,
    };
    if p.best.len() < target {
        p.go(
            0,
            &FixedBitSet::with_capacity(first.len()),
            union.count_ones(..),
            &mut Vec::new(),
        );
    }
    p.best.truncate(target.max(1).min(p.best.len()));
    p.best
}

/// First packing of `need` sets in lexicographic index order, if any.
fn lex_first_packing(sets: &[FixedBitSet], need: usize) -> Option<Vec<usize>> {
    fn go(sets: &[FixedBitSet], start: usize, used: &FixedBitSet, need: usize, cur: &mut Vec<usize>) -> bool {
        if cur.len() == need {
            return true;
        }
        for i in start..sets.len() {
            if sets.len() - i < need - cur.len() {
                return false;
            }
            if used.is_disjoint(&sets[i]) {
                let mut next = used.clone();
                next.union_with(&sets[i]);
                cur.push(i);
                if go(sets, i + 1, &next, need, cur) {
                    return true;
                }
                cur.pop();
            }
        }
        false
    }
    let width = sets.first().map_or(0, |s| s.len());
    let mut cur = Vec::new();
    go(sets, 0, &FixedBitSet::with_capacity(width), need, &mut cur).then_some(cur)
}

/// An `m`-petal sunflower whose kernel size lies in `l`, if one exists.
///
/// Every kernel of a sunflower with at least two petals is the intersection
/// of two of its petals, so scanning member pairs is complete. The witness
/// returned is the lexicographically smallest petal-index tuple.
pub fn find_l_sunflower(f: &SetFamily, l: &SizeSet, m: usize) -> Option<SunflowerWitness> {
    if m == 0 || l.is_empty() {
        return None;
    }
    if m == 1 {
        // Any member containing a subset of size in L is a 1-petal sunflower.
        let s = l.iter().find(|&s| s <= f.k())?;
        let member = f.members().first()?;
        return Some(SunflowerWitness {
            kernel: KSet::from_unsorted(member.elems()[..s].iter().copied()),
            petal_indices: vec![0],
        });
    }
    let mut viable: HashMap<KSet, bool> = HashMap::new();
    for i in 0..f.len() {
        for j in i + 1..f.len() {
            if !l.contains(f.inter(i, j)) {
                continue;
            }
            let kernel = f.member(i).intersection(f.member(j));
            let ok = *viable
                .entry(kernel.clone())
                .or_insert_with(|| petal_count_at_least(f, &kernel, m) >= m);
            if !ok {
                continue;
            }
            if m == 2 {
                return Some(SunflowerWitness {
                    kernel,
                    petal_indices: vec![i, j],
                });
            }
            let mut used = f.bits(i).clone();
            used.union_with(f.bits(j));
            let kbits = kernel.to_bits(f.n());
            let mut cand_idx = Vec::new();
            let mut cand_bits = Vec::new();
            for c in j + 1..f.len() {
                if !kernel.is_subset(f.member(c)) {
                    continue;
                }
                let mut petal = f.bits(c).clone();
                petal.difference_with(&kbits);
                let mut outside = used.clone();
                outside.difference_with(&kbits);
                if outside.is_disjoint(&petal) {
                    cand_idx.push(c);
                    cand_bits.push(petal);
                }
            }
            if let Some(rest) = lex_first_packing(&cand_bits, m - 2) {
                let mut petals = vec![i, j];
                petals.extend(rest.into_iter().map(|x| cand_idx[x]));
                return Some(SunflowerWitness {
                    kernel,
                    petal_indices: petals,
                });
            }
        }
    }
    None
}

/// `m` members pairwise intersecting in sizes from `l`, if they exist.
pub fn find_l_clique(f: &SetFamily, l: &SizeSet, m: usize, cap: usize) -> Result<Option<Vec<usize>>> {
    let g = build_graph_sizes(f, l);
    clique::find_clique(&g, m, cap)
}

/// Exhaustive reference for tests: tries every `m`-subset of members.
pub fn brute_force_l_sunflower(f: &SetFamily, l: &SizeSet, m: usize) -> bool {
    crate::setcore::combinations(f.len(), m).into_iter().any(|idx| {
        if m < 2 {
            return l.iter().any(|s| s <= f.k()) && !idx.is_empty();
        }
        let kernel = f.member(idx[0]).intersection(f.member(idx[1]));
        l.contains(kernel.len())
            && idx.iter().enumerate().all(|(x, &a)| {
                idx[x + 1..]
                    .iter()
                    .all(|&b| f.member(a).intersection(f.member(b)) == kernel)
            })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setcore::SizeSet;

    fn fam(k: usize, n: usize, sets: &[&[u32]]) -> SetFamily {
        SetFamily::from_sets(k, n, &sets.iter().map(|s| s.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn ks(v: &[u32]) -> KSet {
        KSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn link_examples() {
        let f = fam(2, 3, &[&[0, 1], &[0, 2], &[1, 2]]);
        let lk = link(&f, &ks(&[0]));
        assert_eq!(lk.sets, vec![ks(&[1]), ks(&[2])]);
        assert_eq!(lk.origin, vec![0, 1]);
        assert_eq!(link(&f, &KSet::empty()).sets, f.members().to_vec());
        assert!(link(&f, &ks(&[5])).is_empty());
    }

    #[test]
    fn max_sunflower_examples() {
        let f = fam(2, 4, &[&[0, 1], &[0, 2], &[0, 3]]);
        let w = max_sunflower(&f, &ks(&[0]), Mode::Exact).unwrap();
        assert_eq!(w.petal_indices.len(), 3);
        assert!(w.verify(&f));

        let f = fam(2, 2, &[&[0, 1]]);
        assert_eq!(
            max_sunflower(&f, &ks(&[0]), Mode::Greedy).unwrap().petal_indices,
            vec![0]
        );

        let f = fam(3, 4, &[&[0, 1, 2], &[0, 1, 3], &[0, 2, 3]]);
        assert_eq!(
            max_sunflower(&f, &ks(&[0]), Mode::Exact).unwrap().petal_indices.len(),
            1
        );

        assert!(matches!(
            max_sunflower(&f, &ks(&[9]), Mode::Exact),
            Err(Error::KernelUncovered(_))
        ));
    }

    #[test]
    fn exact_beats_greedy_when_order_is_bad() {
        // Greedy takes {1,2} first and blocks both others.
        let f = fam(2, 4, &[&[1, 2], &[0, 1], &[2, 3]]);
        let g = max_sunflower(&f, &KSet::empty(), Mode::Greedy).unwrap();
        let e = max_sunflower(&f, &KSet::empty(), Mode::Exact).unwrap();
        assert_eq!((g.petal_indices.len(), e.petal_indices.len()), (1, 2));
        let f = fam(3, 7, &[&[0, 1, 2], &[0, 3, 4], &[1, 5, 6], &[2, 3, 5]]);
        let g = max_sunflower(&f, &KSet::empty(), Mode::Greedy).unwrap();
        let e = max_sunflower(&f, &KSet::empty(), Mode::Exact).unwrap();
        assert!(e.petal_indices.len() >= g.petal_indices.len());
    }

    #[test]
    fn psi_examples() {
        let f = fam(2, 3, &[&[0, 1], &[0, 2]]);
        assert_eq!(psi(&f, &ks(&[0]), 3), ks(&[1, 2]));
        let f = fam(2, 4, &[&[0, 1], &[0, 2], &[0, 3]]);
        assert_eq!(psi(&f, &ks(&[0]), 3), KSet::empty());
    }

    #[test]
    fn find_l_sunflower_examples() {
        let f = fam(2, 6, &[&[0, 1], &[2, 3], &[4, 5]]);
        let w = find_l_sunflower(&f, &SizeSet::new([0]), 3).unwrap();
        assert!(w.kernel.is_empty());
        assert_eq!(w.petal_indices, vec![0, 1, 2]);

        let f = fam(2, 4, &[&[0, 1], &[0, 2], &[0, 3]]);
        let w = find_l_sunflower(&f, &SizeSet::new([1]), 3).unwrap();
        assert_eq!(w.kernel, ks(&[0]));
        assert_eq!(w.petal_indices.len(), 3);
        assert!(find_l_sunflower(&f, &SizeSet::new([1]), 4).is_none());
        assert!(find_l_sunflower(&f, &SizeSet::new([0]), 2).is_none());
    }

    #[test]
    fn find_l_clique_examples() {
        let f = fam(2, 4, &[&[0, 1], &[2, 3]]);
        assert!(find_l_clique(&f, &SizeSet::new([1]), 2, 100).unwrap().is_none());
        let f = fam(2, 3, &[&[0, 1], &[1, 2], &[0, 2]]);
        assert_eq!(
            find_l_clique(&f, &SizeSet::new([1]), 3, 100).unwrap(),
            Some(vec![0, 1, 2])
        );
    }

    fn arb_family() -> impl proptest::strategy::Strategy<Value = SetFamily> {
        use proptest::prelude::*;
        (2usize..=4, 4usize..=8).prop_flat_map(|(k, n)| {
            let k = k.min(n);
            proptest::collection::btree_set(proptest::collection::btree_set(0u32..n as u32, k), 1..=12).prop_map(
                move |sets| {
                    let sets: Vec<Vec<u32>> = sets
                        .into_iter()
                        .filter(|s| s.len() == k)
                        .map(|s| s.into_iter().collect())
                        .collect();
                    SetFamily::from_sets(k, n, &sets).unwrap()
                },
            )
        })
    }

    proptest::proptest! {
        #[test]
        fn sunflower_search_matches_brute_force(
            f in arb_family(),
            lmask in 0u8..16,
            m in 2usize..=4,
        ) {
            let l = SizeSet::new((0..f.k()).filter(|s| lmask & (1 << s) != 0));
            let found = find_l_sunflower(&f, &l, m);
            proptest::prop_assert_eq!(found.is_some(), brute_force_l_sunflower(&f, &l, m));
            if let Some(w) = found {
                proptest::prop_assert!(w.verify(&f));
                proptest::prop_assert_eq!(w.petal_indices.len(), m);
                proptest::prop_assert!(l.contains(w.kernel.len()));
            }
        }

        #[test]
        fn psi_covers_the_link(f in arb_family(), m in 2usize..=4, pick in 0usize..12, sub in 0u8..16) {
            let member = f.member(pick % f.len());
            let a = KSet::from_unsorted(
                member.elems().iter().enumerate().filter(|(i, _)| sub & (1 << i) != 0).map(|(_, &x)| x),
            );
            if a.len() == f.k() {
                return Ok(());
            }
            let cover = psi(&f, &a, m);
            if !cover.is_empty() {
                proptest::prop_assert!(cover.len() <= (f.k() - a.len()) * (m - 1));
                for s in link(&f, &a).sets {
                    proptest::prop_assert!(crate::setcore::intersection_size(&s, &cover) > 0);
                }
            }
            let g = max_sunflower(&f, &a, Mode::Greedy).unwrap();
            let e = max_sunflower(&f, &a, Mode::Exact).unwrap();
            proptest::prop_assert!(g.verify(&f) && e.verify(&f));
            proptest::prop_assert!(e.petal_indices.len() >= g.petal_indices.len());
        }

        #[test]
        fn clique_search_matches_brute_force(f in arb_family(), lmask in 0u8..16, m in 2usize..=4) {
            let l = SizeSet::new((0..f.k()).filter(|s| lmask & (1 << s) != 0));
            let found = find_l_clique(&f, &l, m, 100).unwrap();
            let naive = crate::setcore::combinations(f.len(), m).into_iter().any(|idx| {
                idx.iter().enumerate().all(|(x, &a)| idx[x + 1..].iter().all(|&b| l.contains(f.inter(a, b))))
            });
            proptest::prop_assert_eq!(found.is_some(), naive);
        }
    }
}
