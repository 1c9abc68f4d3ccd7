//! Atomic structures in families with no large "non-zero mod d" clique, and
//! the dummy-element reductions that turn them into subfamilies whose
//! pairwise intersections are all `a mod p`.

use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::clique::{find_clique, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::setcore::{binom, combinations, ElementId, IntersectionGraph, KSet, SetFamily};

/// Members of sizes divisible by `d`, each with a nonnegative exact weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedFamily {
    n: usize,
    members: Vec<KSet>,
    weights: Vec<BigRational>,
}

impl WeightedFamily {
    pub fn new(n: usize, members: Vec<KSet>, weights: Vec<BigRational>) -> Result<Self> {
        if members.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} members but {} weights",
                members.len(),
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| *w < BigRational::zero()) {
            return Err(Error::InvalidParameter(format!("weight of member {i} is negative")));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, m) in members.iter().enumerate() {
            if m.max_elem().is_some_and(|x| x as usize >= n) {
                return Err(Error::InvalidFamily(format!("member {i} has an id >= n={n}")));
            }
            if !seen.insert(m) {
                return Err(Error::InvalidFamily(format!("duplicate set {m} (member {i})")));
            }
        }
        Ok(WeightedFamily { n, members, weights })
    }

    pub fn uniform(f: &SetFamily) -> Self {
        WeightedFamily {
            n: f.n(),
            members: f.members().to_vec(),
            weights: vec![BigRational::one(); f.len()],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn members(&self) -> &[KSet] {
        &self.members
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn total_weight(&self) -> BigRational {
        self.weights.iter().fold(BigRational::zero(), |acc, w| acc + w)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicStructure {
    pub atoms: Vec<KSet>,
    pub subfamily: Vec<usize>,
    #[serde(with = "crate::ratio_serde")]
    pub achieved_weight: BigRational,
    #[serde(with = "crate::ratio_serde")]
    pub required_weight: BigRational,
}

/// `1 / (d * binom(k, d-1) * m)`.
pub fn weight_factor(k: usize, d: usize, m: usize) -> BigRational {
    let den = d as u128 * binom(k as u64, (d - 1) as u64) * m as u128;
    BigRational::new(BigInt::one(), BigInt::from(den))
}

fn scaled(factor: &BigRational, size: usize, d: usize, w: &BigRational) -> BigRational {
    num_traits::pow(factor.clone(), size / d) * w
}

/// `w'(F) = factor^(|F|/d) * w(F)` for every member.
pub fn new_weights(wf: &WeightedFamily, k: usize, d: usize, m: usize) -> Vec<BigRational> {
    let factor = weight_factor(k, d, m);
    wf.members
        .iter()
        .zip(&wf.weights)
        .map(|(s, w)| scaled(&factor, s.len(), d, w))
        .collect()
}

fn check_shape(wf: &WeightedFamily, k: usize, d: usize, m: usize) -> Result<()> {
    if d == 0 || k < d || m == 0 {
        return Err(Error::InvalidParameter(format!(
            "need k >= d >= 1 and m >= 1 (k={k}, d={d}, m={m})"
        )));
    }
    for (i, s) in wf.members.iter().enumerate() {
        if s.len() > k || s.len() % d != 0 {
            return Err(Error::InvalidFamily(format!(
                "member {i} has size {}, need a multiple of {d} at most {k}",
                s.len()
            )));
        }
    }
    Ok(())
}

/// Graph on members joining pairs whose intersection is not a multiple of `d`.
fn nonzero_mod_graph(members: &[KSet], d: usize) -> IntersectionGraph {
    let n = members.len();
    let mut adj = vec![FixedBitSet::with_capacity(n); n];
    for i in 0..n {
        for j in i + 1..n {
            if !crate::setcore::intersection_size(&members[i], &members[j]).is_multiple_of(d) {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    IntersectionGraph::from_adjacency(adj)
}

/// Integer weights proportional to `w`, all comparisons being scale-free:
/// every weight is multiplied by the lcm of the denominators.
fn integer_weights(weights: &[BigRational]) -> (Vec<BigInt>, BigInt) {
    use num_integer::Integer;
    let lcm = weights.iter().fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
    let ints = weights.iter().map(|w| w.numer() * (&lcm / w.denom())).collect();
    (ints, lcm)
}

/// Recursively peels off `d`-sets `X_0` (every kept member contains all or
/// none of it) until no element carries weight.
///
/// Internally `w'(G)` is represented as `u(G) * D^(k/d - |G|/d)` with
/// `D = d * binom(k, d-1) * m`, i.e. scaled by `D^(k/d)`, so only integer
/// additions are needed.
pub fn atomic_extract(wf: &WeightedFamily, k: usize, d: usize, m: usize, verify: bool) -> Result<AtomicStructure> {
    check_shape(wf, k, d, m)?;
    if verify {
        let g = nonzero_mod_graph(&wf.members, d);
        if let Some(c) = find_clique(&g, m, DEFAULT_CAP.max(wf.len()))? {
            return Err(Error::CliqueFound(c));
        }
    }
    let (ints, lcm) = integer_weights(&wf.weights);
    let raw = atomic_extract_int(&wf.members, &ints, k, d, m)?;
    let scale = lcm * &raw.scale;
    let structure = AtomicStructure {
        atoms: raw.atoms,
        subfamily: raw.subfamily,
        achieved_weight: BigRational::new(raw.achieved.clone(), scale.clone()),
        required_weight: BigRational::new(raw.required.clone(), scale),
    };
    if raw.achieved < raw.required {
        return Err(Error::GuaranteeViolated(format!(
            "atomic subfamily weighs {}, below {}",
            structure.achieved_weight, structure.required_weight
        )));
    }
    Ok(structure)
}

/// Atomic structure with weights left as unreduced integers over `scale`.
pub(crate) struct RawAtomic {
    pub atoms: Vec<KSet>,
    pub subfamily: Vec<usize>,
    pub achieved: BigInt,
    pub required: BigInt,
    pub scale: BigInt,
}

pub(crate) fn atomic_extract_int(members: &[KSet], ints: &[BigInt], k: usize, d: usize, m: usize) -> Result<RawAtomic> {
    let levels = k / d;
    let big_d = BigInt::from(d as u128 * binom(k as u64, (d - 1) as u64) * m as u128);
    let claim = BigInt::from(binom(k as u64, (d - 1) as u64) * m as u128);
    let pow_d: Vec<BigInt> = (0..=levels).map(|e| num_traits::pow(big_d.clone(), e)).collect();
    let lift = |size: usize, u: &BigInt| u * &pow_d[levels - size / d];

    let mut work: BTreeMap<KSet, BigInt> = BTreeMap::new();
    for (s, w) in members.iter().zip(ints) {
        *work.entry(s.clone()).or_insert_with(BigInt::zero) += w;
    }
    let mut atoms: Vec<KSet> = Vec::new();
    loop {
        let entries: Vec<(&KSet, BigInt)> = work.iter().map(|(s, u)| (s, lift(s.len(), u))).collect();
        let mut wx: BTreeMap<ElementId, BigInt> = BTreeMap::new();
        for (s, w) in &entries {
            for &x in s.elems() {
                *wx.entry(x).or_insert_with(BigInt::zero) += w;
            }
        }
        // Largest w'_x, smallest id on ties.
        let mut top: Option<(ElementId, &BigInt)> = None;
        for (&x, w) in &wx {
            if top.is_none_or(|(_, bw)| w > bw) {
                top = Some((x, w));
            }
        }
        let Some((x, wmax)) = top else { break };
        if wmax.is_zero() {
            break;
        }

        let h: Vec<&(&KSet, BigInt)> = entries.iter().filter(|(s, _)| s.contains(x)).collect();
        let mut best_f0 = 0;
        let mut best_nb = BigInt::zero();
        for (i, (f0, w0)) in h.iter().map(|e| (e.0, &e.1)).enumerate() {
            let mut nb = w0.clone();
            for (j, (g, wg)) in h.iter().map(|e| (e.0, &e.1)).enumerate() {
                if i != j && crate::setcore::intersection_size(f0, g).is_multiple_of(d) {
                    nb += wg;
                }
            }
            if i == 0 || nb > best_nb {
                best_nb = nb;
                best_f0 = i;
            }
        }
        let f0 = h[best_f0].0;
        let rest: Vec<ElementId> = f0.elems().iter().copied().filter(|&y| y != x).collect();
        let mut best_x0: Option<(KSet, BigInt)> = None;
        for pick in combinations(rest.len(), d - 1) {
            let x0 = KSet::from_unsorted(pick.iter().map(|&i| rest[i]).chain([x]));
            let w: BigInt = entries
                .iter()
                .filter(|(s, _)| x0.is_subset(s))
                .fold(BigInt::zero(), |acc, (_, w)| acc + w);
            let better = match &best_x0 {
                None => true,
                Some((bx, bw)) => w > *bw || (w == *bw && x0 < *bx),
            };
            if better {
                best_x0 = Some((x0, w));
            }
        }
        let (x0, wx0) = best_x0.ok_or_else(|| {
            Error::GuaranteeViolated(format!("member {f0} containing {x} has fewer than d={d} elements"))
        })?;
        if &wx0 * &claim < *wmax {
            return Err(Error::GuaranteeViolated(format!(
                "no heavy d-set through element {x}; the family has an m-clique of nonzero residues"
            )));
        }

        let mut next: BTreeMap<KSet, BigInt> = BTreeMap::new();
        for (s, u) in work {
            let meet = crate::setcore::intersection_size(&s, &x0);
            let key = if meet == 0 {
                s
            } else if meet == d {
                s.difference(&x0)
            } else {
                continue;
            };
            *next.entry(key).or_insert_with(BigInt::zero) += u;
        }
        work = next;
        atoms.push(x0);
    }

    let subfamily: Vec<usize> = (0..members.len())
        .filter(|&i| is_union_of(&members[i], &atoms))
        .collect();
    let achieved: BigInt = subfamily.iter().fold(BigInt::zero(), |acc, &i| acc + &ints[i]) * &pow_d[levels];
    let required: BigInt = members
        .iter()
        .zip(ints)
        .fold(BigInt::zero(), |acc, (s, w)| acc + lift(s.len(), w));
    Ok(RawAtomic {
        atoms,
        subfamily,
        achieved,
        required,
        scale: pow_d[levels].clone(),
    })
}

pub(crate) fn is_union_of(s: &KSet, atoms: &[KSet]) -> bool {
    let mut covered = 0;
    for a in atoms {
        let meet = crate::setcore::intersection_size(s, a);
        if meet == a.len() {
            covered += meet;
        } else if meet != 0 {
            return false;
        }
    }
    covered == s.len()
}

/// Result of the `a mod p` reduction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModularExtraction {
    pub subfamily: Vec<usize>,
    #[serde(with = "crate::ratio_serde")]
    pub guaranteed_fraction: BigRational,
    /// Uniformity after padding (a multiple of `p`).
    pub padded_k: usize,
    pub shared_dummies: Vec<ElementId>,
    pub dummies_per_set: usize,
    pub structure: AtomicStructure,
}

/// Uniformity after the dummy padding for `(k, p, a)`.
pub fn padded_uniformity(k: usize, p: usize, a: usize) -> usize {
    let kk = if a == 0 { k } else { k + (p - a) };
    kk.div_ceil(p) * p
}

/// `(1 / (p * binom(k', p-1) * m))^(k'/p)` with `k'` the padded uniformity.
pub fn modular_fraction(k: usize, p: usize, a: usize, m: usize) -> BigRational {
    let kp = padded_uniformity(k, p, a);
    num_traits::pow(weight_factor(kp, p, m), kp / p)
}

/// Sizes in `[0, k-1]` that are not `a mod p`.
pub fn forbidden_sizes(k: usize, p: usize, a: usize) -> crate::setcore::SizeSet {
    crate::setcore::SizeSet::new((0..k).filter(|s| s % p != a))
}

/// Pads with dummies so that every allowed intersection becomes `0 mod p`,
/// extracts an atomic structure, and maps back.
pub fn reduce_and_extract_mod(
    f: &SetFamily,
    p: usize,
    a: usize,
    m: usize,
    verify: bool,
    weights: Option<&[BigRational]>,
) -> Result<ModularExtraction> {
    check_mod_params(f.k(), p, a, m)?;
    let k = f.k();
    let forbidden = forbidden_sizes(k, p, a);
    if verify {
        if let Some(c) = crate::sunflower::find_l_clique(f, &forbidden, m, DEFAULT_CAP.max(f.len()))? {
            return Err(Error::CliqueFound(c));
        }
    }
    let (members, total, shared_dummies, per_set) = pad_members(f, p, a)?;
    let kp = padded_uniformity(k, p, a);
    let w = match weights {
        Some(w) => w.to_vec(),
        None => vec![BigRational::one(); f.len()],
    };
    let wf = WeightedFamily::new(total, members, w)?;
    let structure = atomic_extract(&wf, kp, p, m, false)?;
    let subfamily = structure.subfamily.clone();
    check_residues(f, p, a, &subfamily)?;
    Ok(ModularExtraction {
        subfamily,
        guaranteed_fraction: modular_fraction(k, p, a, m),
        padded_k: kp,
        shared_dummies,
        dummies_per_set: per_set,
        structure,
    })
}

pub(crate) fn check_mod_params(k: usize, p: usize, a: usize, m: usize) -> Result<()> {
    if p < 2 || a >= p {
        return Err(Error::InvalidParameter(format!(
            "need p >= 2 and a in [0,p-1] (p={p}, a={a})"
        )));
    }
    if m < 2 {
        return Err(Error::InvalidParameter(format!("m must be at least 2, got {m}")));
    }
    if a != 0 && k < p {
        return Err(Error::InvalidParameter(format!("a != 0 needs k >= p (k={k}, p={p})")));
    }
    Ok(())
}

/// Subfamily indices only, for integer weights; skips building the exact
/// rational structure.
pub(crate) fn extract_mod_int(f: &SetFamily, p: usize, a: usize, m: usize, weights: &[BigInt]) -> Result<Vec<usize>> {
    let (members, _, _, _) = pad_members(f, p, a)?;
    let kp = padded_uniformity(f.k(), p, a);
    let raw = atomic_extract_int(&members, weights, kp, p, m)?;
    if raw.achieved < raw.required {
        return Err(Error::GuaranteeViolated(
            "atomic subfamily below its required weight".into(),
        ));
    }
    check_residues(f, p, a, &raw.subfamily)?;
    Ok(raw.subfamily)
}

fn check_residues(f: &SetFamily, p: usize, a: usize, subfamily: &[usize]) -> Result<()> {
    for (x, &i) in subfamily.iter().enumerate() {
        for &j in &subfamily[x + 1..] {
            if f.inter(i, j) % p != a % p {
                return Err(Error::GuaranteeViolated(format!(
                    "members {i} and {j} intersect in {} elements, not {a} mod {p}",
                    f.inter(i, j)
                )));
            }
        }
    }
    Ok(())
}

/// Members padded with `p - a` shared dummies (when `a != 0`) and private
/// dummies up to a multiple of `p`.
fn pad_members(f: &SetFamily, p: usize, a: usize) -> Result<(Vec<KSet>, usize, Vec<ElementId>, usize)> {
    let k = f.k();
    let shared = if a == 0 { 0 } else { p - a };
    let kp = padded_uniformity(k, p, a);
    let per_set = kp - k - shared;
    let base = f.n() as u64;
    let shared_dummies: Vec<ElementId> = (0..shared as u64).map(|i| (base + i) as ElementId).collect();
    let first_unique = base + shared as u64;
    let total = first_unique + (per_set * f.len()) as u64;
    if total > u32::MAX as u64 {
        return Err(Error::InvalidParameter("padded ground set too large".into()));
    }
    let members: Vec<KSet> = f
        .members()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let own = (0..per_set).map(|j| (first_unique + (i * per_set + j) as u64) as ElementId);
            KSet::from_unsorted(
                s.elems()
                    .iter()
                    .copied()
                    .chain(shared_dummies.iter().copied())
                    .chain(own),
            )
        })
        .collect();
    Ok((members, total as usize, shared_dummies, per_set))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks(v: &[u32]) -> KSet {
        KSet::new(v.to_vec()).unwrap()
    }

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn new_weights_examples() {
        let wf = WeightedFamily::new(3, vec![ks(&[1, 2])], vec![r(1, 1)]).unwrap();
        assert_eq!(new_weights(&wf, 2, 2, 2), vec![r(1, 8)]);
        let wf = WeightedFamily::new(3, vec![KSet::empty()], vec![r(3, 1)]).unwrap();
        assert_eq!(new_weights(&wf, 2, 2, 2), vec![r(3, 1)]);
        let wf = WeightedFamily::new(5, vec![ks(&[1, 2, 3, 4])], vec![r(1, 1)]).unwrap();
        assert_eq!(new_weights(&wf, 4, 2, 3), vec![r(1, 576)]);
    }

    #[test]
    fn already_atomic() {
        let wf = WeightedFamily::new(5, vec![ks(&[1, 2]), ks(&[3, 4])], vec![r(1, 1), r(1, 1)]).unwrap();
        let s = atomic_extract(&wf, 2, 2, 2, true).unwrap();
        assert_eq!(s.atoms, vec![ks(&[1, 2]), ks(&[3, 4])]);
        assert_eq!(s.subfamily, vec![0, 1]);
        assert_eq!(s.achieved_weight, r(2, 1));
        assert_eq!(s.required_weight, r(1, 4));
    }

    #[test]
    fn overlapping_pair() {
        let wf = WeightedFamily::new(4, vec![ks(&[1, 2]), ks(&[2, 3])], vec![r(1, 1), r(1, 1)]).unwrap();
        let s = atomic_extract(&wf, 2, 2, 3, true).unwrap();
        assert!(!s.subfamily.is_empty());
        assert_eq!(s.required_weight, r(1, 6));
    }

    #[test]
    fn empty_member_only() {
        let wf = WeightedFamily::new(1, vec![KSet::empty()], vec![r(1, 1)]).unwrap();
        let s = atomic_extract(&wf, 2, 2, 2, true).unwrap();
        assert!(s.atoms.is_empty());
        assert_eq!(s.subfamily, vec![0]);
    }

    #[test]
    fn verify_reports_clique() {
        let wf = WeightedFamily::new(4, vec![ks(&[0, 1]), ks(&[1, 2]), ks(&[0, 2])], vec![r(1, 1); 3]).unwrap();
        assert!(matches!(atomic_extract(&wf, 2, 2, 3, true), Err(Error::CliqueFound(_))));
    }

    #[test]
    fn fraction_examples() {
        // k' = 2, so the exponent is 1: 1/(2 * binom(2,1) * 2).
        assert_eq!(modular_fraction(2, 2, 0, 2), r(1, 8));
        assert_eq!(padded_uniformity(2, 2, 1), 4);
        assert_eq!(modular_fraction(2, 2, 1, 3), r(1, 576));
    }

    #[test]
    fn dummy_layout() {
        // k=3, p=2, a=1: one shared dummy, k''=4, no per-set padding.
        let f = SetFamily::from_sets(3, 6, &[vec![0, 1, 2], vec![2, 3, 4]]).unwrap();
        let out = reduce_and_extract_mod(&f, 2, 1, 3, true, None).unwrap();
        assert_eq!(out.shared_dummies, vec![6]);
        assert_eq!(out.dummies_per_set, 0);
        assert_eq!(out.padded_k, 4);
        // k=3, p=2, a=0: one unique dummy per set.
        let out = reduce_and_extract_mod(&f, 2, 0, 3, true, None).unwrap();
        assert!(out.shared_dummies.is_empty());
        assert_eq!(out.dummies_per_set, 1);
    }

    #[test]
    fn block_unions_are_kept() {
        // Unions of two of the blocks {0,1},{2,3},{4,5},{6,7}: already atomic.
        let blocks = [[0u32, 1], [2, 3], [4, 5], [6, 7]];
        let sets: Vec<Vec<u32>> = combinations(4, 2)
            .into_iter()
            .map(|c| c.iter().flat_map(|&i| blocks[i]).collect())
            .collect();
        let f = SetFamily::from_sets(4, 8, &sets).unwrap();
        let out = reduce_and_extract_mod(&f, 2, 0, 2, false, None).unwrap();
        let need = modular_fraction(4, 2, 0, 2) * BigRational::from_integer(BigInt::from(f.len()));
        assert!(BigRational::from_integer(BigInt::from(out.subfamily.len())) >= need);
    }
}
