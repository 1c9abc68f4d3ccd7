//! Exhaustive verifiers and exact small-scale optimizers.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::time::Instant;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::certificate::CertificateResult;
use crate::clique::{max_clique, max_independent_set};
use crate::error::{Error, Result};
use crate::modular::{new_weights, AtomicStructure, WeightedFamily};
use crate::setcore::{build_graph_sizes, KSet, SetFamily, SizeSet};
use crate::sunflower::{petal_count_at_least, SunflowerWitness};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleReport {
    pub check: String,
    pub params: Value,
    pub verdict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub elapsed_ms: f64,
}

impl OracleReport {
    fn new(check: &str, params: Value, start: Instant) -> Self {
        OracleReport {
            check: check.into(),
            params,
            verdict: true,
            witness: None,
            failures: Vec::new(),
            notes: Vec::new(),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        }
    }

    fn fail(&mut self, msg: String) {
        self.verdict = false;
        if self.failures.len() < 20 {
            self.failures.push(msg);
        }
    }
}

/// Maximum subfamily avoiding intersection sizes in `l` (maximum independent set of `G_F`).
pub fn exact_max_avoiding(f: &SetFamily, l: &SizeSet, cap: usize) -> Result<(usize, Vec<usize>)> {
    check_cap(f, cap)?;
    let mis = max_independent_set(&build_graph_sizes(f, l), cap)?;
    Ok((mis.len(), mis))
}

/// Largest `L`-clique.
pub fn exact_clique_number(f: &SetFamily, l: &SizeSet, cap: usize) -> Result<usize> {
    check_cap(f, cap)?;
    Ok(max_clique(&build_graph_sizes(f, l), cap)?.len())
}

fn check_cap(f: &SetFamily, cap: usize) -> Result<()> {
    if f.len() > cap {
        return Err(Error::CapExceeded(format!(
            "{} members exceeds cap {cap}; raise DELTASYS_CAP or sample a subfamily",
            f.len()
        )));
    }
    Ok(())
}

/// Exhaustive over every subset of every member whose size lies in `l`, with
/// an exact matching search in each link. Returns `(true, None)` when no
/// `L`-sunflower with `m` petals exists.
pub fn verify_no_l_sunflower(f: &SetFamily, l: &SizeSet, m: usize) -> (bool, Option<SunflowerWitness>) {
    let mut seen: HashSet<KSet> = HashSet::new();
    for member in f.members() {
        for a in member.subsets() {
            if !l.contains(a.len()) || !seen.insert(a.clone()) {
                continue;
            }
            if petal_count_at_least(f, &a, m) >= m {
                let w =
                    crate::sunflower::max_sunflower(f, &a, crate::sunflower::Mode::Exact).expect("kernel is covered");
                let petals = w.petal_indices[..m].to_vec();
                return (
                    false,
                    Some(SunflowerWitness {
                        kernel: a,
                        petal_indices: petals,
                    }),
                );
            }
        }
    }
    (true, None)
}

/// Longest strictly decreasing sequence in `l` with nonincreasing consecutive
/// differences, by dynamic programming over (last element, last difference).
pub fn longest_convex_decreasing(l: &BTreeSet<usize>) -> usize {
    if l.is_empty() {
        return 0;
    }
    let elems: Vec<usize> = l.iter().rev().copied().collect();
    // best[(y, δ)]: longest sequence ending at y whose last step was δ.
    let mut best: HashMap<(usize, usize), usize> = HashMap::new();
    let mut answer = 1;
    for (j, &y) in elems.iter().enumerate() {
        for &x in &elems[..j] {
            let delta = x - y;
            let prev = best
                .iter()
                .filter(|(&(end, d), _)| end == x && d >= delta)
                .map(|(_, &len)| len)
                .max()
                .unwrap_or(1);
            let len = prev + 1;
            let e = best.entry((y, delta)).or_insert(0);
            *e = (*e).max(len);
            answer = answer.max(len);
        }
    }
    answer
}

/// Reference implementation by enumerating all subsets of `l` (small `l` only).
pub fn longest_convex_decreasing_brute(l: &BTreeSet<usize>) -> usize {
    let elems: Vec<usize> = l.iter().rev().copied().collect();
    let mut best = 0;
    for mask in 0u32..1 << elems.len() {
        let seq: Vec<usize> = (0..elems.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| elems[i])
            .collect();
        let convex = seq.windows(3).all(|w| 2 * w[1] <= w[0] + w[2]);
        if convex {
            best = best.max(seq.len());
        }
    }
    best
}

/// `⌊(k−1)/p⌋ + 1 + (p−1)(p−2)`, which is `k/p + (p−1)(p−2)` when `p | k`.
pub fn convex_residue_bound(k: usize, p: usize) -> usize {
    k.saturating_sub(1) / p + 1 + (p - 1) * (p - 2)
}

const PROP45_NODE_CAP: usize = 50_000_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Prop45Outcome {
    /// A counterexample family as bitmasks over `X`, if one was found.
    pub family: Option<Vec<Vec<u32>>>,
    pub nodes: usize,
    pub note: String,
}

/// Searches for an intersection-closed family on `X` (`|X| <= 7`) whose member
/// sizes lie in `L` mod `p` and which covers every subset of size at most `|L|`.
///
/// Any such family contains the intersection-closure of its maximal members,
/// which is again a solution. The search therefore builds generator sets:
/// branch on the first uncovered small subset, try each admissible superset
/// as a new generator, and prune as soon as the closure has a member of
/// inadmissible size (closures only grow). Earlier siblings are excluded from
/// later branches. This is exhaustive.
pub fn prop45_search(x_size: usize, p: usize, l: &BTreeSet<usize>) -> Result<Prop45Outcome> {
    if x_size > 7 {
        return Err(Error::CapExceeded(format!("|X| = {x_size} > 7")));
    }
    if p < 2 || l.iter().any(|&r| r >= p) {
        return Err(Error::InvalidParameter(format!("L must be residues mod p={p}")));
    }
    if l.contains(&(x_size % p)) {
        return Err(Error::InvalidParameter(format!("|X| mod p = {} lies in L", x_size % p)));
    }
    let s = l.len();
    let full = 1u32 << x_size;
    let admissible: Vec<bool> = (0..full).map(|m| l.contains(&(m.count_ones() as usize % p))).collect();
    let targets: Vec<u32> = (0..full).filter(|m| m.count_ones() as usize <= s).collect();
    let mut st = Search {
        admissible,
        targets,
        full,
        nodes: 0,
        found: None,
    };
    let mut closure = vec![false; full as usize];
    let mut excluded = vec![false; full as usize];
    st.go(&mut Vec::new(), &mut closure, &mut excluded)?;
    let family = st.found.map(|c| {
        (0..full)
            .filter(|&m| c[m as usize])
            .map(|m| (0..x_size as u32).filter(|b| m >> b & 1 == 1).collect())
            .collect()
    });
    Ok(Prop45Outcome {
        family,
        nodes: st.nodes,
        note: "exhaustive over generating antichains with closure pruning".into(),
    })
}

struct Search {
    admissible: Vec<bool>,
    targets: Vec<u32>,
    full: u32,
    nodes: usize,
    found: Option<Vec<bool>>,
}

impl Search {
    fn go(&mut self, gens: &mut Vec<u32>, closure: &mut Vec<bool>, excluded: &mut Vec<bool>) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > PROP45_NODE_CAP {
            return Err(Error::CapExceeded(format!("search exceeded {PROP45_NODE_CAP} nodes")));
        }
        let uncovered = self
            .targets
            .iter()
            .copied()
            .find(|&t| !gens.iter().any(|&g| g & t == t));
        let Some(t) = uncovered else {
            self.found = Some(closure.clone());
            return Ok(true);
        };
        let candidates: Vec<u32> = (0..self.full)
            .filter(|&c| c & t == t && self.admissible[c as usize] && !excluded[c as usize])
            .collect();
        let mut newly_excluded = Vec::new();
        let mut result = false;
        for c in candidates {
            // Closure of gens ∪ {c} is closure ∪ {c} ∪ {c ∩ y : y ∈ closure}.
            let mut added = Vec::new();
            let mut ok = true;
            let new_sets: Vec<u32> = std::iter::once(c)
                .chain((0..self.full).filter(|&y| closure[y as usize]).map(|y| y & c))
                .collect();
            for z in new_sets {
                if !closure[z as usize] {
                    if !self.admissible[z as usize] {
                        ok = false;
                        break;
                    }
                    closure[z as usize] = true;
                    added.push(z);
                }
            }
            if ok {
                gens.push(c);
                let hit = self.go(gens, closure, excluded)?;
                gens.pop();
                if hit {
                    result = true;
                }
            }
            for z in added {
                closure[z as usize] = false;
            }
            if result {
                break;
            }
            excluded[c as usize] = true;
            newly_excluded.push(c);
        }
        for c in newly_excluded {
            excluded[c as usize] = false;
        }
        Ok(result)
    }
}

/// Replays the certificate's defining property: for every `A` with
/// `|A| ∈ [ℓ, k−1]` inside some selected member and not the kernel of an
/// `m`-petal sunflower in `F`, `φ(A)` is defined, lies outside `A`, and lies
/// in every selected member containing `A`.
pub fn verify_certificate(f: &SetFamily, r: &CertificateResult) -> OracleReport {
    let start = Instant::now();
    let mut failures = Vec::new();
    let selected: Vec<&KSet> = r.subfamily.iter().map(|&i| f.member(i)).collect();
    let mut seen: HashSet<KSet> = HashSet::new();
    let mut checked = 0usize;
    for member in &selected {
        for a in member.subsets() {
            if a.len() < r.ell || a.len() >= f.k() || !seen.insert(a.clone()) {
                continue;
            }
            if petal_count_at_least(f, &a, r.m) >= r.m {
                continue;
            }
            checked += 1;
            match r.phi.get(&a) {
                None => failures.push(format!("phi undefined at A={a}")),
                Some(&x) if a.contains(x) => failures.push(format!("phi(A)={x} lies in A={a}")),
                Some(&x) => {
                    for (pos, s) in r.subfamily.iter().zip(&selected) {
                        if a.is_subset(s) && !s.contains(x) {
                            failures.push(format!("A={a}, member {pos}: phi(A)={x} missing"));
                        }
                    }
                }
            }
        }
    }
    let mut rep = OracleReport::new(
        "verify-cert",
        json!({"ell": r.ell, "m": r.m, "members": f.len(), "selected": r.subfamily.len(), "kernels_checked": checked}),
        start,
    );
    for msg in failures {
        rep.fail(msg);
    }
    rep
}

/// Checks atoms are disjoint `d`-sets, every selected member is a union of
/// atoms, and the selected weight is at least `Σ w'(F)`, all re-summed exactly.
pub fn verify_atomicity(wf: &WeightedFamily, s: &AtomicStructure, k: usize, d: usize, m: usize) -> OracleReport {
    let start = Instant::now();
    let mut rep = OracleReport::new(
        "verify-atomic",
        json!({"k": k, "d": d, "m": m, "atoms": s.atoms.len(), "selected": s.subfamily.len()}),
        start,
    );
    let mut owner: HashMap<u32, usize> = HashMap::new();
    for (i, atom) in s.atoms.iter().enumerate() {
        if atom.len() != d {
            rep.fail(format!("atom {i} = {atom} has size {}, expected {d}", atom.len()));
        }
        for &x in atom.elems() {
            if let Some(j) = owner.insert(x, i) {
                rep.fail(format!("atoms {j} and {i} share element {x}"));
            }
        }
    }
    for &idx in &s.subfamily {
        let Some(member) = wf.members().get(idx) else {
            rep.fail(format!("selected index {idx} out of range"));
            continue;
        };
        let mut hit: HashMap<usize, usize> = HashMap::new();
        for &x in member.elems() {
            match owner.get(&x) {
                None => rep.fail(format!("member {idx}: element {x} lies in no atom")),
                Some(&a) => *hit.entry(a).or_insert(0) += 1,
            }
        }
        for (a, c) in hit {
            if c != s.atoms[a].len() {
                rep.fail(format!("member {idx} splits atom {a}"));
            }
        }
    }
    let achieved = s
        .subfamily
        .iter()
        .filter_map(|&i| wf.weights().get(i))
        .fold(BigRational::zero(), |acc, w| acc + w);
    let required = new_weights(wf, k, d, m)
        .into_iter()
        .fold(BigRational::zero(), |acc, w| acc + w);
    if achieved != s.achieved_weight {
        rep.fail(format!(
            "recorded achieved weight {} differs from re-summed {achieved}",
            s.achieved_weight
        ));
    }
    if required != s.required_weight {
        rep.fail(format!(
            "recorded required weight {} differs from re-summed {required}",
            s.required_weight
        ));
    }
    if achieved < required {
        rep.fail(format!("achieved weight {achieved} is below {required}"));
    }
    rep.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    rep
}

/// Wraps a search result as a report.
pub fn report(
    check: &str,
    params: Value,
    verdict: bool,
    witness: Option<Value>,
    notes: Vec<String>,
    start: Instant,
) -> OracleReport {
    let mut r = OracleReport::new(check, params, start);
    r.verdict = verdict;
    r.witness = witness;
    r.notes = notes;
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::colour_certificate;
    use crate::constructions::{chain_family, parity_triple_family};
    use crate::modular::atomic_extract;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn fam(k: usize, n: usize, sets: &[Vec<u32>]) -> SetFamily {
        SetFamily::from_sets(k, n, sets).unwrap()
    }

    #[test]
    fn max_avoiding_examples() {
        let disjoint = fam(2, 6, &[vec![0, 1], vec![2, 3], vec![4, 5]]);
        assert_eq!(exact_max_avoiding(&disjoint, &SizeSet::new([1]), 100).unwrap().0, 3);
        let star = fam(2, 4, &[vec![0, 1], vec![0, 2], vec![0, 3]]);
        assert_eq!(exact_max_avoiding(&star, &SizeSet::new([1]), 100).unwrap().0, 1);
        assert!(exact_max_avoiding(&star, &SizeSet::new([1]), 2).is_err());
    }

    #[test]
    fn chain_max_avoiding_matches_enumeration() {
        let f = chain_family(2, 2, 4).unwrap().family;
        let l = SizeSet::new([1]);
        let (size, _) = exact_max_avoiding(&f, &l, 100).unwrap();
        let brute = (0u32..1 << f.len())
            .filter(|mask| {
                let idx: Vec<usize> = (0..f.len()).filter(|i| mask >> i & 1 == 1).collect();
                f.avoids(&idx, &l)
            })
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap();
        assert_eq!(size, brute);
    }

    #[test]
    fn clique_examples() {
        let tri = fam(2, 3, &[vec![0, 1], vec![1, 2], vec![0, 2]]);
        assert_eq!(exact_clique_number(&tri, &SizeSet::new([1]), 100).unwrap(), 3);
        let disjoint = fam(2, 4, &[vec![0, 1], vec![2, 3]]);
        assert_eq!(exact_clique_number(&disjoint, &SizeSet::new([1]), 100).unwrap(), 1);
        let par = parity_triple_family(4, 5).unwrap().family;
        assert!(exact_clique_number(&par, &SizeSet::new([1, 3]), 100).unwrap() <= 4);
    }

    #[test]
    fn sunflower_oracle_examples() {
        let disjoint = fam(2, 6, &[vec![0, 1], vec![2, 3], vec![4, 5]]);
        let (ok, w) = verify_no_l_sunflower(&disjoint, &SizeSet::new([0]), 3);
        assert!(!ok);
        assert!(w.unwrap().verify(&disjoint));
        let single = fam(2, 2, &[vec![0, 1]]);
        assert!(verify_no_l_sunflower(&single, &SizeSet::new([0, 1]), 2).0);
        let chain = chain_family(3, 2, 3).unwrap().family;
        assert!(verify_no_l_sunflower(&chain, &SizeSet::new([1]), 3).0);
    }

    #[test]
    fn convex_examples() {
        assert_eq!(longest_convex_decreasing(&BTreeSet::from([1, 2, 4, 8])), 4);
        assert_eq!(longest_convex_decreasing(&BTreeSet::new()), 0);
        assert_eq!(longest_convex_decreasing(&BTreeSet::from([5])), 1);
        assert_eq!(longest_convex_decreasing(&BTreeSet::from([0, 1, 2, 3])), 4);
        assert_eq!(longest_convex_decreasing(&BTreeSet::from([0, 2, 3])), 2);
    }

    #[test]
    fn prop45_examples() {
        assert!(prop45_search(1, 2, &BTreeSet::from([0])).unwrap().family.is_none());
        assert!(prop45_search(3, 2, &BTreeSet::from([0])).unwrap().family.is_none());
        assert!(prop45_search(5, 3, &BTreeSet::from([0, 1])).unwrap().family.is_none());
        assert!(prop45_search(4, 2, &BTreeSet::from([0])).is_err());
    }

    #[test]
    fn convex_bound_divisible_case() {
        for p in [2, 3, 5] {
            for k in (p..=30).step_by(p) {
                assert_eq!(convex_residue_bound(k, p), k / p + (p - 1) * (p - 2));
            }
        }
        // k = 15, p = 2: the even residues form a sequence of length 8 > 15/2.
        let l: BTreeSet<usize> = (0..15).filter(|x| x % 2 == 0).collect();
        assert_eq!(longest_convex_decreasing(&l), 8);
        assert_eq!(convex_residue_bound(15, 2), 8);
    }

    #[test]
    fn certificate_fixtures() {
        let single = fam(2, 3, &[vec![0, 1]]);
        let r = colour_certificate(&single, 0, 2, 0).unwrap();
        assert!(verify_certificate(&single, &r).verdict);

        let f = fam(2, 6, &[vec![0, 1], vec![0, 2], vec![3, 4], vec![1, 5]]);
        let mut r = colour_certificate(&f, 1, 3, 0).unwrap();
        assert!(verify_certificate(&f, &r).verdict);
        if let Some((a, x)) = r.phi.iter().next().map(|(a, x)| (a.clone(), *x)) {
            r.phi.insert(a.clone(), a.elems().first().copied().unwrap_or(x));
            let rep = verify_certificate(&f, &r);
            assert!(!rep.verdict);
        }
    }

    #[test]
    fn atomicity_fixtures() {
        let sets = [vec![0, 1, 2, 3], vec![0, 1, 4, 5], vec![2, 3, 4, 5]];
        let f = fam(4, 6, &sets);
        let wf = WeightedFamily::uniform(&f);
        let s = atomic_extract(&wf, 4, 2, 2, true).unwrap();
        assert!(verify_atomicity(&wf, &s, 4, 2, 2).verdict);

        let mut overlapping = s.clone();
        overlapping.atoms = vec![KSet::new(vec![0, 1]).unwrap(), KSet::new(vec![1, 2]).unwrap()];
        assert!(!verify_atomicity(&wf, &overlapping, 4, 2, 2).verdict);

        let mut split = s.clone();
        split.atoms = vec![KSet::new(vec![0, 2]).unwrap(), KSet::new(vec![1, 3]).unwrap()];
        split.subfamily = vec![0];
        assert!(!verify_atomicity(&wf, &split, 4, 2, 2).verdict);

        let mut light = s.clone();
        light.achieved_weight = BigRational::from_integer(BigInt::from(0));
        assert!(!verify_atomicity(&wf, &light, 4, 2, 2).verdict);
    }

    proptest! {
        #[test]
        fn convex_dp_matches_enumeration(l in proptest::collection::btree_set(0usize..30, 0..=10)) {
            prop_assert_eq!(longest_convex_decreasing(&l), longest_convex_decreasing_brute(&l));
        }

        #[test]
        fn excluding_one_residue_bound(k in 1usize..=30, pi in 0usize..3, a_raw in 1usize..5) {
            let p = [2, 3, 5][pi];
            let a = 1 + (a_raw - 1) % (p - 1);
            let l: BTreeSet<usize> = (0..k).filter(|x| x % p != a).collect();
            prop_assert!(longest_convex_decreasing(&l) <= convex_residue_bound(k, p));
        }
    }
}
