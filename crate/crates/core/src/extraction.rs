//! Subfamilies avoiding intersection sizes in `L`, and the delta-system
//! variant with intersection-closed kernel systems.

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::certificate::{cert_fraction, colour_certificate, CertificateResult};
use crate::error::{Error, Result};
use crate::setcore::{first_violation, ElementId, KSet, SetFamily, SizeSet};
use crate::sunflower::{find_l_sunflower, greedy_packing};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ABParams {
    pub a: usize,
    pub b: usize,
}

pub fn compute_ab(l: &SizeSet, k: usize) -> ABParams {
    let a = (0..=k).find(|&i| !l.contains(i)).unwrap_or(k);
    let b = (a..=k).find(|&i| i == k || l.contains(i)).unwrap_or(k);
    ABParams { a, b }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub subfamily: Vec<usize>,
    #[serde(with = "crate::ratio_serde")]
    pub guaranteed_fraction: BigRational,
    pub peeled_elements: Vec<ElementId>,
    pub ab: ABParams,
    pub certificate: Option<CertificateResult>,
}

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn check_spec(l: &SizeSet, k: usize) -> Result<()> {
    if let Some(s) = l.iter().find(|&s| s >= k) {
        return Err(Error::InvalidParameter(format!(
            "intersection size {s} outside [0,{}]",
            k - 1
        )));
    }
    Ok(())
}

/// One peeling step: the element of a greedy maximal matching that lies in
/// the most sets (smallest id on ties).
fn peel_element(sets: &[KSet], n: usize) -> ElementId {
    let bits: Vec<FixedBitSet> = sets.iter().map(|s| s.to_bits(n)).collect();
    let matching = greedy_packing(&bits);
    let mut candidates: Vec<ElementId> = matching.iter().flat_map(|&i| sets[i].elems().iter().copied()).collect();
    candidates.sort_unstable();
    let mut count = vec![0usize; n];
    for s in sets {
        for &x in s.elems() {
            count[x as usize] += 1;
        }
    }
    *candidates
        .iter()
        .max_by_key(|&&u| (count[u as usize], std::cmp::Reverse(u)))
        .expect("nonempty sets have a nonempty matching")
}

/// A subfamily avoiding every intersection size in `l`.
///
/// When `0 ∈ L` the first `a` levels are peeled off by pigeonhole on a
/// maximal matching; the remaining `(k-a)`-uniform family goes through the
/// colour certificate with `ell = b - a`.
pub fn avoid_intersections(f: &SetFamily, l: &SizeSet, m: usize, seed: u64, verify: bool) -> Result<ExtractionResult> {
    let k = f.k();
    if m < 2 {
        return Err(Error::InvalidParameter(format!("m must be at least 2, got {m}")));
    }
    check_spec(l, k)?;
    if verify {
        if let Some(w) = find_l_sunflower(f, l, m) {
            return Err(Error::SunflowerFound(w));
        }
    }
    let ab = compute_ab(l, k);
    if f.is_empty() || l.is_empty() {
        return Ok(ExtractionResult {
            subfamily: (0..f.len()).collect(),
            guaranteed_fraction: BigRational::one(),
            peeled_elements: Vec::new(),
            ab,
            certificate: None,
        });
    }

    let km = (k * m) as u64;
    let mut current: Vec<(usize, KSet)> = f.members().iter().cloned().enumerate().collect();
    let mut peeled = Vec::with_capacity(ab.a);
    for _ in 0..ab.a {
        let sets: Vec<KSet> = current.iter().map(|(_, s)| s.clone()).collect();
        let u = peel_element(&sets, f.n());
        let one = KSet::from_unsorted([u]);
        current = current
            .into_iter()
            .filter(|(_, s)| s.contains(u))
            .map(|(i, s)| (i, s.difference(&one)))
            .collect();
        peeled.push(u);
    }
    let peel_fraction = BigRational::one() / BigRational::from_integer(BigInt::from(km).pow(ab.a as u32));
    log::debug!("peeled {:?}, {} sets remain", peeled, current.len());

    let (subfamily, guaranteed_fraction, certificate) = if ab.a == k {
        (vec![current[0].0], peel_fraction, None)
    } else if ab.b == k {
        (current.iter().map(|(i, _)| *i).collect(), peel_fraction, None)
    } else {
        let inner = SetFamily::new(k - ab.a, f.n(), current.iter().map(|(_, s)| s.clone()).collect())?;
        let cert = colour_certificate(&inner, ab.b - ab.a, m, seed)?;
        let chosen = cert.subfamily.iter().map(|&j| current[j].0).collect();
        (
            chosen,
            peel_fraction * cert_fraction(k - ab.a, ab.b - ab.a, m),
            Some(cert),
        )
    };
    let mut subfamily = subfamily;
    subfamily.sort_unstable();

    let attach = KSet::from_unsorted(peeled.iter().copied());
    for (i, s) in &current {
        if s.union(&attach) != *f.member(*i) {
            return Err(Error::GuaranteeViolated(format!(
                "re-attaching peeled elements does not reproduce member {i}"
            )));
        }
    }
    if let Some((i, j)) = first_violation(f, &subfamily, l) {
        return Err(Error::GuaranteeViolated(format!(
            "members {i} and {j} intersect in {} elements",
            f.inter(i, j)
        )));
    }
    let need = &guaranteed_fraction * BigRational::from_integer(BigInt::from(f.len()));
    if BigRational::from_integer(BigInt::from(subfamily.len())) < need {
        return Err(Error::GuaranteeViolated(format!(
            "kept {} of {} members, guarantee is {}",
            subfamily.len(),
            f.len(),
            guaranteed_fraction
        )));
    }
    Ok(ExtractionResult {
        subfamily,
        guaranteed_fraction,
        peeled_elements: peeled,
        ab,
        certificate,
    })
}

/// `(25 * 2^k * k * m)^(-k)`.
pub fn weak_furedi_beta(k: usize, m: usize) -> BigRational {
    let base = 25u64 * (1u64 << k) * k as u64 * m as u64;
    ratio(1, 1) / BigRational::from_integer(BigInt::from(base).pow(k as u32))
}

pub const DEFAULT_CLOSURE_CAP: usize = 1_000_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeakFurediResult {
    pub subfamily: Vec<usize>,
    /// `I_F` for each member of the subfamily (same order), when materialized.
    pub closures: Option<Vec<Vec<KSet>>>,
    pub certificate: CertificateResult,
}

impl WeakFurediResult {
    /// Is `kset` in `I_F` for the `pos`-th member of the subfamily?
    ///
    /// `K ∈ I_F` iff `K = F ∩ ⋂ {G ∈ F' \ {F} : K ⊆ G}` with at least one such `G`.
    pub fn closure_contains(&self, f: &SetFamily, pos: usize, kset: &KSet) -> bool {
        if let Some(c) = &self.closures {
            return c[pos].binary_search(kset).is_ok();
        }
        let base = f.member(self.subfamily[pos]);
        if !kset.is_subset(base) {
            return false;
        }
        let mut acc: Option<KSet> = None;
        for (q, &g) in self.subfamily.iter().enumerate() {
            if q == pos || !kset.is_subset(f.member(g)) {
                continue;
            }
            let next = match acc {
                None => base.intersection(f.member(g)),
                Some(a) => a.intersection(f.member(g)),
            };
            acc = Some(next);
        }
        acc.as_ref() == Some(kset)
    }
}

/// Closure of `{F ∩ G : G ∈ others}` under pairwise intersection, sorted.
pub fn closure_of(base: &KSet, others: impl Iterator<Item = KSet>) -> Vec<KSet> {
    let mut seen: std::collections::BTreeSet<KSet> = others.map(|g| base.intersection(&g)).collect();
    let mut frontier: Vec<KSet> = seen.iter().cloned().collect();
    while let Some(x) = frontier.pop() {
        let current: Vec<KSet> = seen.iter().cloned().collect();
        for y in current {
            let z = x.intersection(&y);
            if seen.insert(z.clone()) {
                frontier.push(z);
            }
        }
    }
    seen.into_iter().collect()
}

pub fn weak_furedi(f: &SetFamily, m: usize, seed: u64) -> Result<WeakFurediResult> {
    weak_furedi_with_cap(f, m, seed, DEFAULT_CLOSURE_CAP)
}

pub fn weak_furedi_with_cap(f: &SetFamily, m: usize, seed: u64, cap: usize) -> Result<WeakFurediResult> {
    let certificate = colour_certificate(f, 0, m, seed)?;
    let subfamily = certificate.subfamily.clone();
    let need = weak_furedi_beta(f.k(), m) * BigRational::from_integer(BigInt::from(f.len()));
    if BigRational::from_integer(BigInt::from(subfamily.len())) < need {
        return Err(Error::GuaranteeViolated(format!(
            "kept {} of {} members, below the delta-system constant",
            subfamily.len(),
            f.len()
        )));
    }
    let work = subfamily
        .len()
        .saturating_mul(subfamily.len())
        .saturating_mul(1usize << f.k().min(40));
    let closures = (work <= cap).then(|| {
        subfamily
            .iter()
            .map(|&i| {
                closure_of(
                    f.member(i),
                    subfamily.iter().filter(|&&j| j != i).map(|&j| f.member(j).clone()),
                )
            })
            .collect()
    });
    Ok(WeakFurediResult {
        subfamily,
        closures,
        certificate,
    })
}

pub fn is_intersection_closed(family: &[KSet]) -> bool {
    let set: std::collections::HashSet<&KSet> = family.iter().collect();
    family
        .iter()
        .enumerate()
        .all(|(x, a)| family[x + 1..].iter().all(|b| set.contains(&a.intersection(b))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sunflower::petal_count_at_least;

    fn ks(v: &[u32]) -> KSet {
        KSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn compute_ab_examples() {
        assert_eq!(compute_ab(&SizeSet::new([0, 1, 3]), 5), ABParams { a: 2, b: 3 });
        assert_eq!(compute_ab(&SizeSet::new([]), 4), ABParams { a: 0, b: 4 });
        assert_eq!(compute_ab(&SizeSet::new([1]), 3), ABParams { a: 0, b: 1 });
        assert_eq!(compute_ab(&SizeSet::new([0, 1]), 2), ABParams { a: 2, b: 2 });
    }

    #[test]
    fn empty_l_is_identity() {
        let f = SetFamily::from_sets(2, 4, &[vec![0, 1], vec![1, 2], vec![2, 3]]).unwrap();
        let r = avoid_intersections(&f, &SizeSet::new([]), 2, 0, true).unwrap();
        assert_eq!(r.subfamily, vec![0, 1, 2]);
        assert_eq!(r.guaranteed_fraction, BigRational::one());
    }

    #[test]
    fn peeling_on_disjoint_sets() {
        // m-1 = 2 disjoint sets, L = {0}: peeling keeps one of them.
        let f = SetFamily::from_sets(2, 4, &[vec![0, 1], vec![2, 3]]).unwrap();
        let r = avoid_intersections(&f, &SizeSet::new([0]), 3, 0, true).unwrap();
        assert_eq!(r.peeled_elements, vec![0]);
        assert!(!r.subfamily.is_empty());
        for &i in &r.subfamily {
            assert!(f.member(i).contains(r.peeled_elements[0]));
        }
    }

    #[test]
    fn precondition_is_checked() {
        let f = SetFamily::from_sets(2, 4, &[vec![0, 1], vec![0, 2], vec![0, 3]]).unwrap();
        let err = avoid_intersections(&f, &SizeSet::new([1]), 3, 0, true).unwrap_err();
        assert!(matches!(err, Error::SunflowerFound(_)), "{err}");
    }

    #[test]
    fn star_with_l_one() {
        // A star with m-1 petals through 0 plus extras.
        let f = SetFamily::from_sets(2, 6, &[vec![0, 1], vec![0, 2], vec![3, 4], vec![4, 5]]).unwrap();
        let l = SizeSet::new([1]);
        let r = avoid_intersections(&f, &l, 3, 5, true).unwrap();
        assert!(first_violation(&f, &r.subfamily, &l).is_none());
        assert_eq!(r.guaranteed_fraction, cert_fraction(2, 1, 3));
    }

    #[test]
    fn beta_example() {
        assert_eq!(weak_furedi_beta(2, 2), ratio(1, 160_000));
    }

    #[test]
    fn closed_examples() {
        assert!(is_intersection_closed(&[KSet::empty()]));
        assert!(!is_intersection_closed(&[ks(&[0]), ks(&[1])]));
        assert!(is_intersection_closed(&[ks(&[0]), ks(&[1]), KSet::empty()]));
    }

    #[test]
    fn weak_furedi_single_member() {
        let f = SetFamily::from_sets(2, 2, &[vec![0, 1]]).unwrap();
        let r = weak_furedi(&f, 2, 0).unwrap();
        assert_eq!(r.subfamily, vec![0]);
        assert_eq!(r.closures.as_ref().unwrap()[0], Vec::<KSet>::new());
    }

    #[test]
    fn weak_furedi_on_all_pairs() {
        let sets: Vec<Vec<u32>> = crate::setcore::combinations(5, 2)
            .into_iter()
            .map(|c| c.into_iter().map(|x| x as u32).collect())
            .collect();
        let f = SetFamily::from_sets(2, 5, &sets).unwrap();
        for seed in 0..5 {
            let r = weak_furedi(&f, 2, seed).unwrap();
            let closures = r.closures.as_ref().unwrap();
            for (pos, c) in closures.iter().enumerate() {
                assert!(is_intersection_closed(c));
                for kset in c {
                    assert!(petal_count_at_least(&f, kset, 2) >= 2);
                    assert!(r.closure_contains(&f, pos, kset));
                }
                let base = f.member(r.subfamily[pos]);
                for &j in &r.subfamily {
                    if j != r.subfamily[pos] {
                        assert!(c.contains(&base.intersection(f.member(j))));
                    }
                }
            }
        }
    }

    #[test]
    fn lazy_closure_agrees_with_materialized() {
        let sets: Vec<Vec<u32>> = crate::setcore::combinations(6, 3)
            .into_iter()
            .map(|c| c.into_iter().map(|x| x as u32).collect())
            .collect();
        let f = SetFamily::from_sets(3, 6, &sets).unwrap();
        let full = weak_furedi(&f, 2, 1).unwrap();
        let lazy = weak_furedi_with_cap(&f, 2, 1, 0).unwrap();
        assert!(lazy.closures.is_none());
        let closures = full.closures.as_ref().unwrap();
        for (pos, &i) in full.subfamily.iter().enumerate() {
            let base = f.member(i);
            for sub in base.subsets() {
                assert_eq!(
                    closures[pos].contains(&sub),
                    lazy.closure_contains(&f, pos, &sub),
                    "{sub}"
                );
            }
        }
    }
}
