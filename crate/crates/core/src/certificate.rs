//! Colour certificates.
//!
//! Colour the ground set at random, keep the "good" members, group rainbow
//! palettes into classes whose members pairwise share fewer than `ell`
//! colours, and return the members of the heaviest class. Any `A` with
//! `ell <= |A| < k` whose link has a small cover `psi(A)` then gets a special
//! element `phi(A)` that every selected member containing `A` also contains.

use std::collections::{BTreeMap, HashMap};

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::setcore::{binom, ElementId, KSet, SetFamily};
use crate::sunflower::greedy_packing;

pub const MAX_TRIALS: usize = 1000;
const TRIAL_BATCH: usize = 8;

/// Rational upper approximation of e used wherever the guarantee needs an
/// exact constant.
pub fn e_upper() -> BigRational {
    BigRational::new(BigInt::from(2719), BigInt::from(1000))
}

pub fn palette_size(k: usize, ell: usize, m: usize) -> u64 {
    4 * (1u64 << k) * k as u64 * (k - ell) as u64 * m as u64
}

/// `1 / (binom(k,ell) * (8e * 2^k * k * m)^(k-ell))`, with `e` rounded up so
/// the value is a lower bound for the real constant.
pub fn cert_fraction(k: usize, ell: usize, m: usize) -> BigRational {
    let base = BigRational::from_integer(BigInt::from(8u64 * (1u64 << k) * k as u64 * m as u64)) * e_upper();
    let denom = BigRational::from_integer(BigInt::from(binom(k as u64, ell as u64))) * num_traits::pow(base, k - ell);
    BigRational::one() / denom
}

/// Same constant in floating point with the true `e`.
pub fn cert_fraction_f64(k: usize, ell: usize, m: usize) -> f64 {
    let base = 8.0 * std::f64::consts::E * (1u64 << k) as f64 * k as f64 * m as f64;
    1.0 / (binom(k as u64, ell as u64) as f64 * base.powi((k - ell) as i32))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Colouring {
    pub colour_of: Vec<u32>,
    pub palette_size: u64,
}

impl Colouring {
    pub fn palette(&self, s: &KSet) -> Vec<u32> {
        let mut p: Vec<u32> = s.elems().iter().map(|&x| self.colour_of[x as usize]).collect();
        p.sort_unstable();
        p
    }

    pub fn is_rainbow(&self, s: &KSet) -> bool {
        let p = self.palette(s);
        p.windows(2).all(|w| w[0] != w[1])
    }
}

/// `psi(A)` for every `A` that can matter, i.e. every subset of a member with
/// size in `[ell, k-1]`.
#[derive(Clone, Debug, Default)]
pub struct PsiTable {
    pub ell: usize,
    pub m: usize,
    map: HashMap<KSet, KSet>,
}

impl PsiTable {
    pub fn build(f: &SetFamily, ell: usize, m: usize) -> Self {
        let n_members = f.len();
        let mut containing = vec![FixedBitSet::with_capacity(n_members); f.n()];
        for (i, s) in f.members().iter().enumerate() {
            for &x in s.elems() {
                containing[x as usize].insert(i);
            }
        }
        let mut map = HashMap::new();
        for s in f.members() {
            for a in s.subsets() {
                if a.len() < ell || a.len() >= f.k() || map.contains_key(&a) {
                    continue;
                }
                let mut holders = FixedBitSet::with_capacity(n_members);
                holders.insert_range(..);
                for &x in a.elems() {
                    holders.intersect_with(&containing[x as usize]);
                }
                let abits = a.to_bits(f.n());
                let petals: Vec<FixedBitSet> = holders
                    .ones()
                    .map(|i| {
                        let mut b = f.bits(i).clone();
                        b.difference_with(&abits);
                        b
                    })
                    .collect();
                let chosen = greedy_packing(&petals);
                let cover = if chosen.len() >= m {
                    KSet::empty()
                } else {
                    let mut u = FixedBitSet::with_capacity(f.n());
                    for &c in &chosen {
                        u.union_with(&petals[c]);
                    }
                    KSet::from_unsorted(u.ones().map(|x| x as ElementId))
                };
                map.insert(a, cover);
            }
        }
        PsiTable { ell, m, map }
    }

    pub fn from_map(ell: usize, m: usize, map: HashMap<KSet, KSet>) -> Self {
        PsiTable { ell, m, map }
    }

    pub fn get(&self, a: &KSet) -> Option<&KSet> {
        self.map.get(a)
    }
}

/// Rainbow, and no element of any `psi(A) \ F` (`A ⊂ F`, `|A| >= ell`) shares
/// a colour with `F`.
pub fn is_good(member: &KSet, colouring: &Colouring, psi: &PsiTable) -> bool {
    if !colouring.is_rainbow(member) {
        return false;
    }
    let palette = colouring.palette(member);
    for a in member.subsets() {
        if a.len() < psi.ell || a.len() == member.len() {
            continue;
        }
        let Some(cover) = psi.get(&a) else { continue };
        for &v in cover.elems() {
            if member.contains(v) {
                continue;
            }
            if palette.binary_search(&colouring.colour_of[v as usize]).is_ok() {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateResult {
    pub colouring: Colouring,
    pub palette_class: Vec<Vec<u32>>,
    pub subfamily: Vec<usize>,
    #[serde(with = "phi_serde")]
    pub phi: BTreeMap<KSet, ElementId>,
    pub ell: usize,
    pub m: usize,
    pub trial: usize,
    pub good_count: usize,
}

mod phi_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<KSet, ElementId>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<(&KSet, &ElementId)> = map.iter().collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<KSet, ElementId>, D::Error> {
        let pairs: Vec<(KSet, ElementId)> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().collect())
    }
}

fn sample_colouring(n: usize, palette: u64, seed: u64, trial: usize) -> Colouring {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    Colouring {
        colour_of: (0..n).map(|_| rng.gen_range(0..palette) as u32).collect(),
        palette_size: palette,
    }
}

fn good_members(f: &SetFamily, colouring: &Colouring, psi: &PsiTable) -> Vec<usize> {
    (0..f.len()).filter(|&i| is_good(f.member(i), colouring, psi)).collect()
}

/// Greedy proper colouring of the realized palettes (lexicographic order):
/// two palettes conflict when they share at least `ell` colours.
fn palette_classes(palettes: &[Vec<u32>], ell: usize) -> Vec<usize> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut class_of = vec![0; palettes.len()];
    for (pi, p) in palettes.iter().enumerate() {
        let slot = classes
            .iter()
            .position(|members| members.iter().all(|&q| shared(p, &palettes[q]) < ell));
        let c = match slot {
            Some(c) => c,
            None => {
                classes.push(Vec::new());
                classes.len() - 1
            }
        };
        classes[c].push(pi);
        class_of[pi] = c;
    }
    class_of
}

fn shared(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

pub fn colour_certificate(f: &SetFamily, ell: usize, m: usize, seed: u64) -> Result<CertificateResult> {
    let k = f.k();
    if k == 0 || ell >= k {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= ell < k, got ell={ell}, k={k}"
        )));
    }
    if m < 2 {
        return Err(Error::InvalidParameter(format!("m must be at least 2, got {m}")));
    }
    if f.is_empty() {
        return Err(Error::InvalidFamily("family is empty".into()));
    }
    let palette = palette_size(k, ell, m);
    if palette > u32::MAX as u64 {
        return Err(Error::InvalidParameter(format!("palette size {palette} too large")));
    }
    let psi = PsiTable::build(f, ell, m);
    let threshold = f.len().div_ceil(2);

    let mut best: Option<(usize, Colouring, Vec<usize>)> = None;
    let mut trial = 0;
    while trial < MAX_TRIALS {
        let batch: Vec<usize> = (trial..(trial + TRIAL_BATCH).min(MAX_TRIALS)).collect();
        let results: Vec<(usize, Colouring, Vec<usize>)> = batch
            .par_iter()
            .map(|&t| {
                let c = sample_colouring(f.n(), palette, seed, t);
                let good = good_members(f, &c, &psi);
                (t, c, good)
            })
            .collect();
        let mut accepted = None;
        for r in results {
            if best.as_ref().is_none_or(|b| r.2.len() > b.2.len()) {
                best = Some(r.clone());
            }
            if r.2.len() >= threshold && accepted.is_none() {
                accepted = Some(r);
            }
        }
        if let Some(r) = accepted {
            best = Some(r);
            break;
        }
        trial += TRIAL_BATCH;
    }
    let (trial, colouring, good) = best.expect("at least one trial runs");
    if good.len() < threshold {
        log::warn!(
            "no colouring reached |F|/2 good members in {MAX_TRIALS} trials; using the best ({} of {})",
            good.len(),
            f.len()
        );
    }

    let mut palettes: Vec<Vec<u32>> = good.iter().map(|&i| colouring.palette(f.member(i))).collect();
    palettes.sort();
    palettes.dedup();
    let class_of = palette_classes(&palettes, ell);
    let n_classes = class_of.iter().max().map_or(0, |c| c + 1);
    let mut weight = vec![0usize; n_classes];
    for &i in &good {
        let p = colouring.palette(f.member(i));
        let pi = palettes.binary_search(&p).expect("palette realized");
        weight[class_of[pi]] += 1;
    }
    let chosen = (0..n_classes)
        .max_by_key(|&c| (weight[c], std::cmp::Reverse(c)))
        .unwrap_or(0);
    let palette_class: Vec<Vec<u32>> = palettes
        .iter()
        .zip(&class_of)
        .filter(|(_, &c)| c == chosen)
        .map(|(p, _)| p.clone())
        .collect();
    let subfamily: Vec<usize> = good
        .iter()
        .copied()
        .filter(|&i| palette_class.binary_search(&colouring.palette(f.member(i))).is_ok())
        .collect();

    let mut phi = BTreeMap::new();
    for &i in &subfamily {
        let s = f.member(i);
        for a in s.subsets() {
            if a.len() < ell || a.len() == k || phi.contains_key(&a) {
                continue;
            }
            let Some(cover) = psi.get(&a) else { continue };
            if cover.is_empty() {
                continue;
            }
            // `i` is the lowest-index member of F' containing `a`, since
            // members are visited in increasing order.
            if let Some(&v) = cover.elems().iter().find(|&&v| s.contains(v) && !a.contains(v)) {
                phi.insert(a, v);
            }
        }
    }

    Ok(CertificateResult {
        colouring,
        palette_class,
        subfamily,
        phi,
        ell,
        m,
        trial,
        good_count: good.len(),
    })
}

/// `|F'| >= cert_fraction * |F|`, exactly.
pub fn meets_guarantee(f: &SetFamily, r: &CertificateResult) -> bool {
    let need = cert_fraction(f.k(), r.ell, r.m) * BigRational::from_integer(BigInt::from(f.len()));
    BigRational::from_integer(BigInt::from(r.subfamily.len())) >= need
}

/// `⌈|F| * fraction⌉` for an exact fraction.
pub fn ceil_count(fraction: &BigRational, total: usize) -> usize {
    let v = fraction * BigRational::from_integer(BigInt::from(total));
    v.ceil().to_integer().to_usize().unwrap_or(usize::MAX)
}
