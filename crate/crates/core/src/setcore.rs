//! Ground sets, uniform families, intersection specs and the auxiliary graph.
//!
//! Members are stored twice: as sorted id lists (for enumeration and display)
//! and as fixed-width bit vectors over the ground set, so that an
//! intersection size is a single AND + popcount.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 0-based element of the ground set.
pub type ElementId = u32;

/// A finite set of ground-set elements, kept strictly increasing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KSet(Vec<ElementId>);

impl KSet {
    /// Builds a set from ids that must already be strictly increasing.
    pub fn new(elems: Vec<ElementId>) -> Result<Self> {
        for w in elems.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidFamily("duplicate element in set".into()));
            }
            if w[0] > w[1] {
                return Err(Error::InvalidFamily("elements not in increasing order".into()));
            }
        }
        Ok(KSet(elems))
    }

    /// Sorts and deduplicates.
    pub fn from_unsorted<I: IntoIterator<Item = ElementId>>(elems: I) -> Self {
        let mut v: Vec<ElementId> = elems.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        KSet(v)
    }

    pub fn empty() -> Self {
        KSet(Vec::new())
    }

    pub fn elems(&self) -> &[ElementId] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<ElementId> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: ElementId) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn is_subset(&self, other: &KSet) -> bool {
        let mut j = 0;
        for &x in &self.0 {
            while j < other.0.len() && other.0[j] < x {
                j += 1;
            }
            if j == other.0.len() || other.0[j] != x {
                return false;
            }
            j += 1;
        }
        true
    }

    pub fn intersection(&self, other: &KSet) -> KSet {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(self.0[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        KSet(out)
    }

    pub fn difference(&self, other: &KSet) -> KSet {
        KSet(self.0.iter().copied().filter(|x| !other.contains(*x)).collect())
    }

    pub fn union(&self, other: &KSet) -> KSet {
        KSet::from_unsorted(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn max_elem(&self) -> Option<ElementId> {
        self.0.last().copied()
    }

    pub fn to_bits(&self, width: usize) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(width);
        for &x in &self.0 {
            b.insert(x as usize);
        }
        b
    }

    /// All subsets of this set, in order of increasing bitmask.
    pub fn subsets(&self) -> impl Iterator<Item = KSet> + '_ {
        let len = self.0.len();
        assert!(len < 32, "subset enumeration limited to sets of size < 32");
        (0u32..(1u32 << len))
            .map(move |mask| KSet((0..len).filter(|i| mask & (1 << i) != 0).map(|i| self.0[i]).collect()))
    }
}

impl fmt::Display for KSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

/// `|A ∩ B|` by merging the sorted lists.
pub fn intersection_size(a: &KSet, b: &KSet) -> usize {
    let (x, y) = (a.elems(), b.elems());
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
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

/// A set of admissible intersection sizes, with O(1) membership.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SizeSet {
    sizes: BTreeSet<usize>,
    mask: Vec<bool>,
}

impl SizeSet {
    pub fn new<I: IntoIterator<Item = usize>>(sizes: I) -> Self {
        let sizes: BTreeSet<usize> = sizes.into_iter().collect();
        let top = sizes.iter().next_back().map_or(0, |&s| s + 1);
        let mut mask = vec![false; top];
        for &s in &sizes {
            mask[s] = true;
        }
        SizeSet { sizes, mask }
    }

    pub fn contains(&self, s: usize) -> bool {
        self.mask.get(s).copied().unwrap_or(false)
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.sizes.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.sizes.iter().copied().collect()
    }

    pub fn min(&self) -> Option<usize> {
        self.sizes.iter().next().copied()
    }
}

impl fmt::Display for SizeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Which intersection sizes are "in L": either listed explicitly or by residue.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum IntersectionSpec {
    Explicit { sizes: BTreeSet<usize> },
    Modular { p: usize, residues: BTreeSet<usize> },
}

impl IntersectionSpec {
    pub fn explicit<I: IntoIterator<Item = usize>>(sizes: I) -> Self {
        IntersectionSpec::Explicit {
            sizes: sizes.into_iter().collect(),
        }
    }

    pub fn modular<I: IntoIterator<Item = usize>>(p: usize, residues: I) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidParameter(format!("modulus p={p} must be at least 2")));
        }
        let residues: BTreeSet<usize> = residues.into_iter().collect();
        if let Some(&r) = residues.iter().find(|&&r| r >= p) {
            return Err(Error::InvalidParameter(format!("residue {r} not in [0,{}]", p - 1)));
        }
        Ok(IntersectionSpec::Modular { p, residues })
    }

    /// All sizes `ℓ` with `ℓ mod p ≠ a`: the intersection sizes that are
    /// forbidden when only residue `a` is allowed.
    pub fn all_but_residue(p: usize, a: usize) -> Result<Self> {
        IntersectionSpec::modular(p, (0..p).filter(|&r| r != a))
    }

    /// Explicit sizes inside `[0, k-1]`.
    pub fn lift(&self, k: usize) -> Result<SizeSet> {
        match self {
            IntersectionSpec::Explicit { sizes } => {
                if let Some(&s) = sizes.iter().find(|&&s| s >= k.max(1)) {
                    if s >= k {
                        return Err(Error::InvalidParameter(format!(
                            "intersection size {s} outside [0,{}]",
                            k.saturating_sub(1)
                        )));
                    }
                }
                Ok(SizeSet::new(sizes.iter().copied()))
            }
            IntersectionSpec::Modular { .. } => Ok(lift_modular(self, k)),
        }
    }
}

/// `{ℓ ∈ [0,k-1] : ℓ mod p ∈ R}`; explicit specs pass through unchanged.
pub fn lift_modular(spec: &IntersectionSpec, k: usize) -> SizeSet {
    match spec {
        IntersectionSpec::Explicit { sizes } => SizeSet::new(sizes.iter().copied()),
        IntersectionSpec::Modular { p, residues } => SizeSet::new((0..k).filter(|l| residues.contains(&(l % p)))),
    }
}

/// A `k`-uniform family of distinct sets over the ground set `0..n`.
#[derive(Clone, Debug)]
pub struct SetFamily {
    k: usize,
    n: usize,
    members: Vec<KSet>,
    bits: Vec<FixedBitSet>,
}

impl PartialEq for SetFamily {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.n == other.n && self.members == other.members
    }
}

impl Eq for SetFamily {}

impl SetFamily {
    pub fn new(k: usize, n: usize, members: Vec<KSet>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(members.len());
        for (i, m) in members.iter().enumerate() {
            if m.len() != k {
                return Err(Error::InvalidFamily(format!(
                    "member {i} has {} elements, expected k={k}",
                    m.len()
                )));
            }
            if let Some(x) = m.max_elem() {
                if x as usize >= n {
                    return Err(Error::InvalidFamily(format!("member {i}: id {x} >= n={n}")));
                }
            }
            if !seen.insert(m) {
                return Err(Error::InvalidFamily(format!("duplicate set {m} (member {i})")));
            }
        }
        let bits = members.iter().map(|m| m.to_bits(n)).collect();
        Ok(SetFamily { k, n, members, bits })
    }

    /// Convenience constructor from raw id lists (sorted internally).
    pub fn from_sets(k: usize, n: usize, sets: &[Vec<ElementId>]) -> Result<Self> {
        let members = sets
            .iter()
            .map(|s| {
                let ks = KSet::from_unsorted(s.iter().copied());
                if ks.len() != s.len() {
                    Err(Error::InvalidFamily("duplicate element in set".into()))
                } else {
                    Ok(ks)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        SetFamily::new(k, n, members)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[KSet] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &KSet {
        &self.members[i]
    }

    pub fn bits(&self, i: usize) -> &FixedBitSet {
        &self.bits[i]
    }

    /// `|F_i ∩ F_j|` via popcount.
    pub fn inter(&self, i: usize, j: usize) -> usize {
        self.bits[i].intersection_count(&self.bits[j])
    }

    /// Sub-family on the given member indices (same ground set).
    pub fn subfamily(&self, indices: &[usize]) -> SetFamily {
        SetFamily {
            k: self.k,
            n: self.n,
            members: indices.iter().map(|&i| self.members[i].clone()).collect(),
            bits: indices.iter().map(|&i| self.bits[i].clone()).collect(),
        }
    }

    /// Index of a member equal to `s`, if any.
    pub fn position(&self, s: &KSet) -> Option<usize> {
        self.members.iter().position(|m| m == s)
    }

    /// True iff no two members intersect in a size from `l`.
    pub fn avoids(&self, indices: &[usize], l: &SizeSet) -> bool {
        first_violation(self, indices, l).is_none()
    }
}

/// First pair `(i, j)` of the listed members whose intersection size lies in `l`.
pub fn first_violation(f: &SetFamily, indices: &[usize], l: &SizeSet) -> Option<(usize, usize)> {
    for (x, &i) in indices.iter().enumerate() {
        for &j in &indices[x + 1..] {
            if l.contains(f.inter(i, j)) {
                return Some((i, j));
            }
        }
    }
    None
}

/// `G_F`: vertices are members, edges join pairs whose intersection size lies in `L`.
#[derive(Clone, Debug)]
pub struct IntersectionGraph {
    adj: Vec<FixedBitSet>,
}

impl IntersectionGraph {
    pub fn from_adjacency(adj: Vec<FixedBitSet>) -> Self {
        IntersectionGraph { adj }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].contains(j)
    }

    pub fn neighbours(&self, i: usize) -> &FixedBitSet {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].count_ones(..)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.count_ones(..)).sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.adj.len() {
            for j in self.adj[i].ones().filter(|&j| j > i) {
                out.push((i, j));
            }
        }
        out
    }

    /// The complement graph (no loops).
    pub fn complement(&self) -> IntersectionGraph {
        let n = self.adj.len();
        let adj = (0..n)
            .map(|i| {
                let mut b = FixedBitSet::with_capacity(n);
                b.insert_range(..);
                b.difference_with(&self.adj[i]);
                b.set(i, false);
                b
            })
            .collect();
        IntersectionGraph { adj }
    }
}

/// Builds `G_F` for the lifted size set of `spec`.
pub fn build_graph(f: &SetFamily, spec: &IntersectionSpec) -> Result<IntersectionGraph> {
    let l = spec.lift(f.k())?;
    Ok(build_graph_sizes(f, &l))
}

pub fn build_graph_sizes(f: &SetFamily, l: &SizeSet) -> IntersectionGraph {
    let n = f.len();
    let mut adj = vec![FixedBitSet::with_capacity(n); n];
    if !l.is_empty() {
        for i in 0..n {
            for j in i + 1..n {
                if l.contains(f.inter(i, j)) {
                    adj[i].insert(j);
                    adj[j].insert(i);
                }
            }
        }
    }
    IntersectionGraph { adj }
}

#[derive(Serialize, Deserialize)]
struct FamilyJson {
    k: usize,
    n: usize,
    sets: Vec<Vec<ElementId>>,
}

/// Parses the line-oriented text format (optional `k=<k> n=<n>` header,
/// one set per line, `#` comments).
pub fn parse_family(text: &str) -> Result<SetFamily> {
    let mut header: Option<(usize, usize)> = None;
    let mut sets: Vec<(usize, KSet)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with("k=") {
            if header.is_some() || !sets.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "unexpected header".into(),
                });
            }
            header = Some(parse_header(line).map_err(|msg| Error::Parse { line: line_no, msg })?);
            continue;
        }
        let mut ids = Vec::new();
        for tok in line.split_whitespace() {
            let id: ElementId = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("malformed element id {tok:?}"),
            })?;
            ids.push(id);
        }
        let set = KSet::new(ids).map_err(|e| Error::Parse {
            line: line_no,
            msg: match e {
                Error::InvalidFamily(m) => m,
                other => other.to_string(),
            },
        })?;
        sets.push((line_no, set));
    }
    let (k, n) = match header {
        Some(h) => h,
        None => {
            let k = sets.first().map_or(0, |(_, s)| s.len());
            let n = sets
                .iter()
                .filter_map(|(_, s)| s.max_elem())
                .max()
                .map_or(0, |x| x as usize + 1);
            (k, n)
        }
    };
    let mut seen = HashSet::new();
    for (line_no, s) in &sets {
        if s.len() != k {
            return Err(Error::Parse {
                line: *line_no,
                msg: format!("arity mismatch: {} elements, expected k={k}", s.len()),
            });
        }
        if let Some(x) = s.max_elem() {
            if x as usize >= n {
                return Err(Error::Parse {
                    line: *line_no,
                    msg: format!("id {x} >= n={n}"),
                });
            }
        }
        if !seen.insert(s.clone()) {
            return Err(Error::Parse {
                line: *line_no,
                msg: format!("duplicate set {s}"),
            });
        }
    }
    SetFamily::new(k, n, sets.into_iter().map(|(_, s)| s).collect())
}

fn parse_header(line: &str) -> std::result::Result<(usize, usize), String> {
    let mut k = None;
    let mut n = None;
    for tok in line.split_whitespace() {
        let (key, val) = tok
            .split_once('=')
            .ok_or_else(|| format!("malformed header token {tok:?}"))?;
        let v: usize = val.parse().map_err(|_| format!("malformed header value {val:?}"))?;
        match key {
            "k" => k = Some(v),
            "n" => n = Some(v),
            _ => return Err(format!("unknown header key {key:?}")),
        }
    }
    match (k, n) {
        (Some(k), Some(n)) => Ok((k, n)),
        _ => Err("header needs both k= and n=".into()),
    }
}

pub fn serialize_family(f: &SetFamily) -> String {
    let mut out = format!("k={} n={}\n", f.k, f.n);
    for m in &f.members {
        let parts: Vec<String> = m.elems().iter().map(|x| x.to_string()).collect();
        out.push_str(&parts.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_family_json(text: &str) -> Result<SetFamily> {
    let raw: FamilyJson = serde_json::from_str(text)?;
    let members = raw
        .sets
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            KSet::new(s).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SetFamily::new(raw.k, raw.n, members)
}

pub fn serialize_family_json(f: &SetFamily) -> String {
    let raw = FamilyJson {
        k: f.k,
        n: f.n,
        sets: f.members.iter().map(|m| m.elems().to_vec()).collect(),
    };
    serde_json::to_string(&raw).expect("family serializes")
}

/// Binomial coefficient in u128; panics on overflow.
pub fn binom(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All `r`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if r > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..r).collect();
    loop {
        out.push(cur.clone());
        let mut i = r;
        while i > 0 && cur[i - 1] == n - r + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        cur[i - 1] += 1;
        for j in i..r {
            cur[j] = cur[j - 1] + 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks(v: &[u32]) -> KSet {
        KSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn intersection_size_examples() {
        assert_eq!(intersection_size(&ks(&[0, 1]), &ks(&[0, 1])), 2);
        assert_eq!(intersection_size(&ks(&[0, 1]), &ks(&[2, 3])), 0);
        assert_eq!(intersection_size(&ks(&[0, 1, 2]), &ks(&[1, 2, 3])), 2);
    }

    #[test]
    fn lift_modular_examples() {
        let s = IntersectionSpec::modular(2, [1]).unwrap();
        assert_eq!(lift_modular(&s, 4).to_vec(), vec![1, 3]);
        let s = IntersectionSpec::modular(3, []).unwrap();
        assert!(lift_modular(&s, 5).is_empty());
        let s = IntersectionSpec::modular(3, [0]).unwrap();
        assert_eq!(lift_modular(&s, 5).to_vec(), vec![0, 3]);
        let e = IntersectionSpec::explicit([1, 2]);
        assert_eq!(lift_modular(&e, 5).to_vec(), vec![1, 2]);
    }

    #[test]
    fn modular_rejects_bad_residue() {
        assert!(IntersectionSpec::modular(3, [3]).is_err());
        assert!(IntersectionSpec::modular(1, [0]).is_err());
    }

    #[test]
    fn build_graph_examples() {
        let f = SetFamily::from_sets(2, 4, &[vec![0, 1], vec![2, 3]]).unwrap();
        let g = build_graph(&f, &IntersectionSpec::explicit([1])).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.vertex_count(), 2);

        let f = SetFamily::from_sets(2, 3, &[vec![0, 1], vec![1, 2]]).unwrap();
        let g = build_graph(&f, &IntersectionSpec::explicit([1])).unwrap();
        assert_eq!(g.edges(), vec![(0, 1)]);
        let g = build_graph(&f, &IntersectionSpec::explicit([])).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn parse_examples() {
        let f = parse_family("k=2 n=4\n0 1\n2 3\n").unwrap();
        assert_eq!(f.k(), 2);
        assert_eq!(f.n(), 4);
        assert_eq!(f.members(), &[ks(&[0, 1]), ks(&[2, 3])]);

        let err = parse_family("k=2 n=4\n0 0\n").unwrap_err();
        assert!(err.to_string().contains("duplicate element in set"), "{err}");
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn parse_errors_name_the_line() {
        let cases = [
            ("k=2 n=4\n0 1\n0 1\n", "duplicate set", 3),
            ("k=2 n=4\n0 1 2\n", "arity mismatch", 2),
            ("k=2 n=4\n# c\n0 9\n", ">= n=4", 3),
            ("k=2 n=4\n0 x\n", "malformed", 2),
            ("k=2 n=4\n1 0\n", "increasing", 2),
        ];
        for (text, needle, line) in cases {
            let err = parse_family(text).unwrap_err().to_string();
            assert!(err.contains(needle), "{text:?}: {err}");
            assert!(err.contains(&format!("line {line}")), "{text:?}: {err}");
        }
    }

    #[test]
    fn parse_without_header_infers_k_and_n() {
        let f = parse_family("# comment\n1 4\n0 2\n").unwrap();
        assert_eq!((f.k(), f.n(), f.len()), (2, 5, 2));
    }

    #[test]
    fn json_round_trip() {
        let f = SetFamily::from_sets(3, 6, &[vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        let back = parse_family_json(&serialize_family_json(&f)).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn complement_has_no_loops() {
        let f = SetFamily::from_sets(2, 3, &[vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap();
        let g = build_graph_sizes(&f, &SizeSet::new([0]));
        let c = g.complement();
        assert_eq!(c.edge_count(), 3);
        assert!(!c.has_edge(1, 1));
    }

    #[test]
    fn combinations_and_binom() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(binom(10, 3), 120);
        assert_eq!(binom(3, 5), 0);
    }
}
