use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{relabel, Construction, Kind};
use crate::error::{Error, Result};

/// Parts of the chain graph are `V_i = [m]^{i-1} × [n]^{k-i-1} × [m]` for
/// `i < k` and `V_k = [m]^{k-1}`; coordinates are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct ChainVertex {
    part: usize,
    coords: Vec<u32>,
}

impl fmt::Display for ChainVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<String> = self.coords.iter().map(u32::to_string).collect();
        write!(f, "V{}({})", self.part, c.join(","))
    }
}

/// All `V_1 → V_k` paths of the layered graph; `n^{k-2} m^k` members.
pub fn chain_family(k: usize, m: usize, n: usize) -> Result<Construction> {
    if k < 2 || m < 1 || n < 1 {
        return Err(Error::InvalidParameter("chain family needs k >= 2, m, n >= 1".into()));
    }
    let expected = (n as u128).pow(k as u32 - 2) * (m as u128).pow(k as u32);
    if expected > TREE_CAP as u128 {
        return Err(Error::CapExceeded(format!("{expected} paths; use smaller n or m")));
    }
    // V_1: coordinates 0..k-2 range over [n], the last over [m].
    let mut radices = vec![n as u32; k - 2];
    radices.push(m as u32);
    let mut members = Vec::with_capacity(expected as usize);
    for start in mixed_radix(&radices) {
        let mut paths = vec![vec![ChainVertex { part: 1, coords: start }]];
        for i in 1..k {
            let mut next = Vec::with_capacity(paths.len() * m);
            for path in paths {
                let last = path.last().expect("nonempty path");
                for x in 0..m as u32 {
                    let mut coords = last.coords.clone();
                    coords[i - 1] = x;
                    let mut p = path.clone();
                    p.push(ChainVertex { part: i + 1, coords });
                    next.push(p);
                }
            }
            paths = next;
        }
        members.extend(paths);
    }
    let (family, labels) = relabel(k, members)?;
    if family.len() as u128 != expected {
        return Err(Error::GuaranteeViolated(format!(
            "chain family has {} members, expected {expected}",
            family.len()
        )));
    }
    Ok(Construction {
        kind: Kind::Chain { k, m, n },
        family,
        labels,
    })
}

fn mixed_radix(radices: &[u32]) -> impl Iterator<Item = Vec<u32>> + '_ {
    let total: u64 = radices.iter().map(|&r| r as u64).product();
    (0..total).map(move |mut code| {
        let mut v = vec![0u32; radices.len()];
        for (slot, &r) in v.iter_mut().zip(radices).rev() {
            *slot = (code % r as u64) as u32;
            code /= r as u64;
        }
        v
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LDecomposition {
    pub t: usize,
    pub h: Vec<usize>,
}

/// `t = k + 1 − |L|`, `h_t = 1`, `h_{t−1} = a_{t−1} − 1`, `h_i = a_i − a_{i+1}`
/// where `k = a_1 > … > a_t = 0` lists `[0,k] ∖ L`.
pub fn decompose_l(k: usize, l: &[usize]) -> Result<LDecomposition> {
    let ls: BTreeSet<usize> = l.iter().copied().collect();
    if !ls.contains(&1) || ls.iter().any(|&x| x == 0 || x >= k) {
        return Err(Error::InvalidParameter(format!(
            "need 1 ∈ L ⊆ [1, k-1], got {ls:?} with k={k}"
        )));
    }
    let a: Vec<usize> = (0..=k).rev().filter(|x| !ls.contains(x)).collect();
    let t = a.len();
    debug_assert_eq!(t, k + 1 - ls.len());
    let mut h = vec![0; t];
    h[t - 1] = 1;
    h[t - 2] = a[t - 2] - 1;
    for i in 0..t.saturating_sub(2) {
        h[i] = a[i] - a[i + 1];
    }
    let d = LDecomposition { t, h };
    // [k] \ L must be exactly the suffix sums starting before the last part.
    let suffixes: BTreeSet<usize> = (0..t - 1).map(|i0| d.h[i0..].iter().sum()).collect();
    let complement: BTreeSet<usize> = (1..=k).filter(|x| !ls.contains(x)).collect();
    if d.h.iter().sum::<usize>() != k || suffixes != complement || d.h.contains(&0) {
        return Err(Error::GuaranteeViolated(format!(
            "decomposition {d:?} does not match L"
        )));
    }
    Ok(d)
}

pub const TREE_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Val {
    S(u32),
    P(u32, u32),
    Tag(usize, usize),
}

/// Element `f_p^X`: its part `p` and its values on the domain points.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct TreeVertex {
    part: (usize, usize),
    values: Vec<Val>,
}

impl fmt::Display for TreeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self
            .values
            .iter()
            .filter_map(|v| match v {
                Val::S(x) => Some(x.to_string()),
                Val::P(x, y) => Some(format!("{x}:{y}")),
                Val::Tag(..) => None,
            })
            .collect();
        write!(f, "f({},{})[{}]", self.part.0, self.part.1, vals.join(","))
    }
}

/// A tree family together with the part structure needed to check it.
#[derive(Clone, Debug)]
pub struct TreeFamily {
    pub construction: Construction,
    pub decomposition: LDecomposition,
    /// Points of `P` in the order used by `member_parts`.
    pub parts: Vec<(usize, usize)>,
    /// `member_parts[x][q]` is the id of member `x`'s vertex in part `parts[q]`.
    pub member_parts: Vec<Vec<u32>>,
    pub m: usize,
    pub n: usize,
}

/// Variables of one sequence `X ∈ 𝒳` (1-based indices as in the definition).
struct Seq<'a> {
    h: &'a [usize],
    x: Vec<u32>,
    y: Vec<u32>,
    xs: Vec<Vec<u32>>,
    ys: Vec<Vec<u32>>,
    zs: Vec<Vec<u32>>,
}

impl Seq<'_> {
    fn f(&self, a: usize, b: usize, t: usize) -> Vec<Val> {
        let mut out = Vec::new();
        for i in 1..t {
            for j in 1..=self.h[i - 1] {
                let v = if i < a {
                    if j == 1 {
                        Val::S(self.y[i])
                    } else {
                        Val::P(self.xs[i][j], self.ys[i][j])
                    }
                } else if i == a {
                    match j {
                        1 => Val::S(self.x[i]),
                        j if j <= b => Val::P(self.ys[i][j], self.zs[i][j]),
                        j if j == b + 1 => Val::S(self.xs[i][j]),
                        _ => Val::P(self.xs[i][j], self.ys[i][j]),
                    }
                } else {
                    match j {
                        1 => Val::S(self.x[i]),
                        2 => Val::S(self.xs[i][j]),
                        _ => Val::P(self.xs[i][j], self.ys[i][j]),
                    }
                };
                out.push(v);
            }
        }
        out.push(Val::Tag(a, b));
        out
    }
}

/// The family `{F_X : X ∈ 𝒳}` with `n^{t−2} m^{2k−t}` members.
pub fn tree_family(k: usize, l: &[usize], m: usize, n: usize) -> Result<TreeFamily> {
    tree_family_with_cap(k, l, m, n, TREE_CAP)
}

pub fn tree_family_with_cap(k: usize, l: &[usize], m: usize, n: usize, cap: usize) -> Result<TreeFamily> {
    if m < 1 || n < 1 {
        return Err(Error::InvalidParameter("tree family needs m, n >= 1".into()));
    }
    let dec = decompose_l(k, l)?;
    let (t, h) = (dec.t, dec.h.clone());
    let expected = (n as u128).pow(t as u32 - 2) * (m as u128).pow((2 * k - t) as u32);
    if expected > cap as u128 {
        return Err(Error::CapExceeded(format!(
            "|𝒳| = {expected} exceeds cap {cap}; use smaller n or m"
        )));
    }
    // Free variables, in order: x_i, y_i for i in [t-1], then x_{i,j}, z_{i,j}.
    let mut radices = Vec::new();
    for i in 1..t {
        radices.push(if i == t - 1 { m } else { n } as u32);
        radices.push(m as u32);
    }
    for i in 1..t {
        for _ in 2..=h[i - 1] {
            radices.push(m as u32);
            radices.push(m as u32);
        }
    }
    let parts: Vec<(usize, usize)> = (1..=t).flat_map(|a| (1..=h[a - 1]).map(move |b| (a, b))).collect();
    let mut members = Vec::with_capacity(expected as usize);
    for code in mixed_radix(&radices) {
        let mut it = code.into_iter();
        let mut s = Seq {
            h: &h,
            x: vec![0; t],
            y: vec![0; t],
            xs: vec![vec![]; t],
            ys: vec![vec![]; t],
            zs: vec![vec![]; t],
        };
        for i in 1..t {
            s.x[i] = it.next().expect("radix");
            s.y[i] = it.next().expect("radix");
        }
        for i in 1..t {
            let hi = h[i - 1];
            s.xs[i] = vec![0; hi + 1];
            s.ys[i] = vec![0; hi + 1];
            s.zs[i] = vec![0; hi + 1];
            for j in 2..=hi {
                s.xs[i][j] = it.next().expect("radix");
                s.zs[i][j] = it.next().expect("radix");
            }
            if hi >= 2 {
                s.ys[i][2] = s.y[i];
            }
            for j in 2..hi {
                s.ys[i][j + 1] = s.xs[i][j];
            }
        }
        let member: Vec<TreeVertex> = parts
            .iter()
            .map(|&(a, b)| TreeVertex {
                part: (a, b),
                values: s.f(a, b, t),
            })
            .collect();
        members.push(member);
    }
    let (family, labels) = relabel(k, members.clone())?;
    if family.len() as u128 != expected {
        return Err(Error::GuaranteeViolated(format!(
            "tree family has {} members, expected {expected}",
            family.len()
        )));
    }
    let index: HashMap<&str, u32> = labels.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();
    let member_parts: Vec<Vec<u32>> = members
        .iter()
        .map(|mem| mem.iter().map(|v| index[v.to_string().as_str()]).collect())
        .collect();
    let v11 = member_parts.iter().map(|mp| mp[0]).collect::<HashSet<_>>().len() as u128;
    let expected_v11 = (n as u128).pow(t as u32 - 2) * (m as u128).pow((k - t + 1) as u32);
    if v11 != expected_v11 {
        return Err(Error::GuaranteeViolated(format!(
            "|V_(1,1)| = {v11}, expected {expected_v11}"
        )));
    }
    let construction = Construction {
        kind: Kind::Tree { k, l: l.to_vec(), m, n },
        family,
        labels,
    };
    Ok(TreeFamily {
        construction,
        decomposition: dec,
        parts,
        member_parts,
        m,
        n,
    })
}

/// Checks the structural properties of the tree family: connected agreement
/// (1), the horizontal and vertical degree counts (2–4), the `W_{u,v}` bounds
/// (5, 7) and the branching conditions (6, 8). Returns the failures found.
pub fn check_tree_properties(tf: &TreeFamily) -> Vec<String> {
    let mut fails = Vec::new();
    let (t, h) = (tf.decomposition.t, &tf.decomposition.h);
    let (m, n) = (tf.m, tf.n);
    let q = |a: usize, b: usize| tf.parts.iter().position(|&p| p == (a, b)).expect("part");
    let mp = &tf.member_parts;

    // Neighbour sets in G between two parts.
    let nbrs = |from: usize, to: usize| {
        let mut map: HashMap<u32, HashSet<u32>> = HashMap::new();
        for row in mp {
            map.entry(row[from]).or_default().insert(row[to]);
        }
        map
    };
    let expect_deg = |fails: &mut Vec<String>, from: usize, to: usize, d: usize, what: &str| {
        for (v, s) in nbrs(from, to) {
            if s.len() != d {
                fails.push(format!("{what}: vertex {v} has {} neighbours, expected {d}", s.len()));
            }
        }
    };

    for a in 1..t {
        expect_deg(&mut fails, q(a, 1), q(a + 1, 1), m, &format!("property 2 at a={a}"));
    }
    for a in 2..t {
        expect_deg(&mut fails, q(a, 1), q(a - 1, 1), n, &format!("property 3 at a={a}"));
    }
    expect_deg(&mut fails, q(t, 1), q(t - 1, 1), m, "property 3 at a=t");
    for a in 1..=t {
        for b in 2..=h[a - 1] {
            expect_deg(&mut fails, q(a, b), q(a, b - 1), m, &format!("property 4 at ({a},{b})"));
        }
    }

    // W_{u,v}: distinct third-part vertices among members through u and v.
    let w_bound = |fails: &mut Vec<String>, pu: usize, pv: usize, pw: usize, what: &str| {
        let mut map: HashMap<(u32, u32), HashSet<u32>> = HashMap::new();
        for row in mp {
            map.entry((row[pu], row[pv])).or_default().insert(row[pw]);
        }
        for ((u, v), s) in map {
            if s.len() != m {
                fails.push(format!("{what}: pair ({u},{v}) sees {} options, expected {m}", s.len()));
            }
        }
    };
    // Agreement on `same` and `third` forces agreement on `branch`.
    let branch = |fails: &mut Vec<String>, same: usize, branch: usize, third: usize, what: &str| {
        let mut map: HashMap<(u32, u32), HashSet<u32>> = HashMap::new();
        for row in mp {
            map.entry((row[same], row[third])).or_default().insert(row[branch]);
        }
        if map.values().any(|s| s.len() > 1) {
            fails.push(format!("{what} fails"));
        }
    };
    for a in 1..t {
        if h[a - 1] >= 2 {
            w_bound(
                &mut fails,
                q(a, 1),
                q(a + 1, 1),
                q(a, 2),
                &format!("property 5 at a={a}"),
            );
            branch(
                &mut fails,
                q(a, 1),
                q(a + 1, 1),
                q(a, 2),
                &format!("property 6 at a={a}"),
            );
        }
        for b in 3..=h[a - 1] {
            w_bound(
                &mut fails,
                q(a, b - 1),
                q(a, b - 2),
                q(a, b),
                &format!("property 7 at ({a},{b})"),
            );
            branch(
                &mut fails,
                q(a, b - 1),
                q(a, b - 2),
                q(a, b),
                &format!("property 8 at ({a},{b})"),
            );
        }
    }

    // Property 1: agreeing parts induce a connected subgraph of the tree 𝒯.
    let adjacent = |x: (usize, usize), y: (usize, usize)| {
        (x.0 == y.0 && x.1.abs_diff(y.1) == 1) || (x.1 == 1 && y.1 == 1 && x.0.abs_diff(y.0) == 1)
    };
    'pairs: for i in 0..mp.len() {
        for j in i + 1..mp.len() {
            let agree: Vec<(usize, usize)> = (0..tf.parts.len())
                .filter(|&r| mp[i][r] == mp[j][r])
                .map(|r| tf.parts[r])
                .collect();
            if agree.is_empty() {
                continue;
            }
            let mut seen = vec![agree[0]];
            let mut stack = vec![agree[0]];
            while let Some(x) = stack.pop() {
                for &y in &agree {
                    if !seen.contains(&y) && adjacent(x, y) {
                        seen.push(y);
                        stack.push(y);
                    }
                }
            }
            if seen.len() != agree.len() {
                fails.push(format!("property 1: members {i}, {j} agree on a disconnected set"));
                break 'pairs;
            }
        }
    }
    fails
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setcore::SizeSet;
    use crate::sunflower::find_l_sunflower;

    #[test]
    fn decompositions() {
        assert_eq!(
            decompose_l(8, &[1, 2, 3, 6]).unwrap(),
            LDecomposition {
                t: 5,
                h: vec![1, 2, 1, 3, 1]
            }
        );
        assert_eq!(decompose_l(2, &[1]).unwrap(), LDecomposition { t: 2, h: vec![1, 1] });
        assert_eq!(
            decompose_l(5, &[1, 2, 3, 4]).unwrap(),
            LDecomposition { t: 2, h: vec![4, 1] }
        );
        assert!(decompose_l(4, &[2]).is_err());
        assert!(decompose_l(4, &[1, 4]).is_err());
    }

    #[test]
    fn chain_sizes() {
        let c = chain_family(2, 2, 3).unwrap();
        assert_eq!(c.family.len(), 4);
        assert_eq!(c.family.n(), 4);
        assert_eq!(chain_family(3, 2, 3).unwrap().family.len(), 24);
    }

    #[test]
    fn chain_has_no_large_singleton_sunflower() {
        for (k, m, n) in [(2, 2, 3), (3, 2, 3), (3, 3, 2), (4, 2, 2)] {
            let c = chain_family(k, m, n).unwrap();
            assert!(
                find_l_sunflower(&c.family, &SizeSet::new([1]), m + 1).is_none(),
                "k={k} m={m} n={n}"
            );
            assert!(c.check_guarantee().is_ok());
        }
    }

    #[test]
    fn chain_paths_are_unique() {
        // Two members agreeing on V_i and V_j agree on every part between them.
        let c = chain_family(4, 2, 3).unwrap();
        let f = &c.family;
        for i in 0..f.len() {
            for j in i + 1..f.len() {
                let common = f.member(i).intersection(f.member(j));
                let parts: Vec<usize> = common
                    .elems()
                    .iter()
                    .map(|&x| c.labels[x as usize][1..2].parse::<usize>().unwrap())
                    .collect();
                if let (Some(lo), Some(hi)) = (parts.iter().min(), parts.iter().max()) {
                    assert_eq!(parts.len(), hi - lo + 1);
                }
            }
        }
    }

    #[test]
    fn tree_sizes() {
        assert_eq!(tree_family(2, &[1], 2, 3).unwrap().construction.family.len(), 4);
        assert_eq!(tree_family(3, &[1, 2], 2, 3).unwrap().construction.family.len(), 16);
        assert_eq!(tree_family(3, &[1], 2, 3).unwrap().construction.family.len(), 3 * 8);
        assert!(tree_family_with_cap(4, &[1], 3, 4, 100).is_err());
    }

    #[test]
    fn tree_matches_chain_for_singleton_l() {
        let t = tree_family(3, &[1], 2, 3).unwrap().construction.family;
        let c = chain_family(3, 2, 3).unwrap().family;
        assert_eq!(t.len(), c.len());
        let sig = |f: &crate::setcore::SetFamily| {
            let mut v: Vec<usize> = (0..f.len())
                .flat_map(|i| (0..f.len()).map(move |j| (i, j)))
                .map(|(i, j)| f.inter(i, j))
                .collect();
            v.sort();
            v
        };
        assert_eq!(sig(&t), sig(&c));
    }

    #[test]
    fn tree_properties_hold() {
        for (k, l, m, n) in [
            (2, vec![1], 2, 3),
            (3, vec![1], 2, 3),
            (3, vec![1, 2], 2, 3),
            (4, vec![1, 2], 2, 3),
            (4, vec![1, 3], 2, 3),
            (4, vec![1, 2, 3], 2, 2),
            (4, vec![1], 2, 2),
        ] {
            let tf = tree_family(k, &l, m, n).unwrap();
            assert_eq!(check_tree_properties(&tf), Vec::<String>::new(), "k={k} L={l:?}");
            let f = &tf.construction.family;
            assert!(
                find_l_sunflower(f, &SizeSet::new(l.clone()), m + 1).is_none(),
                "k={k} L={l:?}"
            );
        }
    }
}
