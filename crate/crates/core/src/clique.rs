//! Exact maximum clique / independent set by bitset branch-and-bound with a
//! greedy colouring bound.

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::setcore::IntersectionGraph;

pub const DEFAULT_CAP: usize = 2000;

struct Search<'a> {
    adj: &'a [FixedBitSet],
    best: Vec<usize>,
    target: usize,
}

impl Search<'_> {
    // Greedy sequential colouring of `cand`; returns vertices with their colour
    // numbers, colours nondecreasing.
    fn colour_order(&self, cand: &FixedBitSet) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(cand.count_ones(..));
        let mut uncoloured = cand.clone();
        let mut colour = 0;
        while !uncoloured.is_clear() {
            colour += 1;
            let mut q = uncoloured.clone();
            while let Some(v) = q.ones().next() {
                q.set(v, false);
                q.difference_with(&self.adj[v]);
                uncoloured.set(v, false);
                out.push((v, colour));
            }
        }
        out
    }

    fn expand(&mut self, cand: &mut FixedBitSet, cur: &mut Vec<usize>) {
        let order = self.colour_order(cand);
        for &(v, colour) in order.iter().rev() {
            if self.best.len() >= self.target || cur.len() + colour <= self.best.len() {
                return;
            }
            cur.push(v);
            let mut next = cand.clone();
            next.intersect_with(&self.adj[v]);
            if next.is_clear() {
                if cur.len() > self.best.len() {
                    self.best = cur.clone();
                }
            } else {
                self.expand(&mut next, cur);
            }
            cur.pop();
            cand.set(v, false);
        }
    }
}

/// Relabels vertices by descending degree (ties by index) so that the colour
/// bound is tight early; returns (relabelled adjacency, new→old map).
fn reorder(g: &IntersectionGraph) -> (Vec<FixedBitSet>, Vec<usize>) {
    let n = g.vertex_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    let mut pos = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        pos[old] = new;
    }
    let adj = order
        .iter()
        .map(|&old| {
            let mut b = FixedBitSet::with_capacity(n);
            for u in g.neighbours(old).ones() {
                b.insert(pos[u]);
            }
            b
        })
        .collect();
    (adj, order)
}

fn run(g: &IntersectionGraph, target: usize, cap: usize) -> Result<Vec<usize>> {
    let n = g.vertex_count();
    if n > cap {
        return Err(Error::CapExceeded(format!(
            "graph has {n} vertices, cap is {cap}; raise DELTASYS_CAP or sample a subfamily"
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let (adj, order) = reorder(g);
    let mut s = Search {
        adj: &adj,
        best: Vec::new(),
        target,
    };
    let mut cand = FixedBitSet::with_capacity(n);
    cand.insert_range(..);
    s.expand(&mut cand, &mut Vec::new());
    let mut out: Vec<usize> = s.best.into_iter().map(|v| order[v]).collect();
    out.sort_unstable();
    Ok(out)
}

/// A maximum clique (sorted vertex indices).
pub fn max_clique(g: &IntersectionGraph, cap: usize) -> Result<Vec<usize>> {
    run(g, usize::MAX, cap)
}

/// A clique of exactly `size` vertices, if one exists.
pub fn find_clique(g: &IntersectionGraph, size: usize, cap: usize) -> Result<Option<Vec<usize>>> {
    if size == 0 {
        return Ok(Some(Vec::new()));
    }
    let found = run(g, size, cap)?;
    Ok((found.len() >= size).then(|| {
        let mut c = found;
        c.truncate(size);
        c
    }))
}

/// A maximum independent set, as a clique of the complement.
pub fn max_independent_set(g: &IntersectionGraph, cap: usize) -> Result<Vec<usize>> {
    if g.vertex_count() > cap {
        return run(g, usize::MAX, cap);
    }
    run(&g.complement(), usize::MAX, cap)
}

/// Exponential reference: maximum clique by trying all vertex subsets.
pub fn brute_force_clique(g: &IntersectionGraph) -> usize {
    let n = g.vertex_count();
    assert!(n <= 24, "brute force limited to 24 vertices");
    let mut best = 0;
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let verts: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let ok = verts
            .iter()
            .enumerate()
            .all(|(x, &i)| verts[x + 1..].iter().all(|&j| g.has_edge(i, j)));
        if ok {
            best = size;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> IntersectionGraph {
        let mut adj = vec![FixedBitSet::with_capacity(n); n];
        for &(a, b) in edges {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        IntersectionGraph::from_adjacency(adj)
    }

    #[test]
    fn small_graphs() {
        let g = graph(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]);
        assert_eq!(max_clique(&g, 100).unwrap(), vec![0, 1, 2]);
        assert_eq!(max_independent_set(&g, 100).unwrap().len(), 2);
        assert!(find_clique(&g, 4, 100).unwrap().is_none());
        assert_eq!(find_clique(&g, 2, 100).unwrap().unwrap().len(), 2);

        let empty = graph(5, &[]);
        assert_eq!(max_clique(&empty, 100).unwrap().len(), 1);
        assert_eq!(max_independent_set(&empty, 100).unwrap().len(), 5);
    }

    #[test]
    fn cap_is_enforced() {
        let g = graph(5, &[]);
        assert!(matches!(max_clique(&g, 4), Err(Error::CapExceeded(_))));
    }

    proptest::proptest! {
        #[test]
        fn matches_brute_force(n in 1usize..13, bits in proptest::collection::vec(proptest::bool::ANY, 78)) {
            let mut edges = Vec::new();
            let mut idx = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if bits[idx] {
                        edges.push((i, j));
                    }
                    idx += 1;
                }
            }
            let g = graph(n, &edges);
            let c = max_clique(&g, 100).unwrap();
            proptest::prop_assert_eq!(c.len(), brute_force_clique(&g));
            for (x, &i) in c.iter().enumerate() {
                for &j in &c[x + 1..] {
                    proptest::prop_assert!(g.has_edge(i, j));
                }
            }
            let mis = max_independent_set(&g, 100).unwrap();
            proptest::prop_assert_eq!(mis.len(), brute_force_clique(&g.complement()));
        }
    }
}
