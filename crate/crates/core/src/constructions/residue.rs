use super::{Construction, Kind};
use crate::error::{Error, Result};
use crate::setcore::{combinations, intersection_size, KSet, SetFamily};

/// Lower-bound family with no two members meeting in `a (mod p)` elements.
///
/// `[n]` splits into `X₁` (`⌊n/2p⌋` blocks `Y_i` of size `p`) and `X₂`. For
/// `a = p − 1`, members are unions of `k/p − 1` blocks with one `p`-set from
/// a greedy family on `X₂`. Otherwise (`k ≥ 2p`), members are unions of
/// `k/p − 2` blocks, a fixed `X₃ ⊆ X₂` of size `a + 1`, and one
/// `(2p − a − 1)`-set from a greedy family on `X₂ ∖ X₃`. Both greedy families
/// avoid pairwise intersections of exactly `p − 1`.
pub fn residue_avoiding_family(k: usize, p: usize, a: usize, n: usize) -> Result<Construction> {
    if p < 2 || a == 0 || a >= p {
        return Err(Error::InvalidParameter(format!(
            "need p >= 2 and a in [1, p-1], got p={p}, a={a}"
        )));
    }
    if k == 0 || !k.is_multiple_of(p) {
        return Err(Error::InvalidParameter(format!(
            "k={k} must be a positive multiple of p={p}"
        )));
    }
    let s = n / (2 * p);
    let x1 = s * p;
    let x2: Vec<u32> = (x1 as u32..n as u32).collect();
    let (blocks, x3_size, tail_size) = if a == p - 1 {
        (k / p - 1, 0, p)
    } else if k >= 2 * p {
        (k / p - 2, a + 1, 2 * p - a - 1)
    } else {
        return Err(Error::InvalidParameter(format!(
            "a={a} < p-1 needs k >= 2p = {}",
            2 * p
        )));
    };
    if s < blocks || x2.len() < x3_size + tail_size {
        return Err(Error::InvalidParameter(format!(
            "n={n} is too small for {blocks} blocks and the X_2 part"
        )));
    }
    let (x3, pool) = x2.split_at(x3_size);
    let mut tails: Vec<KSet> = Vec::new();
    for c in combinations(pool.len(), tail_size) {
        let cand = KSet::from_unsorted(c.iter().map(|&i| pool[i]));
        if tails.iter().all(|t| intersection_size(t, &cand) != p - 1) {
            tails.push(cand);
        }
    }
    let heads = combinations(s, blocks);
    let mut members = Vec::with_capacity(heads.len() * tails.len());
    for head in &heads {
        let base = head.iter().flat_map(|&b| (b * p..(b + 1) * p).map(|e| e as u32));
        let base: Vec<u32> = base.chain(x3.iter().copied()).collect();
        for t in &tails {
            members.push(KSet::from_unsorted(
                base.iter().copied().chain(t.elems().iter().copied()),
            ));
        }
    }
    let family = SetFamily::new(k, n, members)?;
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            if family.inter(i, j) % p == a {
                return Err(Error::GuaranteeViolated(format!(
                    "members {i} and {j} meet in a (mod p)"
                )));
            }
        }
    }
    let labels = (0..n)
        .map(|e| {
            if e < x1 {
                format!("y{}.{}", e / p, e % p)
            } else {
                format!("x{}", e - x1)
            }
        })
        .collect();
    Ok(Construction {
        kind: Kind::Residue { k, p, a, n },
        family,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_mod_two() {
        let c = residue_avoiding_family(2, 2, 1, 8).unwrap();
        assert_eq!(c.family.len(), 2);
        assert!(c.check_guarantee().is_ok());
    }

    #[test]
    fn block_count_shape() {
        // s = 3 blocks, X₂ has 6 points: a perfect matching of 3 pairs.
        let c = residue_avoiding_family(4, 2, 1, 12).unwrap();
        assert_eq!(c.family.len(), 3 * 3);
    }

    #[test]
    fn x3_variant() {
        let c = residue_avoiding_family(6, 3, 1, 24).unwrap();
        assert!(!c.family.is_empty());
        assert!(c.check_guarantee().is_ok());
        let c = residue_avoiding_family(6, 3, 2, 18).unwrap();
        assert!(c.check_guarantee().is_ok());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(residue_avoiding_family(3, 3, 1, 30).is_err());
        assert!(residue_avoiding_family(5, 2, 1, 30).is_err());
        assert!(residue_avoiding_family(6, 2, 1, 3).is_err());
    }
}
