use super::{Construction, Kind};
use crate::error::{Error, Result};
use crate::setcore::{combinations, KSet, SetFamily};

/// `⋃_{X ∈ binom(D, a)} {X ∪ A : A ∈ 𝓖_X}` over a fresh `D` of size `m − 1`,
/// with disjoint copies `𝓖_X` of `base`. Ids `0..m−1` are `D`; copy `c`
/// occupies the next `base.n()` ids.
pub fn block_product_family(k: usize, l: &[usize], m: usize, base: &SetFamily, a: usize) -> Result<Construction> {
    if a < 1 {
        return Err(Error::InvalidParameter("block product needs a >= 1".into()));
    }
    if m < 1 || m - 1 < a {
        return Err(Error::InvalidParameter(format!(
            "|D| = m-1 = {} is smaller than a = {a}",
            m.saturating_sub(1)
        )));
    }
    if base.k() + a != k {
        return Err(Error::InvalidParameter(format!(
            "base is {}-uniform, expected k - a = {}",
            base.k(),
            k - a
        )));
    }
    let d = m - 1;
    let blocks = combinations(d, a);
    let mut labels: Vec<String> = (0..d).map(|i| format!("d{i}")).collect();
    let mut members = Vec::with_capacity(blocks.len() * base.len());
    for (c, x) in blocks.iter().enumerate() {
        let offset = (d + c * base.n()) as u32;
        labels.extend((0..base.n()).map(|e| format!("c{c}:{e}")));
        for g in base.members() {
            let elems = x.iter().map(|&e| e as u32).chain(g.elems().iter().map(|&e| e + offset));
            members.push(KSet::from_unsorted(elems));
        }
    }
    let family = SetFamily::new(k, d + blocks.len() * base.n(), members)?;
    Ok(Construction {
        kind: Kind::Product { k, l: l.to_vec(), m, a },
        family,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::chain_family;

    #[test]
    fn sizes() {
        let base = chain_family(2, 3, 3).unwrap().family;
        assert_eq!(base.len(), 9);
        let small = SetFamily::from_sets(2, 8, &[vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]]).unwrap();
        assert_eq!(block_product_family(3, &[0, 2], 3, &small, 1).unwrap().family.len(), 8);
        assert_eq!(
            block_product_family(4, &[0, 1, 3], 3, &small, 2).unwrap().family.len(),
            4
        );
        assert!(block_product_family(5, &[0], 3, &small, 3).is_err());
    }

    #[test]
    fn no_l_sunflower_with_m_petals() {
        // Base: chain for L' = {1} with m = 3 has no 3-petal sunflower with kernel 1;
        // shifted by a = 1 this forbids L = {0, 2}.
        let base = chain_family(2, 2, 3).unwrap().family;
        let c = block_product_family(3, &[0, 2], 3, &base, 1).unwrap();
        assert!(c.check_guarantee().is_ok());
    }
}
