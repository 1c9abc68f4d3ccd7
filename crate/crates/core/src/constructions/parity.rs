use super::{Construction, Kind};
use crate::error::{Error, Result};
use crate::setcore::{binom, combinations, KSet, SetFamily};

/// Over points `a_i, x_i, y_i` (ids `3i, 3i+1, 3i+2`), every `k`-set whose
/// trace on each triple is empty, `{a_i, x_i}` or `{a_i, y_i}`.
pub fn parity_triple_family(k: usize, n: usize) -> Result<Construction> {
    if k < 4 || !k.is_multiple_of(2) || n < k / 2 {
        return Err(Error::InvalidParameter(format!(
            "need even k >= 4 and n >= k/2, got k={k}, n={n}"
        )));
    }
    let half = k / 2;
    let mut members = Vec::new();
    for triples in combinations(n, half) {
        for mask in 0u32..1 << half {
            let elems = triples.iter().enumerate().flat_map(|(b, &i)| {
                let other = if mask >> b & 1 == 0 { 3 * i + 1 } else { 3 * i + 2 };
                [(3 * i) as u32, other as u32]
            });
            members.push(KSet::from_unsorted(elems));
        }
    }
    let expected = (1u128 << half) * binom(n as u64, half as u64);
    if members.len() as u128 != expected {
        return Err(Error::GuaranteeViolated(format!(
            "{} members, expected {expected}",
            members.len()
        )));
    }
    let family = SetFamily::new(k, 3 * n, members)?;
    let labels = (0..3 * n)
        .map(|e| format!("{}{}", ["a", "x", "y"][e % 3], e / 3))
        .collect();
    Ok(Construction {
        kind: Kind::Parity { k, n },
        family,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(parity_triple_family(4, 3).unwrap().family.len(), 12);
        assert_eq!(parity_triple_family(4, 5).unwrap().family.len(), 40);
        assert!(parity_triple_family(5, 5).is_err());
    }

    #[test]
    fn odd_clique_bound() {
        assert!(parity_triple_family(4, 5).unwrap().check_guarantee().is_ok());
    }
}
