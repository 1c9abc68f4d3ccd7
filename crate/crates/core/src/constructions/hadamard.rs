use super::{Construction, Kind};
use crate::constructions::gf::is_prime;
use crate::error::{Error, Result};
use crate::setcore::{KSet, SetFamily};

pub const SUPPORTED_ORDERS: &str =
    "2^t (Sylvester), q+1 with q ≡ 3 mod 4 prime (Paley I), 2(q+1) with q ≡ 1 mod 4 prime (Paley II)";

const MEMBER_CAP: usize = 1_000_000;

fn sylvester(order: usize) -> Vec<Vec<i8>> {
    let mut h = vec![vec![1i8]];
    while h.len() < order {
        let s = h.len();
        let mut next = vec![vec![0i8; 2 * s]; 2 * s];
        for i in 0..s {
            for j in 0..s {
                next[i][j] = h[i][j];
                next[i][j + s] = h[i][j];
                next[i + s][j] = h[i][j];
                next[i + s][j + s] = -h[i][j];
            }
        }
        h = next;
    }
    h
}

fn quadratic_character(x: usize, q: usize) -> i8 {
    if x.is_multiple_of(q) {
        0
    } else if crate::constructions::gf::pow_mod(x as u32, ((q - 1) / 2) as u32, q as u32) == 1 {
        1
    } else {
        -1
    }
}

/// `[[0, 1ᵀ], [±1, Q]]` with `Q` the Jacobsthal matrix of `F_q`.
fn conference(q: usize, sign: i8) -> Vec<Vec<i8>> {
    let mut c = vec![vec![0i8; q + 1]; q + 1];
    for i in 0..q {
        c[0][i + 1] = 1;
        c[i + 1][0] = sign;
        for j in 0..q {
            c[i + 1][j + 1] = quadratic_character((j + q - i) % q, q);
        }
    }
    c
}

fn paley1(q: usize) -> Vec<Vec<i8>> {
    let mut h = conference(q, -1);
    for (i, row) in h.iter_mut().enumerate() {
        row[i] += 1;
    }
    h
}

fn paley2(q: usize) -> Vec<Vec<i8>> {
    let c = conference(q, 1);
    let n = q + 1;
    let mut h = vec![vec![0i8; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let block: [[i8; 2]; 2] = if c[i][j] == 0 {
                [[1, -1], [-1, -1]]
            } else {
                let s = c[i][j];
                [[s, s], [s, -s]]
            };
            for (di, r) in block.iter().enumerate() {
                for (dj, &v) in r.iter().enumerate() {
                    h[2 * i + di][2 * j + dj] = v;
                }
            }
        }
    }
    h
}

/// A Hadamard matrix of the given order with an all-ones first row.
pub fn hadamard_matrix(order: usize) -> Result<Vec<Vec<i8>>> {
    let h = if order >= 1 && order.is_power_of_two() {
        sylvester(order)
    } else if order >= 4 && is_prime(order - 1) && (order - 1) % 4 == 3 {
        paley1(order - 1)
    } else if order.is_multiple_of(2) && order >= 4 && is_prime(order / 2 - 1) && (order / 2 - 1) % 4 == 1 {
        paley2(order / 2 - 1)
    } else {
        return Err(Error::InvalidParameter(format!(
            "no Hadamard construction of order {order}; supported: {SUPPORTED_ORDERS}"
        )));
    };
    // Normalise the first row by negating columns.
    let signs: Vec<i8> = h[0].clone();
    let h: Vec<Vec<i8>> = h
        .iter()
        .map(|row| row.iter().zip(&signs).map(|(&x, &s)| x * s).collect())
        .collect();
    for i in 0..order {
        for j in 0..order {
            let dot: i32 = (0..order).map(|c| h[i][c] as i32 * h[j][c] as i32).sum();
            let want = if i == j { order as i32 } else { 0 };
            if dot != want {
                return Err(Error::GuaranteeViolated(format!(
                    "rows {i} and {j} of the order-{order} matrix are not orthogonal"
                )));
            }
        }
    }
    Ok(h)
}

/// Product of `k/(2p)` disjoint copies of the `8p − 2` sign sets of the
/// non-first rows of an order-`4p` Hadamard matrix; `(8p − 2)^{k/2p}` members
/// on `2k` points.
pub fn hadamard_family(p: usize, k: usize) -> Result<Construction> {
    if p < 1 || k == 0 || !k.is_multiple_of(2 * p) {
        return Err(Error::InvalidParameter(format!(
            "k={k} must be a positive multiple of 2p={}",
            2 * p
        )));
    }
    let order = 4 * p;
    let h = hadamard_matrix(order)?;
    let mut base: Vec<Vec<u32>> = Vec::with_capacity(2 * order - 2);
    for row in &h[1..] {
        for sign in [1i8, -1] {
            base.push((0..order as u32).filter(|&c| row[c as usize] == sign).collect());
        }
    }
    let copies = k / (2 * p);
    let total = (base.len() as u128).checked_pow(copies as u32).unwrap_or(u128::MAX);
    if total > MEMBER_CAP as u128 {
        return Err(Error::CapExceeded(format!("{total} members; use a smaller k")));
    }
    let mut members: Vec<Vec<u32>> = vec![vec![]];
    for c in 0..copies {
        let offset = (c * order) as u32;
        members = members
            .into_iter()
            .flat_map(|m| {
                base.iter().map(move |b| {
                    let mut v = m.clone();
                    v.extend(b.iter().map(|&e| e + offset));
                    v
                })
            })
            .collect();
    }
    let sets = members.into_iter().map(KSet::from_unsorted).collect();
    let family = SetFamily::new(k, 2 * k, sets)?;
    let labels = (0..2 * k).map(|e| format!("b{}:{}", e / order, e % order)).collect();
    Ok(Construction {
        kind: Kind::Hadamard { p, k },
        family,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders() {
        for order in [1, 2, 4, 8, 12, 16, 20, 28, 36, 44] {
            let h = hadamard_matrix(order).unwrap();
            assert!(h[0].iter().all(|&x| x == 1));
        }
        assert!(hadamard_matrix(52).is_err());
    }

    #[test]
    fn sizes() {
        assert_eq!(hadamard_family(2, 4).unwrap().family.len(), 14);
        assert_eq!(hadamard_family(2, 8).unwrap().family.len(), 196);
        assert!(hadamard_family(2, 6).is_err());
    }

    #[test]
    fn intersections_divisible_by_p() {
        for (p, k) in [(2, 4), (2, 8), (3, 6), (5, 10), (7, 14)] {
            let c = hadamard_family(p, k).unwrap();
            assert!(c.check_guarantee().is_ok(), "p={p}");
        }
    }
}
