//! Dense linear algebra over the prime field `F_p`.

use rand::Rng;

use crate::error::{Error, Result};

pub type Vector = Vec<u32>;

/// Row-major matrix over `F_p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u32>,
}

pub fn is_prime(p: usize) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

pub fn inv_mod(x: u32, p: u32) -> u32 {
    // Fermat; p is prime and x nonzero.
    pow_mod(x, p - 2, p)
}

pub fn pow_mod(b: u32, mut e: u32, p: u32) -> u32 {
    let (p, mut b, mut r) = (p as u64, (b % p) as u64, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r as u32
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vector], dim: usize) -> Self {
        let mut m = Matrix::zeros(dim, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, &v) in c.iter().enumerate().take(dim) {
                m.data[i * cols.len() + j] = v;
            }
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vector {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn mul(&self, other: &Matrix, p: u32) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k) as u64;
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] = ((out.data[idx] as u64 + a * other.get(k, j) as u64) % p as u64) as u32;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[u32], p: u32) -> Vector {
        (0..self.rows)
            .map(|i| {
                let s: u64 = (0..self.cols).map(|j| self.get(i, j) as u64 * v[j] as u64).sum();
                (s % p as u64) as u32
            })
            .collect()
    }

    pub fn rank(&self, p: u32) -> usize {
        let mut m = self.clone();
        row_reduce(&mut m, p).len()
    }

    pub fn inverse(&self, p: u32) -> Option<Matrix> {
        let n = self.rows;
        if n != self.cols {
            return None;
        }
        let mut aug = Matrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, n + i, 1);
        }
        let pivots = row_reduce(&mut aug, p);
        if pivots.len() < n || pivots.iter().enumerate().any(|(i, &c)| c != i) {
            return None;
        }
        let mut inv = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, aug.get(i, n + j));
            }
        }
        Some(inv)
    }

    /// Basis of `{x : self * x = 0}`.
    pub fn null_space(&self, p: u32) -> Vec<Vector> {
        let mut m = self.clone();
        let pivots = row_reduce(&mut m, p);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut x = vec![0u32; self.cols];
                x[f] = 1;
                for (r, &pc) in pivots.iter().enumerate() {
                    x[pc] = (p - m.get(r, f)) % p;
                }
                x
            })
            .collect()
    }
}

/// Reduced row echelon form in place; returns pivot columns.
fn row_reduce(m: &mut Matrix, p: u32) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..m.cols {
        if row == m.rows {
            break;
        }
        let Some(pr) = (row..m.rows).find(|&r| m.get(r, col) != 0) else {
            continue;
        };
        if pr != row {
            for c in 0..m.cols {
                m.data.swap(pr * m.cols + c, row * m.cols + c);
            }
        }
        let inv = inv_mod(m.get(row, col), p) as u64;
        for c in 0..m.cols {
            let v = m.get(row, c) as u64 * inv % p as u64;
            m.set(row, c, v as u32);
        }
        for r in 0..m.rows {
            if r == row {
                continue;
            }
            let factor = m.get(r, col) as u64;
            if factor == 0 {
                continue;
            }
            for c in 0..m.cols {
                let v = (m.get(r, c) as u64 + (p as u64 - factor) * m.get(row, c) as u64) % p as u64;
                m.set(r, c, v as u32);
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// Rank of the span of `vectors` in `F_p^dim`.
pub fn span_rank(vectors: &[Vector], dim: usize, p: u32) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    Matrix::from_columns(vectors, dim).rank(p)
}

pub fn random_invertible<R: Rng>(dim: usize, p: u32, rng: &mut R) -> Matrix {
    loop {
        let mut m = Matrix::zeros(dim, dim);
        for x in m.data.iter_mut() {
            *x = rng.gen_range(0..p);
        }
        if m.rank(p) == dim {
            return m;
        }
    }
}

/// `|GL(dim, p)| = Π_{i=1}^{dim} (p^dim − p^{i−1})`, or `None` on overflow.
pub fn gl_order(dim: usize, p: u32) -> Option<u128> {
    let q = (p as u128).checked_pow(dim as u32)?;
    (0..dim).try_fold(1u128, |acc, i| acc.checked_mul(q - (p as u128).pow(i as u32)))
}

/// Every invertible `dim × dim` matrix, in lexicographic order of entries.
pub fn enumerate_invertible(dim: usize, p: u32, cap: usize) -> Result<Vec<Matrix>> {
    match gl_order(dim, p) {
        Some(s) if s <= cap as u128 => {}
        _ => return Err(Error::CapExceeded(format!("GL({dim}, {p}) exceeds cap {cap}"))),
    }
    let total = (p as u64).pow((dim * dim) as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut m = Matrix::zeros(dim, dim);
        let mut c = code;
        for x in m.data.iter_mut().rev() {
            *x = (c % p as u64) as u32;
            c /= p as u64;
        }
        if m.rank(p) == dim {
            out.push(m);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn inverse_roundtrip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let a = random_invertible(5, 7, &mut rng);
        let inv = a.inverse(7).unwrap();
        assert_eq!(a.mul(&inv, 7), Matrix::identity(5));
    }

    #[test]
    fn null_space_is_annihilated() {
        let m = Matrix {
            rows: 2,
            cols: 4,
            data: vec![1, 2, 0, 1, 0, 1, 1, 3],
        };
        let ns = m.null_space(5);
        assert_eq!(ns.len(), 2);
        for x in ns {
            assert!(m.mul_vec(&x, 5).iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn gl_counts() {
        assert_eq!(gl_order(2, 2), Some(6));
        assert_eq!(enumerate_invertible(2, 2, 100).unwrap().len(), 6);
        assert_eq!(enumerate_invertible(2, 3, 100).unwrap().len(), 48);
        assert!(enumerate_invertible(3, 3, 100).is_err());
    }

    #[test]
    fn primes() {
        assert!(is_prime(2) && is_prime(11) && !is_prime(1) && !is_prime(27));
    }
}
