//! Subspace systems over `F_p` and the sampled `k`-partite family they define.
//!
//! Part indices in patterns are 1-based, as in `[k]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gf::{enumerate_invertible, is_prime, random_invertible, span_rank, Matrix, Vector};
use super::{relabel, Construction, Kind};
use crate::error::{Error, Result};
use crate::setcore::{binom, combinations};

const SEARCH_BUDGET: usize = 1_000_000;
pub const MICRO_CAP: usize = 200_000;

/// `count` vectors of `F_p^ell`, any `ell` of them independent. Depth-first
/// over nonzero vectors in lexicographic order.
pub fn find_general_position(p: usize, ell: usize, count: usize) -> Result<Vec<Vector>> {
    if !is_prime(p) || ell == 0 {
        return Err(Error::InvalidParameter(format!(
            "need prime p and ell >= 1, got p={p}, ell={ell}"
        )));
    }
    let total = (p as u64).checked_pow(ell as u32).unwrap_or(u64::MAX);
    let universe: Vec<Vector> = (1..total.min(SEARCH_BUDGET as u64))
        .map(|mut c| {
            let mut v = vec![0u32; ell];
            for x in v.iter_mut().rev() {
                *x = (c % p as u64) as u32;
                c /= p as u64;
            }
            v
        })
        .collect();
    let mut chosen: Vec<usize> = Vec::new();
    let mut budget = SEARCH_BUDGET;
    if dfs(&universe, p as u32, ell, count, 0, &mut chosen, &mut budget) {
        Ok(chosen.into_iter().map(|i| universe[i].clone()).collect())
    } else {
        Err(Error::SearchFailed(format!(
            "no {count} vectors in general position in F_{p}^{ell}; try a larger p"
        )))
    }
}

fn compatible(universe: &[Vector], p: u32, ell: usize, chosen: &[usize], cand: usize) -> bool {
    let r = ell.min(chosen.len() + 1) - 1;
    combinations(chosen.len(), r).into_iter().all(|sub| {
        let mut vs: Vec<Vector> = sub.iter().map(|&s| universe[chosen[s]].clone()).collect();
        vs.push(universe[cand].clone());
        span_rank(&vs, ell, p) == vs.len()
    })
}

fn dfs(
    universe: &[Vector],
    p: u32,
    ell: usize,
    count: usize,
    from: usize,
    chosen: &mut Vec<usize>,
    budget: &mut usize,
) -> bool {
    if chosen.len() == count {
        return true;
    }
    for c in from..universe.len() {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        if compatible(universe, p, ell, chosen, c) {
            chosen.push(c);
            if dfs(universe, p, ell, count, c + 1, chosen, budget) {
                return true;
            }
            chosen.pop();
        }
    }
    false
}

/// Subspaces `V^(1..k)` of `F_p^{ℓd}`, `d = binom(k, ℓ)`, each spanned by
/// `v_I^(i)`: the vector `w_I^(i)` placed in block `I`, zero elsewhere.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubspaceSystem {
    pub k: usize,
    pub ell: usize,
    pub p: usize,
    pub d: usize,
    /// The pattern 𝓘, 1-based.
    pub pattern: Vec<Vec<usize>>,
    /// `binom([k], ℓ)` in lexicographic order (0-based); block `t` belongs to `index_sets[t]`.
    pub index_sets: Vec<Vec<usize>>,
    /// `w[t][i] = w_I^(i)` for `I = index_sets[t]`.
    pub w: Vec<Vec<Vector>>,
}

impl SubspaceSystem {
    pub fn dim(&self) -> usize {
        self.ell * self.d
    }

    /// `v_j^(i)` for 0-based part `i` and block `j`.
    pub fn basis_vector(&self, i: usize, j: usize) -> Vector {
        let mut v = vec![0u32; self.dim()];
        v[j * self.ell..(j + 1) * self.ell].copy_from_slice(&self.w[j][i]);
        v
    }

    pub fn basis(&self, i: usize) -> Vec<Vector> {
        (0..self.d).map(|j| self.basis_vector(i, j)).collect()
    }

    pub fn sum_rank(&self, parts: &[usize]) -> usize {
        let vs: Vec<Vector> = parts.iter().flat_map(|&i| self.basis(i)).collect();
        span_rank(&vs, self.dim(), self.p as u32)
    }

    fn in_pattern(&self, parts0: &[usize]) -> bool {
        let one: Vec<usize> = parts0.iter().map(|i| i + 1).collect();
        self.pattern.contains(&one)
    }

    /// Dimension properties over every `I` of size `ℓ` and `ℓ + 1`:
    /// `ℓd` off the pattern, `ℓd − 1` on it, `ℓd` for all `(ℓ+1)`-sets.
    pub fn check_dimensions(&self) -> Vec<String> {
        let full = self.dim();
        let mut fails = Vec::new();
        for set in combinations(self.k, self.ell) {
            let want = if self.in_pattern(&set) { full - 1 } else { full };
            let got = self.sum_rank(&set);
            if got != want {
                fails.push(format!("dim sum over {set:?} is {got}, expected {want}"));
            }
        }
        for set in combinations(self.k, self.ell + 1) {
            let got = self.sum_rank(&set);
            if got != full {
                fails.push(format!("dim sum over {set:?} is {got}, expected {full}"));
            }
        }
        fails
    }
}

fn parse_pattern(k: usize, ell: usize, pattern: &[Vec<usize>]) -> Result<Vec<Vec<usize>>> {
    let mut out = BTreeSet::new();
    for set in pattern {
        let s: BTreeSet<usize> = set.iter().copied().collect();
        if s.len() != ell || s.iter().any(|&x| x == 0 || x > k) {
            return Err(Error::InvalidParameter(format!(
                "pattern member {set:?} is not an {ell}-subset of [1, {k}]"
            )));
        }
        out.insert(s.into_iter().collect::<Vec<_>>());
    }
    Ok(out.into_iter().collect())
}

/// Builds the vectors `w_I^(i)`. Off the pattern they are in general
/// position; for `I` in the pattern with `a = min I`, `w_I^(a)` is the first
/// combination of `{w_I^(i) : i ∈ I∖a}` outside every other `(ℓ−1)`-span.
pub fn build_subspace_system(k: usize, ell: usize, p: usize, pattern: &[Vec<usize>]) -> Result<SubspaceSystem> {
    if !(k > ell && ell >= 2) {
        return Err(Error::InvalidParameter(format!(
            "need k > ell >= 2, got k={k}, ell={ell}"
        )));
    }
    let pattern = parse_pattern(k, ell, pattern)?;
    let d = binom(k as u64, ell as u64) as usize;
    let index_sets = combinations(k, ell);
    let gp_k = find_general_position(p, ell, k)?;
    let gp_rest = find_general_position(p, ell, k - 1)?;
    let pu = p as u32;
    let mut w = Vec::with_capacity(d);
    for set in &index_sets {
        let one: Vec<usize> = set.iter().map(|i| i + 1).collect();
        if !pattern.contains(&one) {
            w.push(gp_k.clone());
            continue;
        }
        let a = set[0];
        let mut ws = vec![Vec::new(); k];
        let others: Vec<usize> = (0..k).filter(|&i| i != a).collect();
        for (slot, &i) in others.iter().enumerate() {
            ws[i] = gp_rest[slot].clone();
        }
        let rest: Vec<usize> = set[1..].to_vec();
        let competitors: Vec<Vec<usize>> = combinations(others.len(), ell - 1)
            .into_iter()
            .map(|c| c.into_iter().map(|x| others[x]).collect::<Vec<_>>())
            .filter(|c| *c != rest)
            .collect();
        let coeff_total = (p as u64).pow((ell - 1) as u32);
        let mut found = None;
        for code in 1..coeff_total {
            let mut c = code;
            let mut v = vec![0u32; ell];
            for &i in &rest {
                let coef = (c % p as u64) as u32;
                c /= p as u64;
                for (x, &y) in v.iter_mut().zip(&ws[i]) {
                    *x = (*x + coef * y) % pu;
                }
            }
            let ok = competitors.iter().all(|comp| {
                let mut vs: Vec<Vector> = comp.iter().map(|&i| ws[i].clone()).collect();
                vs.push(v.clone());
                span_rank(&vs, ell, pu) == ell
            });
            if ok {
                found = Some(v);
                break;
            }
        }
        let Some(v) = found else {
            return Err(Error::SearchFailed(format!(
                "no special vector for I={one:?} over F_{p}; try a larger p"
            )));
        };
        ws[a] = v;
        w.push(ws);
    }
    let sys = SubspaceSystem {
        k,
        ell,
        p,
        d,
        pattern,
        index_sets,
        w,
    };
    let fails = sys.check_dimensions();
    if !fails.is_empty() {
        return Err(Error::SearchFailed(format!(
            "dimension properties fail over F_{p}: {}; try a larger p",
            fails.join("; ")
        )));
    }
    Ok(sys)
}

/// Smallest prime `p <= max_p` for which the subspace system exists.
pub fn smallest_prime(k: usize, ell: usize, pattern: &[Vec<usize>], max_p: usize) -> Option<usize> {
    (2..=max_p)
        .filter(|&p| is_prime(p))
        .find(|&p| build_subspace_system(k, ell, p, pattern).is_ok())
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Point {
    part: usize,
    coords: Vec<u32>,
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<String> = self.coords.iter().map(u32::to_string).collect();
        write!(f, "X{}[{}]", self.part + 1, c.join(""))
    }
}

/// The member with defining matrix `a`: `x^(i) = (A v_j^(i))_j`.
fn member_points(sys: &SubspaceSystem, a: &Matrix) -> Vec<Vec<u32>> {
    (0..sys.k)
        .map(|i| {
            (0..sys.d)
                .flat_map(|j| a.mul_vec(&sys.basis_vector(i, j), sys.p as u32))
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiniteFieldOptions {
    pub samples: usize,
    pub kernels: usize,
    pub pairs: usize,
    pub micro: bool,
    pub seed: u64,
}

impl Default for FiniteFieldOptions {
    fn default() -> Self {
        FiniteFieldOptions {
            samples: 200,
            kernels: 20,
            pairs: 10_000,
            micro: false,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelCount {
    /// Pattern member, 1-based.
    pub parts: Vec<usize>,
    pub count: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiniteFieldReport {
    pub d: usize,
    pub ambient_dim: usize,
    pub dimension_failures: Vec<String>,
    pub expected_extensions: u64,
    pub kernel_counts: Vec<KernelCount>,
    pub pairs_checked: usize,
    pub pair_failures: Vec<String>,
}

impl FiniteFieldReport {
    pub fn passed(&self) -> bool {
        self.dimension_failures.is_empty()
            && self.pair_failures.is_empty()
            && self.kernel_counts.iter().all(|c| c.count == self.expected_extensions)
    }
}

/// Parts on which the members with defining matrices `a` and `b` agree.
pub fn agreement(sys: &SubspaceSystem, a: &Matrix, b: &Matrix) -> Vec<usize> {
    let p = sys.p as u32;
    (0..sys.k)
        .filter(|&i| {
            (0..sys.d).all(|j| {
                let v = sys.basis_vector(i, j);
                a.mul_vec(&v, p) == b.mul_vec(&v, p)
            })
        })
        .collect()
}

/// Whether an agreement set is allowed: fewer than `ℓ` parts, or a pattern member.
pub fn agreement_allowed(sys: &SubspaceSystem, parts: &[usize]) -> bool {
    parts.len() < sys.ell || (parts.len() == sys.ell && sys.in_pattern(parts))
}

/// Number of members containing the kernel `{x^(i)}_{i∈I}` of the member `a`,
/// counted over the vectors `y = A' v_{j'}^{(i')}` that determine `A'`.
pub fn extension_count(sys: &SubspaceSystem, a: &Matrix, parts: &[usize]) -> Result<u64> {
    let p = sys.p as u32;
    let dim = sys.dim();
    let mut basis: Vec<Vector> = Vec::new();
    for &i in parts {
        for v in sys.basis(i) {
            let mut trial = basis.clone();
            trial.push(v.clone());
            if span_rank(&trial, dim, p) == trial.len() {
                basis = trial;
            }
        }
    }
    let extra = (0..sys.k)
        .filter(|i| !parts.contains(i))
        .flat_map(|i| (0..sys.d).map(move |j| (i, j)))
        .map(|(i, j)| sys.basis_vector(i, j))
        .find(|v| {
            let mut trial = basis.clone();
            trial.push(v.clone());
            span_rank(&trial, dim, p) == dim
        })
        .ok_or_else(|| Error::GuaranteeViolated("kernel span plus any outside vector is not the whole space".into()))?;
    if basis.len() + 1 != dim {
        return Err(Error::GuaranteeViolated(format!(
            "kernel spans dimension {}, expected {}",
            basis.len(),
            dim - 1
        )));
    }
    let mut src = basis.clone();
    src.push(extra);
    let src_inv = Matrix::from_columns(&src, dim).inverse(p).expect("basis is invertible");
    let images: Vec<Vector> = basis.iter().map(|v| a.mul_vec(v, p)).collect();
    let kernel_vectors: Vec<(Vector, Vector)> = parts
        .iter()
        .flat_map(|&i| sys.basis(i))
        .map(|v| {
            let img = a.mul_vec(&v, p);
            (v, img)
        })
        .collect();
    let total = (p as u64).pow(dim as u32);
    let mut count = 0;
    for code in 0..total {
        let mut y = vec![0u32; dim];
        let mut c = code;
        for x in y.iter_mut() {
            *x = (c % p as u64) as u32;
            c /= p as u64;
        }
        let mut dst = images.clone();
        dst.push(y);
        let candidate = Matrix::from_columns(&dst, dim).mul(&src_inv, p);
        if candidate.rank(p) == dim && kernel_vectors.iter().all(|(v, img)| candidate.mul_vec(v, p) == *img) {
            count += 1;
        }
    }
    Ok(count)
}

/// A defining matrix agreeing with `a` on `Σ_{i∈S} V^(i)`: `A + R Q` with the
/// rows of `Q` spanning the annihilator of that sum.
fn perturb<R: Rng>(sys: &SubspaceSystem, a: &Matrix, parts: &[usize], rng: &mut R) -> Option<Matrix> {
    let p = sys.p as u32;
    let dim = sys.dim();
    let span: Vec<Vector> = parts.iter().flat_map(|&i| sys.basis(i)).collect();
    let rows = if span.is_empty() {
        Matrix::zeros(0, dim)
    } else {
        let m = Matrix::from_columns(&span, dim);
        // Transpose so that null_space gives functionals vanishing on the span.
        let mut t = Matrix::zeros(m.cols, m.rows);
        for r in 0..m.rows {
            for c in 0..m.cols {
                t.set(c, r, m.get(r, c));
            }
        }
        t
    };
    let ann = if rows.rows == 0 {
        (0..dim)
            .map(|i| {
                let mut e = vec![0; dim];
                e[i] = 1;
                e
            })
            .collect()
    } else {
        rows.null_space(p)
    };
    if ann.is_empty() {
        return None;
    }
    let mut q = Matrix::zeros(ann.len(), dim);
    for (r, phi) in ann.iter().enumerate() {
        for (c, &v) in phi.iter().enumerate().take(dim) {
            q.set(r, c, v);
        }
    }
    let mut rmat = Matrix::zeros(dim, ann.len());
    for x in rmat.data.iter_mut() {
        *x = rng.gen_range(0..p);
    }
    let n = rmat.mul(&q, p);
    let mut b = a.clone();
    for (x, y) in b.data.iter_mut().zip(&n.data) {
        *x = (*x + y) % p;
    }
    (b.rank(p) == dim && b != *a).then_some(b)
}

/// Builds the subspace system, samples members (or enumerates them in micro
/// mode), and checks the agreement and kernel-extension properties.
pub fn finite_field_family(
    k: usize,
    ell: usize,
    p: usize,
    pattern: &[Vec<usize>],
    opts: &FiniteFieldOptions,
) -> Result<(SubspaceSystem, Construction, FiniteFieldReport)> {
    let sys = build_subspace_system(k, ell, p, pattern)?;
    let pu = p as u32;
    let dim = sys.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let matrices: Vec<Matrix> = if opts.micro {
        enumerate_invertible(dim, pu, MICRO_CAP)?
    } else {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(opts.samples);
        for _ in 0..opts.samples {
            let m = random_invertible(dim, pu, &mut rng);
            if seen.insert(m.data.clone()) {
                out.push(m);
            }
        }
        out
    };
    let members: Vec<Vec<Point>> = matrices
        .iter()
        .map(|a| {
            member_points(&sys, a)
                .into_iter()
                .enumerate()
                .map(|(part, coords)| Point { part, coords })
                .collect()
        })
        .collect();
    let (family, labels) = relabel(k, members)?;

    let mut pair_failures = Vec::new();
    let mut pairs_checked = 0;
    let mut attempts = 0usize;
    if matrices.len() >= 2 {
        // Perturbed partners can be singular; redraw until `pairs` are checked.
        while pairs_checked < opts.pairs && attempts < 20 * opts.pairs {
            let t = attempts;
            attempts += 1;
            let i = rng.gen_range(0..matrices.len());
            let other = if t.is_multiple_of(2) {
                let mut j = rng.gen_range(0..matrices.len() - 1);
                if j >= i {
                    j += 1;
                }
                Some(matrices[j].clone())
            } else {
                // A partner forced to agree with member i on a random set of parts.
                let size = rng.gen_range(1..=ell);
                let mut parts: Vec<usize> = (0..k).collect();
                for x in 0..size {
                    let y = rng.gen_range(x..k);
                    parts.swap(x, y);
                }
                parts.truncate(size);
                parts.sort_unstable();
                perturb(&sys, &matrices[i], &parts, &mut rng)
            };
            let Some(b) = other else { continue };
            pairs_checked += 1;
            let agree = agreement(&sys, &matrices[i], &b);
            if !agreement_allowed(&sys, &agree) && pair_failures.len() < 10 {
                let one: Vec<usize> = agree.iter().map(|x| x + 1).collect();
                pair_failures.push(format!("pair agrees on parts {one:?}"));
            }
        }
    }

    let kernel_counts = if sys.pattern.is_empty() {
        Vec::new()
    } else {
        (0..opts.kernels)
            .into_par_iter()
            .map(|t| {
                let mut r = ChaCha8Rng::seed_from_u64(opts.seed);
                r.set_stream(t as u64 + 1);
                let one = sys.pattern[t % sys.pattern.len()].clone();
                let parts: Vec<usize> = one.iter().map(|x| x - 1).collect();
                let a = random_invertible(dim, pu, &mut r);
                extension_count(&sys, &a, &parts).map(|count| KernelCount { parts: one, count })
            })
            .collect::<Result<Vec<_>>>()?
    };
    let report = FiniteFieldReport {
        d: sys.d,
        ambient_dim: dim,
        dimension_failures: sys.check_dimensions(),
        expected_extensions: (p as u64).pow(dim as u32) - (p as u64).pow(dim as u32 - 1),
        kernel_counts,
        pairs_checked,
        pair_failures,
    };
    let kind = Kind::FiniteField {
        k,
        ell,
        p,
        pattern: sys.pattern.clone(),
        samples: matrices.len(),
    };
    Ok((sys, Construction { kind, family, labels }, report))
}

/// Counts agreement sets among all sampled pairs, keyed by 1-based part sets.
pub fn agreement_histogram(sys: &SubspaceSystem, matrices: &[Matrix]) -> BTreeMap<Vec<usize>, usize> {
    let mut h = BTreeMap::new();
    for i in 0..matrices.len() {
        for j in i + 1..matrices.len() {
            let a: Vec<usize> = agreement(sys, &matrices[i], &matrices[j])
                .iter()
                .map(|x| x + 1)
                .collect();
            *h.entry(a).or_insert(0) += 1;
        }
    }
    h
}
