//! Multiplicative-weights fractional colouring of `G_F` for the modular case
//! (allowed intersections `a mod p`), with the atomic extraction as oracle.
//!
//! Weights are kept exactly as `w_t(F) = W_t(F) / (|F| * (4χ²)^(t-1))` with
//! integer `W_t`: a member outside the round's independent set is multiplied
//! by `4χ²+1`, one inside by `4χ²-χ+1`.

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::{check_mod_params, extract_mod_int, forbidden_sizes, modular_fraction};
use crate::setcore::{build_graph_sizes, SetFamily, SizeSet};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FractionalColouring {
    pub chi: u64,
    #[serde(rename = "T")]
    pub t: usize,
    pub rounds: Vec<Vec<usize>>,
}

impl FractionalColouring {
    /// How many rounds contain each member.
    pub fn coverage(&self, members: usize) -> Vec<usize> {
        let mut c = vec![0; members];
        for r in &self.rounds {
            for &i in r {
                c[i] += 1;
            }
        }
        c
    }

    /// `T / min coverage`, the size of the uniform distribution over rounds.
    pub fn claimed_size(&self, members: usize) -> Option<f64> {
        let min = self.coverage(members).into_iter().min()?;
        (min > 0).then(|| self.rounds.len() as f64 / min as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MwuReport {
    pub monotone: bool,
    pub terminal: bool,
    pub min_coverage: usize,
    pub coverage_floor: usize,
}

/// `max(2, min(⌈1/φ⌉, |F|))` for the extraction fraction `φ` of `(k, p, a, m)`.
pub fn chi_bound(k: usize, p: usize, a: usize, m: usize, family_size: usize) -> u64 {
    let inv = BigRational::from_integer(BigInt::from(1)) / modular_fraction(k, p, a, m);
    let ceil = inv.ceil().to_integer();
    let capped = ceil.to_u64().unwrap_or(u64::MAX).min(family_size as u64);
    capped.max(2)
}

pub fn rounds_count(chi: u64, family_size: usize) -> usize {
    let t = (20.0 * (chi as f64).powi(2) * (family_size as f64).ln()).ceil();
    (t as usize).max(1)
}

/// `⌊T / (30χ)⌋`, the per-member coverage every completed run must reach.
pub fn coverage_floor(t: usize, chi: u64) -> usize {
    t / (30 * chi as usize)
}

fn independent(f: &SetFamily, l: &SizeSet, set: &[usize]) -> Option<(usize, usize)> {
    crate::setcore::first_violation(f, set, l)
}

/// Runs the multiplicative-weights loop.
pub fn mwu_colouring(
    f: &SetFamily,
    p: usize,
    a: usize,
    m: usize,
    verify: bool,
) -> Result<(FractionalColouring, MwuReport)> {
    if f.is_empty() {
        return Err(Error::InvalidFamily("family is empty".into()));
    }
    check_mod_params(f.k(), p, a, m)?;
    let l = forbidden_sizes(f.k(), p, a);
    if verify {
        if let Some(c) = crate::sunflower::find_l_clique(f, &l, m, crate::clique::DEFAULT_CAP.max(f.len()))? {
            return Err(Error::CliqueFound(c));
        }
    }
    let n = f.len();
    let chi = chi_bound(f.k(), p, a, m, n);
    let t_rounds = rounds_count(chi, n);
    let four_chi2 = BigInt::from(4 * chi * chi);
    let up = &four_chi2 + 1;
    let down = &four_chi2 - BigInt::from(chi) + 1;
    let chi_big = BigInt::from(chi);

    let mut w: Vec<BigInt> = vec![BigInt::from(1); n];
    let mut total: BigInt = BigInt::from(n);
    let mut rounds = Vec::with_capacity(t_rounds);
    let mut monotone = true;
    for round in 0..t_rounds {
        let extracted = extract_mod_int(f, p, a, m, &w)?;
        let ext_weight = extracted.iter().fold(BigInt::zero(), |acc, &i| acc + &w[i]);
        let heaviest = (0..n)
            .max_by(|&i, &j| w[i].cmp(&w[j]).then(j.cmp(&i)))
            .expect("nonempty");
        let chosen = if ext_weight >= w[heaviest] {
            extracted
        } else {
            vec![heaviest]
        };
        let chosen_weight = chosen.iter().fold(BigInt::zero(), |acc, &i| acc + &w[i]);
        if &chosen_weight * &chi_big < total {
            return Err(Error::GuaranteeViolated(format!(
                "oracle guarantee violated in round {round}"
            )));
        }
        if let Some((i, j)) = independent(f, &l, &chosen) {
            return Err(Error::GuaranteeViolated(format!(
                "round {round}: members {i} and {j} intersect in {} elements",
                f.inter(i, j)
            )));
        }
        let mut inside = FixedBitSet::with_capacity(n);
        for &i in &chosen {
            inside.insert(i);
        }
        for (i, x) in w.iter_mut().enumerate() {
            *x *= if inside.contains(i) { &down } else { &up };
        }
        let next_total = w.iter().fold(BigInt::zero(), |acc, x| acc + x);
        if next_total > &total * &four_chi2 {
            monotone = false;
        }
        total = next_total;
        rounds.push(chosen);
    }
    let bound = BigInt::from(n) * num_traits::pow(four_chi2, t_rounds);
    let terminal = w.iter().all(|x| *x <= bound);
    let fc = FractionalColouring {
        chi,
        t: t_rounds,
        rounds,
    };
    let min_coverage = fc.coverage(n).into_iter().min().unwrap_or(0);
    let report = MwuReport {
        monotone,
        terminal,
        min_coverage,
        coverage_floor: coverage_floor(t_rounds, chi),
    };
    if !monotone || !terminal || min_coverage < report.coverage_floor {
        return Err(Error::GuaranteeViolated(format!("MWU invariants failed: {report:?}")));
    }
    Ok((fc, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violation: Option<(usize, usize, usize)>,
    pub min_frequency: f64,
    pub implied_size: Option<f64>,
}

/// Checks every round is independent in `G_F` and reports coverage.
pub fn validate_colouring(f: &SetFamily, l: &SizeSet, fc: &FractionalColouring) -> ValidationReport {
    let g = build_graph_sizes(f, l);
    let mut violation = None;
    'outer: for (r, set) in fc.rounds.iter().enumerate() {
        for (x, &i) in set.iter().enumerate() {
            if i >= f.len() {
                violation = Some((r, i, i));
                break 'outer;
            }
            for &j in &set[x + 1..] {
                if j >= f.len() || i == j || g.has_edge(i, j) {
                    violation = Some((r, i, j));
                    break 'outer;
                }
            }
        }
    }
    let t = fc.rounds.len().max(1) as f64;
    let valid_idx = violation.is_none();
    let min_frequency = if valid_idx {
        fc.coverage(f.len()).into_iter().min().map_or(0.0, |c| c as f64 / t)
    } else {
        0.0
    };
    ValidationReport {
        valid: valid_idx,
        violation,
        min_frequency,
        implied_size: (min_frequency > 0.0).then(|| 1.0 / min_frequency),
    }
}
