//! Extremal families showing the extraction bounds are tight, each emitted
//! with a deterministic map from structured vertex labels to ids.

use std::collections::BTreeMap;
use std::fmt::Display;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::setcore::{KSet, SetFamily, SizeSet};

mod chain;
pub mod finite_field;
pub mod gf;
mod hadamard;
mod parity;
mod product;
mod residue;

pub use chain::{
    chain_family, check_tree_properties, decompose_l, tree_family, tree_family_with_cap, LDecomposition, TreeFamily,
    TREE_CAP,
};
pub use finite_field::{
    build_subspace_system, find_general_position, finite_field_family, FiniteFieldOptions, FiniteFieldReport,
    SubspaceSystem,
};
pub use hadamard::{hadamard_family, hadamard_matrix, SUPPORTED_ORDERS};
pub use parity::parity_triple_family;
pub use product::block_product_family;
pub use residue::residue_avoiding_family;

/// Which construction produced a family, with its parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kind {
    Chain {
        k: usize,
        m: usize,
        n: usize,
    },
    Tree {
        k: usize,
        l: Vec<usize>,
        m: usize,
        n: usize,
    },
    Product {
        k: usize,
        l: Vec<usize>,
        m: usize,
        a: usize,
    },
    Residue {
        k: usize,
        p: usize,
        a: usize,
        n: usize,
    },
    Hadamard {
        p: usize,
        k: usize,
    },
    Parity {
        k: usize,
        n: usize,
    },
    FiniteField {
        k: usize,
        ell: usize,
        p: usize,
        pattern: Vec<Vec<usize>>,
        samples: usize,
    },
}

#[derive(Clone, Debug)]
pub struct Construction {
    pub kind: Kind,
    pub family: SetFamily,
    /// `labels[id]` names ground element `id`.
    pub labels: Vec<String>,
}

/// Sidecar metadata written next to a generated family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(flatten)]
    pub kind: Kind,
    pub members: usize,
    pub ground: usize,
    pub labels: Vec<String>,
}

impl Construction {
    pub fn metadata(&self) -> Metadata {
        Metadata {
            kind: self.kind.clone(),
            members: self.family.len(),
            ground: self.family.n(),
            labels: self.labels.clone(),
        }
    }

    /// Re-checks the family's defining guarantee with the exact searches.
    pub fn check_guarantee(&self) -> Result<()> {
        let f = &self.family;
        match &self.kind {
            Kind::Chain { m, .. } => no_sunflower(f, &SizeSet::new([1]), m + 1),
            Kind::Tree { l, m, .. } => no_sunflower(f, &SizeSet::new(l.iter().copied()), m + 1),
            Kind::Product { l, m, .. } => no_sunflower(f, &SizeSet::new(l.iter().copied()), *m),
            Kind::Residue { p, a, .. } => all_pairs(f, |s| s % p != *a, "intersection in the forbidden residue"),
            Kind::Hadamard { p, .. } => all_pairs(f, |s| s % p == 0, "intersection not divisible by p"),
            Kind::Parity { k, .. } => {
                let odd = SizeSet::new((1..*k).filter(|s| s % 2 == 1));
                let g = crate::setcore::build_graph_sizes(f, &odd);
                let cap = crate::clique::DEFAULT_CAP.max(f.len());
                let c = crate::clique::max_clique(&g, cap)?;
                if c.len() > 1 << (k / 2) {
                    return Err(Error::GuaranteeViolated(format!(
                        "odd-intersection clique of size {}",
                        c.len()
                    )));
                }
                Ok(())
            }
            // Checked during construction; the family is a sample.
            Kind::FiniteField { .. } => Ok(()),
        }
    }
}

fn no_sunflower(f: &SetFamily, l: &SizeSet, petals: usize) -> Result<()> {
    match crate::sunflower::find_l_sunflower(f, l, petals) {
        None => Ok(()),
        Some(w) => Err(Error::SunflowerFound(w)),
    }
}

fn all_pairs(f: &SetFamily, ok: impl Fn(usize) -> bool, what: &str) -> Result<()> {
    for i in 0..f.len() {
        for j in i + 1..f.len() {
            if !ok(f.inter(i, j)) {
                return Err(Error::GuaranteeViolated(format!("members {i} and {j}: {what}")));
            }
        }
    }
    Ok(())
}

/// Assigns ids to labels in sorted label order and rewrites the members.
pub(crate) fn relabel<L: Ord + Clone + Display>(k: usize, members: Vec<Vec<L>>) -> Result<(SetFamily, Vec<String>)> {
    let mut ids: BTreeMap<L, u32> = BTreeMap::new();
    for m in &members {
        for x in m {
            ids.entry(x.clone()).or_insert(0);
        }
    }
    for (i, v) in ids.values_mut().enumerate() {
        *v = i as u32;
    }
    let sets = members
        .iter()
        .map(|m| KSet::from_unsorted(m.iter().map(|x| ids[x])))
        .collect::<Vec<_>>();
    let labels = ids.keys().map(|l| l.to_string()).collect();
    Ok((SetFamily::new(k, ids.len(), sets)?, labels))
}
