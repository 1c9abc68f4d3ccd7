//! Set systems with restricted intersections.
//!
//! Extraction algorithms (colour certificates, sunflower-free subfamilies, a
//! delta-system method, atomic structures, multiplicative-weights fractional
//! colourings), the extremal constructions that show they are tight, and
//! brute-force oracles to check both.

pub mod certificate;
pub mod clique;
pub mod constructions;
pub mod error;
pub mod extraction;
pub mod fractional;
pub mod modular;
pub mod oracle;
mod ratio_serde;
pub mod setcore;
pub mod sunflower;

pub use error::{Error, Result};
pub use setcore::{ElementId, IntersectionGraph, IntersectionSpec, KSet, SetFamily, SizeSet};
