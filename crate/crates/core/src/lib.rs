//! Exact arithmetic for elliptic curves over small finite fields.
//!
//! The crate provides deterministic extension fields, curve and torsion
//! arithmetic, separable isogenies with two independent field-of-definition
//! oracles, Weil pairings, isogeny-class invariants of Frobenius, a rational
//! quaternion algebra with its torsion representation, a checker for the
//! subgroup-transport condition used in descent arguments, and an experiment
//! harness that sweeps all of it over small parameter ranges and emits
//! deterministic JSONL reports.

pub mod elliptic_curves;
pub mod error;
pub mod experiments;
pub mod isogenies;
pub mod finite_fields;
pub mod frobenius_algebra;
pub mod phi_checker;
pub mod poly;
pub mod quaternions;
pub mod weil_pairing;

pub use elliptic_curves::{Curve, CurvePoint, TorsionBasis, TorsionMatrix};
pub use error::{Error, Result};
pub use isogenies::Isogeny;
pub use finite_fields::{ExtField, FieldElement, PrimeField};
