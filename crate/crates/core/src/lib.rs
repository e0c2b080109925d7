//! Exact arithmetic and classification machinery for p-torsion Breuil-Kisin
//! modules with coefficients in a finite field.
//!
//! The crate provides:
//!
//! - finite fields F_{p^m} over a user-supplied modulus and precision-tracked
//!   Laurent series over them ([`field`], [`series`]);
//! - the Breuil-Kisin module type with its categorical constructions
//!   ([`module`]);
//! - valuation-pivot matrix factorization, weight multisets and the
//!   strong-divisibility decision procedure ([`factor`]);
//! - cohomology and extension-group dimensions with two independent
//!   computation routes that must agree ([`cohom`]);
//! - unramified base change, restriction of scalars, rank-one normal forms
//!   and the irreducibility test for restricted rank-ones ([`indres`]);
//! - the lattice enumeration engine that machine-checks the low-rank
//!   classification of irreducible strongly divisible modules ([`classify`]);
//! - the self-describing on-disk module format ([`document`]).
//!
//! All values are immutable after construction and all operations are pure,
//! so everything here is safe to evaluate in parallel.

pub mod classify;
pub mod cohom;
pub mod document;
pub mod error;
pub mod factor;
pub mod field;
pub mod fmat;
pub mod indres;
pub mod module;
pub mod series;
pub mod smat;
pub mod testkit;

pub use error::{Error, Result};
pub use field::{Fe, FieldSpec};
pub use series::{solve_unit_twist, LaurentSeries, Prec};
