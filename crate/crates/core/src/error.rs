//! Error type shared by the whole crate.

use thiserror::Error;

/// Everything that can go wrong while computing with Breuil-Kisin modules.
///
/// Precision failures are deliberately loud: an operation either certifies
/// its answer on an explicit coefficient window or refuses to answer.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("invalid field specification: {0}")]
    BadFieldSpec(String),

    #[error("no nonzero coefficient visible within precision (window [{val}, {prec}))")]
    ZeroLeadingCoefficient { val: i64, prec: i64 },

    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),

    #[error("no solution of x^{n} = {target} in the coefficient field (enlarge the field)")]
    RootNotInField { n: u64, target: String },

    #[error("basis-change matrix at embedding {embedding} is not a unit over F[[u]]")]
    NotAUnitMatrix { embedding: usize },

    #[error("module is not strongly divisible: {0}")]
    NotStronglyDivisible(String),

    #[error("H^1_SD methods disagree: formula gives {formula}, cokernel gives {cokernel}")]
    MethodDisagreement { formula: i64, cokernel: i64 },

    #[error("extension dimension formula mismatch: ext={ext}, hom={hom}, weight count={count}")]
    FormulaMismatch { ext: i64, hom: i64, count: i64 },

    #[error("incompatible residue degrees: {0}")]
    DegreeIncompatible(String),

    #[error("lattice ambient is not the restriction of a rank-one module")]
    AmbientNotRestrictedRankOne,

    #[error("classification counterexample found: {0}")]
    CounterexampleFound(String),

    #[error("case-matrix regression mismatch: {0}")]
    RegressionMismatch(String),

    #[error("search budget exceeded: {0}")]
    SearchBudgetExceeded(String),

    #[error("strong-divisibility criteria disagree: {0}")]
    CriterionDisagreement(String),

    #[error("malformed input: {0}")]
    BadInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
