//! Exact computation of the optimal torsion-growth exponent for products of
//! elliptic curves, together with an idealized mod-l^N model of the Galois
//! image in which every degree, multiplier image and field-degree identity
//! is exactly testable.
//!
//! The crate is organized as:
//!
//! * [`modular`] — residues mod l^N, 2x2 matrices, the quadratic Galois
//!   ring, exact rationals;
//! * [`galois`] — the three per-factor group models, their equal-multiplier
//!   gluing, pointwise fixers, and exact degree formulas;
//! * [`enumerate`] — budget-gated exhaustive enumeration, including the
//!   independent degree oracle;
//! * [`invariants`] — the subset invariant alpha, the fractional-program
//!   invariant m, the grid oracle, worst-case rays, and achieved ratios;
//! * [`verify`] — the checking harness with structured reports.

pub mod enumerate;
pub mod galois;
pub mod invariants;
pub mod lp;
pub mod modular;
pub mod rational;
pub mod verify;

pub use galois::{
    factor_group_order, fixer_multiplier_fibers, fixer_order, log_torsion_size, product_degree,
    stabilize_subgroup, DegreeReport, FactorKind, FactorModel, GaloisError, MultiplierFibers,
    ProductModel, SubgroupShape, DEFAULT_BUDGET,
};
pub use invariants::{
    achieved_ratio, alpha, m_invariant, m_invariant_grid, mt_dimension, worst_case_profile,
    AchievedRatio, ActiveCase, ClassKind, ClassSpec, ExponentProfile, InvariantError, ProfileEntry,
    RatioWitness, SubsetWitness, VarietySpec,
};
pub use modular::{AlgebraError, Mat2, Modulus, QuadElt, QuadRing};
pub use rational::BigRational;
pub use verify::{CheckReport, GridCell, VerifyError};
