//! Idealized mod-l^N Galois image of a product of elliptic curves.
//!
//! Each factor is one of three group models inside GL_2(Z/l^N): the full
//! group (no CM), the diagonal torus (CM split at l), or the unit group of
//! the quadratic ring acting by its regular representation (CM nonsplit).
//! The product is glued along the common multiplier (the determinant, which
//! restricts to the diagonal product resp. the norm on the CM models), and
//! the torsion-field degree of a subgroup is the index of its pointwise
//! fixer in the glued group.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::modular::Modulus;
use crate::rational::BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GaloisError {
    #[error("shape ({0},{1}) exceeds level {2}")]
    ShapeExceedsLevel(u32, u32, u32),
    #[error("lower exponent {0} exceeds upper exponent {1}")]
    ShapeOrder(u32, u32),
    #[error("product model has no factors")]
    EmptyProduct,
    #[error("expected {expected} shapes, got {got}")]
    ShapeCountMismatch { expected: usize, got: usize },
    #[error("expected {expected} multiplicities, got {got}")]
    MisalignedMultiplicities { expected: usize, got: usize },
    #[error("multiplicity must be at least 1")]
    ZeroMultiplicity,
    #[error("enumeration of {required} elements exceeds budget {budget}")]
    BudgetExceeded { required: BigUint, budget: u64 },
    #[error("stabilization applies to the CM models only")]
    StabilizeNotApplicable,
    #[error("unknown factor kind `{0}` (expected noncm, cmsplit or cmnonsplit)")]
    UnknownKind(String),
}

/// Default cap on exhaustive enumeration: beyond this, operations fail
/// explicitly rather than sample.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Which of the three per-factor group models applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FactorKind {
    /// Full GL_2(Z/l^N).
    NonCm,
    /// Diagonal torus (unit pairs).
    CmSplit,
    /// Unit group of the quadratic ring, regular representation.
    CmNonsplit,
}

impl FactorKind {
    pub const ALL: [FactorKind; 3] = [
        FactorKind::NonCm,
        FactorKind::CmSplit,
        FactorKind::CmNonsplit,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FactorKind::NonCm => "noncm",
            FactorKind::CmSplit => "cmsplit",
            FactorKind::CmNonsplit => "cmnonsplit",
        }
    }
}

impl fmt::Display for FactorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FactorKind {
    type Err = GaloisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "noncm" | "non-cm" => Ok(FactorKind::NonCm),
            "cmsplit" | "cm-split" => Ok(FactorKind::CmSplit),
            "cmnonsplit" | "cm-nonsplit" => Ok(FactorKind::CmNonsplit),
            other => Err(GaloisError::UnknownKind(other.to_string())),
        }
    }
}

/// One isogeny-class factor of the product, with its multiplicity.
/// Multiplicity never changes the group model, only torsion bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FactorModel {
    pub kind: FactorKind,
    pub multiplicity: u32,
    pub label: String,
}

impl FactorModel {
    pub fn new(
        kind: FactorKind,
        multiplicity: u32,
        label: impl Into<String>,
    ) -> Result<Self, GaloisError> {
        if multiplicity == 0 {
            return Err(GaloisError::ZeroMultiplicity);
        }
        Ok(FactorModel {
            kind,
            multiplicity,
            label: label.into(),
        })
    }
}

/// Exponent pair (m, n) with m <= n, encoding the subgroup
/// Z/l^m x Z/l^n in the model's distinguished basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SubgroupShape {
    lower: u32,
    upper: u32,
}

impl SubgroupShape {
    pub fn new(lower: u32, upper: u32) -> Result<Self, GaloisError> {
        if lower > upper {
            return Err(GaloisError::ShapeOrder(lower, upper));
        }
        Ok(SubgroupShape { lower, upper })
    }

    pub fn lower(&self) -> u32 {
        self.lower
    }

    pub fn upper(&self) -> u32 {
        self.upper
    }

    pub fn fits_level(&self, m: &Modulus) -> Result<(), GaloisError> {
        if self.upper > m.level() {
            return Err(GaloisError::ShapeExceedsLevel(
                self.lower,
                self.upper,
                m.level(),
            ));
        }
        Ok(())
    }

    /// Standard generators of the shape subgroup inside (Z/l^N)^2:
    /// l^(N-m) e1 and l^(N-n) e2. Exponent 0 yields the zero point.
    pub fn standard_generators(&self, m: &Modulus) -> Vec<(u64, u64)> {
        let gen = |k: u32| {
            if k == 0 {
                0
            } else {
                m.ell_pow(m.level() - k)
            }
        };
        vec![(gen(self.lower), 0), (0, gen(self.upper))]
    }

    /// All shapes 0 <= m <= n <= N.
    pub fn grid(level: u32) -> Vec<SubgroupShape> {
        let mut out = Vec::new();
        for lower in 0..=level {
            for upper in lower..=level {
                out.push(SubgroupShape { lower, upper });
            }
        }
        out
    }
}

impl fmt::Display for SubgroupShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.lower, self.upper)
    }
}

/// The glued image: tuples of factor elements sharing one multiplier value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProductModel {
    pub factors: Vec<FactorModel>,
    pub modulus: Modulus,
}

impl ProductModel {
    pub fn new(factors: Vec<FactorModel>, modulus: Modulus) -> Result<Self, GaloisError> {
        if factors.is_empty() {
            return Err(GaloisError::EmptyProduct);
        }
        Ok(ProductModel { factors, modulus })
    }

    /// Order of the glued group: prod |G_i| / phi^(r-1), since every factor
    /// multiplier is surjective onto the units with uniform fibers.
    pub fn glued_order(&self) -> BigUint {
        let phi = self.modulus.units_order();
        let mut total = BigUint::one();
        for f in &self.factors {
            total *= factor_group_order(f.kind, &self.modulus);
        }
        for _ in 1..self.factors.len() {
            total = exact_div(&total, &phi);
        }
        total
    }
}

/// Image of the multiplier on a fixer subgroup: exactly the coset
/// 1 + l^k (Z/l^N), hit uniformly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultiplierFibers {
    /// k with image = 1 + l^k (Z/l^N).
    pub coset_exponent: u32,
    /// Number of multiplier classes hit.
    #[serde(serialize_with = "crate::rational::serde_exact::biguint")]
    pub class_count: BigUint,
    /// Fixer elements per hit class. Restricting a homomorphism to a
    /// subgroup always gives uniform fibers over its image; the enumeration
    /// harness re-verifies this rather than assuming it.
    #[serde(serialize_with = "crate::rational::serde_exact::biguint")]
    pub per_class_count: BigUint,
    pub uniform: bool,
}

impl MultiplierFibers {
    /// Count of fixer elements mapping to a given multiplier value.
    pub fn count_at(&self, lambda: u64, m: &Modulus) -> BigUint {
        let k = self.coset_exponent;
        let member = if k == 0 {
            m.is_unit(lambda)
        } else {
            m.is_unit(lambda) && (lambda % m.ell_pow(k)) == 1 % m.ell_pow(k)
        };
        if member {
            self.per_class_count.clone()
        } else {
            BigUint::zero()
        }
    }

    pub fn total(&self) -> BigUint {
        &self.class_count * &self.per_class_count
    }
}

/// Exact degree data for a fixer index in the glued model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeReport {
    /// [glued group : glued fixer].
    #[serde(serialize_with = "crate::rational::serde_exact::biguint")]
    pub degree: BigUint,
    /// [G_i : Fix_i] per factor.
    #[serde(serialize_with = "crate::rational::serde_exact::biguint_vec")]
    pub per_factor_degrees: Vec<BigUint>,
    /// Per-factor multiplier coset exponents.
    pub per_factor_coset_exponents: Vec<u32>,
    /// max of the per-factor coset exponents: the exponent of the
    /// cyclotomic intersection for the glued fixer.
    pub cyclotomic_exponent: u32,
    /// l-adic valuation of `degree`.
    pub ell_exponent: u64,
    /// degree / l^ell_exponent, coprime to l.
    #[serde(serialize_with = "crate::rational::serde_exact::biguint")]
    pub unit_part: BigUint,
}

impl DegreeReport {
    /// Exact l-part of log_l(degree).
    pub fn log_ell_degree(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.ell_exponent))
    }

    /// log_l(degree) including the unit-part correction (display/tolerance
    /// use only).
    pub fn log_ell_degree_f64(&self, ell: u64) -> f64 {
        self.ell_exponent as f64 + crate::rational::ln_biguint(&self.unit_part) / (ell as f64).ln()
    }
}

/// Order of one factor group model.
pub fn factor_group_order(kind: FactorKind, m: &Modulus) -> BigUint {
    let ell = BigUint::from(m.ell());
    let n = m.level();
    match kind {
        FactorKind::NonCm => {
            ell.pow(4 * n - 4) * (ell.pow(2) - BigUint::one()) * (ell.pow(2) - &ell)
        }
        FactorKind::CmSplit => m.units_order() * m.units_order(),
        FactorKind::CmNonsplit => ell.pow(2 * n - 2) * (ell.pow(2) - BigUint::one()),
    }
}

/// Order of the pointwise stabilizer of the standard shape-(m,n) subgroup
/// inside the factor group, by congruence counting.
pub fn fixer_order(
    kind: FactorKind,
    m: &Modulus,
    shape: SubgroupShape,
) -> Result<BigUint, GaloisError> {
    shape.fits_level(m)?;
    let ell = BigUint::from(m.ell());
    let n = m.level();
    let (lo, up) = (shape.lower(), shape.upper());
    Ok(match kind {
        FactorKind::NonCm => {
            if lo >= 1 {
                // first column congruent to e1 mod l^m, second to e2 mod l^n;
                // determinant is then automatically 1 mod l.
                ell.pow(2 * (n - lo) + 2 * (n - up))
            } else if up >= 1 {
                // free first column up to invertibility, constrained second.
                m.units_order() * ell.pow(n) * ell.pow(2 * (n - up))
            } else {
                factor_group_order(kind, m)
            }
        }
        FactorKind::CmSplit => m.coset_subgroup_order(lo) * m.coset_subgroup_order(up),
        FactorKind::CmNonsplit => {
            // the fixer is 1 + A where A = l^n W is the annihilator ideal of
            // the shape subgroup as a W-module.
            if up == 0 {
                factor_group_order(kind, m)
            } else {
                ell.pow(2 * (n - up))
            }
        }
    })
}

/// Coset exponent of the multiplier image of the fixer.
fn fixer_coset_exponent(kind: FactorKind, shape: SubgroupShape) -> u32 {
    match kind {
        // det(Fix) = 1 + l^m exactly: contained by the congruences, onto via
        // diag(1 + l^m u, 1); same computation for the diagonal torus.
        FactorKind::NonCm | FactorKind::CmSplit => shape.lower(),
        // norm(1 + l^n W) = 1 + l^n Z/l^N: the unramified norm is onto at
        // every filtration step.
        FactorKind::CmNonsplit => shape.upper(),
    }
}

/// Multiplier image of the pointwise fixer, with per-class counts.
pub fn fixer_multiplier_fibers(
    kind: FactorKind,
    m: &Modulus,
    shape: SubgroupShape,
) -> Result<MultiplierFibers, GaloisError> {
    let order = fixer_order(kind, m, shape)?;
    let k = fixer_coset_exponent(kind, shape);
    let class_count = m.coset_subgroup_order(k);
    let per_class_count = exact_div(&order, &class_count);
    Ok(MultiplierFibers {
        coset_exponent: k,
        class_count,
        per_class_count,
        uniform: true,
    })
}

/// Smallest shape stable under the factor group and containing the input.
/// The diagonal torus preserves both coordinate lines, so split shapes are
/// already stable; the nonsplit Cartan generates the full W-module l^(N-n)W,
/// i.e. shape (n, n). Not applicable to the full-GL_2 model.
pub fn stabilize_subgroup(
    kind: FactorKind,
    shape: SubgroupShape,
) -> Result<SubgroupShape, GaloisError> {
    match kind {
        FactorKind::NonCm => Err(GaloisError::StabilizeNotApplicable),
        FactorKind::CmSplit => Ok(shape),
        FactorKind::CmNonsplit => SubgroupShape::new(shape.upper(), shape.upper()),
    }
}

/// Exact degree [glued : fixer] for one shape per factor class, by
/// multiplier-class convolution. Multiplicities of the factors are ignored:
/// a power of a factor is fixed by exactly the elements fixing the factor.
pub fn product_degree(
    model: &ProductModel,
    shapes: &[SubgroupShape],
) -> Result<DegreeReport, GaloisError> {
    if model.factors.is_empty() {
        return Err(GaloisError::EmptyProduct);
    }
    if shapes.len() != model.factors.len() {
        return Err(GaloisError::ShapeCountMismatch {
            expected: model.factors.len(),
            got: shapes.len(),
        });
    }
    let m = &model.modulus;
    let mut per_factor_degrees = Vec::with_capacity(shapes.len());
    let mut exponents = Vec::with_capacity(shapes.len());
    let mut fixer_glued = BigUint::one();
    for (factor, shape) in model.factors.iter().zip(shapes) {
        let group = factor_group_order(factor.kind, m);
        let fibers = fixer_multiplier_fibers(factor.kind, m, *shape)?;
        per_factor_degrees.push(exact_div(&group, &fibers.total()));
        exponents.push(fibers.coset_exponent);
        fixer_glued *= fibers.per_class_count;
    }
    let cyclotomic_exponent = exponents.iter().copied().max().unwrap_or(0);
    fixer_glued *= m.coset_subgroup_order(cyclotomic_exponent);
    let glued = model.glued_order();
    let degree = exact_div(&glued, &fixer_glued);
    debug_assert!((&glued % &degree).is_zero());
    let (ell_exponent, unit_part) = split_ell_part(&degree, m.ell());
    Ok(DegreeReport {
        degree,
        per_factor_degrees,
        per_factor_coset_exponents: exponents,
        cyclotomic_exponent,
        ell_exponent,
        unit_part,
    })
}

/// log_l |H| = sum over classes of (m_i + n_i) * multiplicity_i, exact.
pub fn log_torsion_size(
    shapes: &[SubgroupShape],
    multiplicities: &[u32],
) -> Result<BigRational, GaloisError> {
    if shapes.len() != multiplicities.len() {
        return Err(GaloisError::MisalignedMultiplicities {
            expected: shapes.len(),
            got: multiplicities.len(),
        });
    }
    if multiplicities.contains(&0) {
        return Err(GaloisError::ZeroMultiplicity);
    }
    let mut total: u64 = 0;
    for (shape, mult) in shapes.iter().zip(multiplicities) {
        total += (shape.lower() as u64 + shape.upper() as u64) * *mult as u64;
    }
    Ok(BigRational::from_integer(BigInt::from(total)))
}

/// Quotient known to be exact.
pub(crate) fn exact_div(num: &BigUint, den: &BigUint) -> BigUint {
    debug_assert!((num % den).is_zero(), "inexact division {num}/{den}");
    num / den
}

pub(crate) fn split_ell_part(n: &BigUint, ell: u64) -> (u64, BigUint) {
    let ell = BigUint::from(ell);
    let mut rest = n.clone();
    let mut exp = 0u64;
    while !rest.is_zero() && (&rest % &ell).is_zero() {
        rest /= &ell;
        exp += 1;
    }
    (exp, rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn modulus(ell: u64, level: u32) -> Modulus {
        Modulus::new(ell, level).unwrap()
    }

    fn shape(lo: u32, up: u32) -> SubgroupShape {
        SubgroupShape::new(lo, up).unwrap()
    }

    #[test]
    fn factor_orders_at_level_one() {
        assert_eq!(
            factor_group_order(FactorKind::NonCm, &modulus(2, 1)),
            BigUint::from(6u32)
        );
        assert_eq!(
            factor_group_order(FactorKind::CmSplit, &modulus(3, 1)),
            BigUint::from(4u32)
        );
        assert_eq!(
            factor_group_order(FactorKind::CmNonsplit, &modulus(2, 1)),
            BigUint::from(3u32)
        );
    }

    #[test]
    fn trivial_shape_is_fixed_by_everything() {
        for kind in FactorKind::ALL {
            let m = modulus(3, 2);
            assert_eq!(
                fixer_order(kind, &m, shape(0, 0)).unwrap(),
                factor_group_order(kind, &m)
            );
        }
    }

    #[test]
    fn fixer_orders_match_worked_cases() {
        // only the identity fixes all of E[2]
        assert_eq!(
            fixer_order(FactorKind::NonCm, &modulus(2, 1), shape(1, 1)).unwrap(),
            BigUint::one()
        );
        // split torus: a = 1 mod 3, d = 1 mod 9
        assert_eq!(
            fixer_order(FactorKind::CmSplit, &modulus(3, 2), shape(1, 2)).unwrap(),
            BigUint::from(3u32)
        );
        // nonsplit: 1 + 9W is trivial at level 2
        assert_eq!(
            fixer_order(FactorKind::CmNonsplit, &modulus(3, 2), shape(1, 2)).unwrap(),
            BigUint::one()
        );
    }

    #[test]
    fn shape_beyond_level_rejected() {
        let m = modulus(3, 2);
        assert!(matches!(
            fixer_order(FactorKind::NonCm, &m, shape(1, 3)),
            Err(GaloisError::ShapeExceedsLevel(1, 3, 2))
        ));
    }

    #[test]
    fn multiplier_fibers_worked_cases() {
        let fib = fixer_multiplier_fibers(FactorKind::NonCm, &modulus(3, 2), shape(1, 2)).unwrap();
        assert_eq!(fib.coset_exponent, 1);
        assert!(fib.uniform);
        assert_eq!(
            fib.total(),
            fixer_order(FactorKind::NonCm, &modulus(3, 2), shape(1, 2)).unwrap()
        );

        let full =
            fixer_multiplier_fibers(FactorKind::CmSplit, &modulus(3, 2), shape(0, 0)).unwrap();
        assert_eq!(full.coset_exponent, 0);

        let nonsplit =
            fixer_multiplier_fibers(FactorKind::CmNonsplit, &modulus(3, 2), shape(1, 2)).unwrap();
        assert_eq!(nonsplit.coset_exponent, 2);
    }

    #[test]
    fn count_at_vanishes_outside_coset() {
        let m = modulus(3, 2);
        let fib = fixer_multiplier_fibers(FactorKind::NonCm, &m, shape(1, 1)).unwrap();
        assert!(fib.count_at(4, &m) > BigUint::zero()); // 4 = 1 mod 3
        assert_eq!(fib.count_at(2, &m), BigUint::zero());
        assert_eq!(fib.count_at(3, &m), BigUint::zero()); // not a unit
    }

    #[test]
    fn stabilization() {
        assert_eq!(
            stabilize_subgroup(FactorKind::CmSplit, shape(1, 3)).unwrap(),
            shape(1, 3)
        );
        assert_eq!(
            stabilize_subgroup(FactorKind::CmNonsplit, shape(0, 2)).unwrap(),
            shape(2, 2)
        );
        assert_eq!(
            stabilize_subgroup(FactorKind::CmNonsplit, shape(2, 2)).unwrap(),
            shape(2, 2)
        );
        assert!(matches!(
            stabilize_subgroup(FactorKind::NonCm, shape(1, 1)),
            Err(GaloisError::StabilizeNotApplicable)
        ));
    }

    #[test]
    fn product_degree_worked_cases() {
        let m = modulus(2, 1);
        let single = ProductModel::new(
            vec![FactorModel::new(FactorKind::NonCm, 1, "E1").unwrap()],
            m,
        )
        .unwrap();
        assert_eq!(
            product_degree(&single, &[shape(1, 1)]).unwrap().degree,
            BigUint::from(6u32)
        );

        // over F_2 the determinant is always 1, so the glued group is the
        // full direct product
        let pair = ProductModel::new(
            vec![
                FactorModel::new(FactorKind::NonCm, 1, "E1").unwrap(),
                FactorModel::new(FactorKind::NonCm, 1, "E2").unwrap(),
            ],
            m,
        )
        .unwrap();
        let report = product_degree(&pair, &[shape(1, 1), shape(1, 1)]).unwrap();
        assert_eq!(report.degree, BigUint::from(36u32));
        assert_eq!(report.cyclotomic_exponent, 1);

        let zero = product_degree(&pair, &[shape(0, 0), shape(0, 0)]).unwrap();
        assert_eq!(zero.degree, BigUint::one());
    }

    #[test]
    fn product_degree_error_paths() {
        let m = modulus(3, 1);
        let single = ProductModel::new(
            vec![FactorModel::new(FactorKind::NonCm, 1, "E1").unwrap()],
            m,
        )
        .unwrap();
        assert!(matches!(
            product_degree(&single, &[]),
            Err(GaloisError::ShapeCountMismatch { .. })
        ));
        assert!(ProductModel::new(vec![], m).is_err());
    }

    #[test]
    fn degree_divides_glued_order() {
        let m = modulus(3, 2);
        let model = ProductModel::new(
            vec![
                FactorModel::new(FactorKind::NonCm, 2, "E1").unwrap(),
                FactorModel::new(FactorKind::CmSplit, 1, "E2").unwrap(),
            ],
            m,
        )
        .unwrap();
        for s1 in SubgroupShape::grid(2) {
            for s2 in SubgroupShape::grid(2) {
                let r = product_degree(&model, &[s1, s2]).unwrap();
                assert!((model.glued_order() % &r.degree).is_zero());
                assert!(r.degree >= BigUint::one());
                let ell_pow = BigUint::from(3u32).pow(r.ell_exponent as u32);
                assert_eq!(ell_pow * &r.unit_part, r.degree);
            }
        }
    }

    #[test]
    fn log_torsion_examples() {
        let one = log_torsion_size(&[shape(1, 2)], &[1]).unwrap();
        assert_eq!(one, BigRational::from_integer(BigInt::from(3)));
        let two = log_torsion_size(&[shape(1, 1), shape(0, 3)], &[2, 1]).unwrap();
        assert_eq!(two, BigRational::from_integer(BigInt::from(7)));
        let zero = log_torsion_size(&[shape(0, 0), shape(0, 0)], &[3, 5]).unwrap();
        assert_eq!(zero, BigRational::from_integer(BigInt::from(0)));
        assert!(log_torsion_size(&[shape(1, 1)], &[1, 2]).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("noncm".parse::<FactorKind>().unwrap(), FactorKind::NonCm);
        assert_eq!(
            "CMSplit".parse::<FactorKind>().unwrap(),
            FactorKind::CmSplit
        );
        assert!("weird".parse::<FactorKind>().is_err());
    }
}
