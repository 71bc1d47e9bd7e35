//! Exhaustive-enumeration side of the model: explicit factor group elements,
//! fixer sweeps, and the independent degree oracle.
//!
//! Everything here is budget-gated and fails loudly instead of sampling.
//! The oracle never uses the closed-form orders or the uniform-fiber
//! structure of the formula path; it counts actual matrices.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::galois::{FactorKind, GaloisError, ProductModel, SubgroupShape};
use crate::modular::{Mat2, Modulus, QuadRing};

fn guard_budget(required: BigUint, budget: u64) -> Result<(), GaloisError> {
    if required > BigUint::from(budget) {
        return Err(GaloisError::BudgetExceeded { required, budget });
    }
    Ok(())
}

/// All elements of one factor group model, as matrices. Refuses upfront when
/// the group order exceeds `budget`; the push path re-checks the count.
pub fn enumerate_factor_elements(
    kind: FactorKind,
    m: &Modulus,
    budget: u64,
) -> Result<Vec<Mat2>, GaloisError> {
    guard_budget(crate::galois::factor_group_order(kind, m), budget)?;
    let mut out = Vec::new();
    let mut push = |mat: Mat2| -> Result<(), GaloisError> {
        if out.len() as u64 >= budget {
            return Err(GaloisError::BudgetExceeded {
                required: BigUint::from(budget) + BigUint::one(),
                budget,
            });
        }
        out.push(mat);
        Ok(())
    };
    let q = m.q();
    match kind {
        FactorKind::NonCm => {
            for a in 0..q {
                for b in 0..q {
                    for c in 0..q {
                        for d in 0..q {
                            let mat = Mat2 { a, b, c, d };
                            if mat.det_invertible(m).1 {
                                push(mat)?;
                            }
                        }
                    }
                }
            }
        }
        FactorKind::CmSplit => {
            for a in m.units() {
                for d in m.units() {
                    push(Mat2 { a, b: 0, c: 0, d })?;
                }
            }
        }
        FactorKind::CmNonsplit => {
            let ring = QuadRing::build(m);
            for x in 0..q {
                for y in 0..q {
                    let w = ring.elt(x, y);
                    if ring.is_unit(&w) {
                        push(ring.unit_to_mat(&w).expect("unit"))?;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Elements of the pointwise fixer of the standard shape subgroup, from the
/// congruence parametrization (never by filtering the full group, so this
/// stays feasible where the group itself is not).
pub fn enumerate_fixer_elements(
    kind: FactorKind,
    m: &Modulus,
    shape: SubgroupShape,
    budget: u64,
) -> Result<Vec<Mat2>, GaloisError> {
    shape.fits_level(m)?;
    guard_budget(crate::galois::fixer_order(kind, m, shape)?, budget)?;
    let q = m.q();
    let (lo, up) = (shape.lower(), shape.upper());
    let step = |k: u32| m.ell_pow(k); // residues come in strides of l^k
    let mut out = Vec::new();
    let mut push = |mat: Mat2| -> Result<(), GaloisError> {
        if out.len() as u64 >= budget {
            return Err(GaloisError::BudgetExceeded {
                required: BigUint::from(budget) + BigUint::one(),
                budget,
            });
        }
        out.push(mat);
        Ok(())
    };
    match kind {
        FactorKind::NonCm => {
            let (sl, su) = (step(lo), step(up));
            for a in (1..=q).step_by(sl as usize).map(|x| x % q) {
                for c in (0..q).step_by(sl as usize) {
                    for b in (0..q).step_by(su as usize) {
                        for d in (1..=q).step_by(su as usize).map(|x| x % q) {
                            let mat = Mat2 { a, b, c, d };
                            if mat.det_invertible(m).1 {
                                push(mat)?;
                            }
                        }
                    }
                }
            }
        }
        FactorKind::CmSplit => {
            let (sl, su) = (step(lo), step(up));
            for a in (1..=q).step_by(sl as usize).map(|x| x % q) {
                if !m.is_unit(a) {
                    continue;
                }
                for d in (1..=q).step_by(su as usize).map(|x| x % q) {
                    if !m.is_unit(d) {
                        continue;
                    }
                    push(Mat2 { a, b: 0, c: 0, d })?;
                }
            }
        }
        FactorKind::CmNonsplit => {
            let ring = QuadRing::build(m);
            let s = step(up);
            for x in (1..=q).step_by(s as usize).map(|v| v % q) {
                for y in (0..q).step_by(s as usize) {
                    let w = ring.elt(x, y);
                    if ring.is_unit(&w) {
                        push(ring.unit_to_mat(&w).expect("unit"))?;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Multiplier histogram of a set of matrices.
pub fn multiplier_histogram(elems: &[Mat2], m: &Modulus) -> BTreeMap<u64, u64> {
    let mut hist = BTreeMap::new();
    for e in elems {
        *hist.entry(e.det(m)).or_insert(0u64) += 1;
    }
    hist
}

/// Per-factor (total, fixing) counts keyed by multiplier value.
struct FactorBuckets {
    counts: BTreeMap<u64, (u64, u64)>,
}

fn bucket_factor(elems: &[Mat2], generators: &[(u64, u64)], m: &Modulus) -> FactorBuckets {
    let mut counts: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    for e in elems {
        let entry = counts.entry(e.det(m)).or_insert((0, 0));
        entry.0 += 1;
        if generators.iter().all(|&p| e.fixes(p, m)) {
            entry.1 += 1;
        }
    }
    FactorBuckets { counts }
}

/// Independent degree oracle: enumerates the glued group (tuples of factor
/// elements with one common multiplier value, visited multiplier class by
/// multiplier class) and counts the tuples fixing every generator of every
/// factor. Generators may be arbitrary points of (Z/l^N)^2, aligned or not.
pub fn enumerate_degree_oracle(
    model: &ProductModel,
    generators: &[Vec<(u64, u64)>],
    budget: u64,
) -> Result<BigUint, GaloisError> {
    if model.factors.is_empty() {
        return Err(GaloisError::EmptyProduct);
    }
    if generators.len() != model.factors.len() {
        return Err(GaloisError::ShapeCountMismatch {
            expected: model.factors.len(),
            got: generators.len(),
        });
    }
    let m = &model.modulus;
    let mut buckets = Vec::with_capacity(model.factors.len());
    for (factor, gens) in model.factors.iter().zip(generators) {
        let elems = enumerate_factor_elements(factor.kind, m, budget)?;
        buckets.push(bucket_factor(&elems, gens, m));
    }
    // glued order and fixing count, summed over multiplier classes present
    // in every factor
    let mut total = BigUint::zero();
    let mut fixing = BigUint::zero();
    for (&lambda, &(t0, f0)) in &buckets[0].counts {
        let mut class_total = BigUint::from(t0);
        let mut class_fixing = BigUint::from(f0);
        let mut present = true;
        for b in &buckets[1..] {
            match b.counts.get(&lambda) {
                Some(&(t, f)) => {
                    class_total *= BigUint::from(t);
                    class_fixing *= BigUint::from(f);
                }
                None => {
                    present = false;
                    break;
                }
            }
        }
        if present {
            total += class_total;
            fixing += class_fixing;
        }
    }
    if total > BigUint::from(budget) {
        return Err(GaloisError::BudgetExceeded {
            required: total,
            budget,
        });
    }
    debug_assert!(!fixing.is_zero(), "identity tuple always fixes");
    debug_assert!((&total % &fixing).is_zero());
    Ok(&total / &fixing)
}


#[cfg(test)]
mod fiber_tests {
    use super::*;
    use crate::galois::{fixer_multiplier_fibers, fixer_order};
    use num_bigint::BigUint;
    use std::collections::BTreeSet;

    fn modulus(ell: u64, level: u32) -> Modulus {
        Modulus::new(ell, level).unwrap()
    }

    #[test]
    fn gl2_fixer_fibers_shape_one_two_across_small_moduli() {
        // every prime power <= 27 admitting an upper exponent of 2
        for (ell, level) in [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (5, 2)] {
            let m = modulus(ell, level);
            let shape = SubgroupShape::new(1, 2).unwrap();
            let fib = fixer_multiplier_fibers(FactorKind::NonCm, &m, shape).unwrap();
            assert_eq!(fib.coset_exponent, 1, "{ell}^{level}");
            assert!(fib.uniform);
            let elems = enumerate_fixer_elements(FactorKind::NonCm, &m, shape, 10_000_000).unwrap();
            let hist = multiplier_histogram(&elems, &m);
            let expected_classes: BTreeSet<u64> = m.units().filter(|u| u % ell == 1).collect();
            assert_eq!(
                hist.keys().copied().collect::<BTreeSet<_>>(),
                expected_classes
            );
            for &count in hist.values() {
                assert_eq!(BigUint::from(count), fib.per_class_count);
            }
        }
    }

    #[test]
    fn nonsplit_fibers_match_enumeration() {
        let m = modulus(3, 2);
        let shape = SubgroupShape::new(1, 2).unwrap();
        let fib = fixer_multiplier_fibers(FactorKind::CmNonsplit, &m, shape).unwrap();
        assert_eq!(fib.coset_exponent, 2);
        let elems = enumerate_fixer_elements(FactorKind::CmNonsplit, &m, shape, 1_000_000).unwrap();
        let hist = multiplier_histogram(&elems, &m);
        assert_eq!(hist.len(), 1);
        assert_eq!(hist[&1], 1);
    }

    /// The module generated by the standard shape subgroup inside the
    /// quadratic ring, computed by brute force.
    fn module_closure(m: &Modulus, shape: SubgroupShape) -> BTreeSet<(u64, u64)> {
        let ring = crate::modular::QuadRing::build(m);
        let q = m.q();
        let gens = shape.standard_generators(m);
        let mut out = BTreeSet::new();
        for x1 in 0..q {
            for y1 in 0..q {
                for x2 in 0..q {
                    for y2 in 0..q {
                        let a = ring.mul(&ring.elt(x1, y1), &ring.elt(gens[0].0, gens[0].1));
                        let b = ring.mul(&ring.elt(x2, y2), &ring.elt(gens[1].0, gens[1].1));
                        out.insert(((a.x + b.x) % q, (a.y + b.y) % q));
                    }
                }
            }
        }
        out
    }

    fn subgroup_points(m: &Modulus, shape: SubgroupShape) -> BTreeSet<(u64, u64)> {
        let q = m.q();
        let gens = shape.standard_generators(m);
        let mut out = BTreeSet::new();
        for i in 0..q {
            for j in 0..q {
                out.insert((
                    (i * gens[0].0 + j * gens[1].0) % q,
                    (i * gens[0].1 + j * gens[1].1) % q,
                ));
            }
        }
        out
    }

    #[test]
    fn nonsplit_stabilization_is_the_module_closure() {
        let m = modulus(3, 2);
        for (raw, stable) in [((0, 2), (2, 2)), ((0, 1), (1, 1)), ((1, 2), (2, 2))] {
            let raw = SubgroupShape::new(raw.0, raw.1).unwrap();
            let stable = SubgroupShape::new(stable.0, stable.1).unwrap();
            assert_eq!(
                crate::galois::stabilize_subgroup(FactorKind::CmNonsplit, raw).unwrap(),
                stable
            );
            assert_eq!(module_closure(&m, raw), subgroup_points(&m, stable));
        }
    }

    #[test]
    fn split_torus_preserves_every_standard_shape() {
        let m = modulus(3, 2);
        for shape in SubgroupShape::grid(2) {
            let points = subgroup_points(&m, shape);
            for g in enumerate_factor_elements(FactorKind::CmSplit, &m, 1_000_000).unwrap() {
                assert!(points.iter().all(|&p| points.contains(&g.apply(p, &m))));
            }
        }
        // sanity: the fixer orders agree with the stabilized shape for both
        // CM kinds
        for kind in [FactorKind::CmSplit, FactorKind::CmNonsplit] {
            for shape in SubgroupShape::grid(2) {
                let stable = crate::galois::stabilize_subgroup(kind, shape).unwrap();
                assert_eq!(
                    fixer_order(kind, &m, shape).unwrap(),
                    fixer_order(kind, &m, stable).unwrap()
                );
            }
        }
    }
}
