//! Wider sweeps than the acceptance grids: same identities, bigger
//! parameters. Everything here stays inside the default enumeration budget.

use num_bigint::BigUint;
use torsion_core::enumerate::enumerate_degree_oracle;
use torsion_core::galois::{
    product_degree, FactorKind, FactorModel, ProductModel, SubgroupShape, DEFAULT_BUDGET,
};
use torsion_core::invariants::uniform_spec;
use torsion_core::modular::Modulus;
use torsion_core::verify::{check_alpha_convergence, check_gammamn, check_property_mu};

#[test]
fn set_identity_beyond_level_three() {
    for (ell, level) in [(2u64, 4u32), (2, 5)] {
        let m = Modulus::new(ell, level).unwrap();
        let rep = check_gammamn(&m, DEFAULT_BUDGET).unwrap();
        assert!(rep.passed, "{ell}^{level}: {:?}", rep.failures().next());
    }
}

#[test]
fn multiplier_exponents_at_larger_primes_and_levels() {
    for (ell, level) in [(7u64, 2u32), (11, 2), (2, 5), (3, 4)] {
        for kind in FactorKind::ALL {
            let m = Modulus::new(ell, level).unwrap();
            let rep = check_property_mu(kind, &m, DEFAULT_BUDGET).unwrap();
            assert!(
                rep.passed,
                "{kind} {ell}^{level}: {:?}",
                rep.failures().next()
            );
            assert_eq!(rep.measured_constants["max_index_defect"], "1");
        }
    }
}

#[test]
fn oracle_agreement_at_level_three() {
    let m = Modulus::new(2, 3).unwrap();
    for a in FactorKind::ALL {
        for b in FactorKind::ALL {
            let model = ProductModel::new(
                vec![
                    FactorModel::new(a, 1, "f1").unwrap(),
                    FactorModel::new(b, 1, "f2").unwrap(),
                ],
                m,
            )
            .unwrap();
            for s1 in SubgroupShape::grid(3) {
                for s2 in SubgroupShape::grid(3) {
                    let shapes = [s1, s2];
                    let formula = product_degree(&model, &shapes).unwrap().degree;
                    let gens: Vec<Vec<(u64, u64)>> =
                        shapes.iter().map(|s| s.standard_generators(&m)).collect();
                    let oracle = enumerate_degree_oracle(&model, &gens, DEFAULT_BUDGET).unwrap();
                    assert_eq!(formula, oracle, "{a},{b} {s1};{s2}");
                }
            }
        }
    }
}

#[test]
fn convergence_at_other_primes_and_mixed_specs() {
    for ell in [5u64, 7] {
        for spec in [uniform_spec(1, 0), uniform_spec(0, 1), uniform_spec(0, 2)] {
            let rep = check_alpha_convergence(&spec, ell, 12, 0.05).unwrap();
            assert!(rep.passed, "ell={ell}: {:?}", rep.failures().next());
        }
    }
    // a mixed product converges to the CM-side optimum
    let rep = check_alpha_convergence(&uniform_spec(1, 1), 3, 12, 0.05).unwrap();
    assert!(rep.passed, "mixed: {:?}", rep.failures().next());
    assert_eq!(rep.measured_constants["alpha"], "1");
}

#[test]
fn formula_degrees_scale_to_level_twenty_four() {
    // the formula path far beyond any enumeration: degree of the full-level
    // shape for a three-factor model, checked against the closed-form glued
    // order divided by the trivial fixer contribution
    let level = 24u32;
    let m = Modulus::new(3, level).unwrap();
    let model = ProductModel::new(
        vec![
            FactorModel::new(FactorKind::NonCm, 1, "f1").unwrap(),
            FactorModel::new(FactorKind::CmSplit, 1, "f2").unwrap(),
            FactorModel::new(FactorKind::CmNonsplit, 1, "f3").unwrap(),
        ],
        m,
    )
    .unwrap();
    let full = SubgroupShape::new(level, level).unwrap();
    let report = product_degree(&model, &[full, full, full]).unwrap();
    // all three fixers are trivial and the common multiplier class is
    // pinned, so the degree is the whole glued group
    assert_eq!(report.degree, model.glued_order());
    assert_eq!(report.cyclotomic_exponent, level);
    assert!(report.degree > BigUint::from(u128::MAX));
}
