//! Property tests for the structural invariants that hold across the whole
//! parameter space rather than at worked examples.

use num_bigint::BigInt;
use num_traits::Signed;
use proptest::prelude::*;

use torsion_core::enumerate::enumerate_degree_oracle;
use torsion_core::galois::{
    fixer_order, product_degree, stabilize_subgroup, FactorKind, FactorModel, ProductModel,
    SubgroupShape,
};
use torsion_core::invariants::{
    alpha_exhaustive, alpha_greedy, m_invariant_grid, ClassKind, ClassSpec, VarietySpec,
};
use torsion_core::modular::Modulus;
use torsion_core::rational::BigRational;
use torsion_core::{alpha, m_invariant};

fn arb_kind() -> impl Strategy<Value = FactorKind> {
    prop_oneof![
        Just(FactorKind::NonCm),
        Just(FactorKind::CmSplit),
        Just(FactorKind::CmNonsplit),
    ]
}

fn arb_shape(level: u32) -> impl Strategy<Value = SubgroupShape> {
    (0..=level).prop_flat_map(move |lo| {
        (lo..=level).prop_map(move |up| SubgroupShape::new(lo, up).unwrap())
    })
}

fn arb_spec(max_classes: usize, max_mult: u32) -> impl Strategy<Value = VarietySpec> {
    prop::collection::vec((any::<bool>(), 1..=max_mult), 1..=max_classes).prop_map(|classes| {
        VarietySpec::new(
            classes
                .into_iter()
                .enumerate()
                .map(|(i, (cm, mult))| ClassSpec {
                    label: format!("c{i}"),
                    kind: if cm { ClassKind::Cm } else { ClassKind::NonCm },
                    multiplicity: mult,
                })
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rational_sums_stay_reduced_and_ordered(
        (an, ad) in (-1000i64..1000, 1i64..1000),
        (bn, bd) in (-1000i64..1000, 1i64..1000),
    ) {
        let a = BigRational::new(BigInt::from(an), BigInt::from(ad));
        let b = BigRational::new(BigInt::from(bn), BigInt::from(bd));
        let sum = &a + &b;
        prop_assert_eq!(
            num_integer::gcd(sum.numer().abs(), sum.denom().clone()),
            BigInt::from(1)
        );
        // order agrees with cross multiplication (denominators positive)
        prop_assert_eq!(a < b, an * bd < bn * ad);
    }

    #[test]
    fn greedy_alpha_matches_exhaustive(spec in arb_spec(8, 5)) {
        prop_assert_eq!(
            alpha_exhaustive(&spec).unwrap().value,
            alpha_greedy(&spec).unwrap().value
        );
    }

    #[test]
    fn grid_oracle_below_exact_optimum(spec in arb_spec(3, 3), bound in 1u32..4) {
        let exact = m_invariant(&spec).unwrap();
        let grid = m_invariant_grid(&spec, bound).unwrap();
        prop_assert!(grid.value <= exact.value);
    }

    #[test]
    fn optimizer_value_is_scale_invariant(spec in arb_spec(3, 3)) {
        let w = m_invariant(&spec).unwrap();
        let scaled = w.profile.scaled(&BigRational::new(BigInt::from(7), BigInt::from(2)));
        prop_assert_eq!(scaled.ratio().unwrap(), w.value);
    }

    #[test]
    fn alpha_dominates_full_subset(spec in arb_spec(6, 4)) {
        // the full class set is always feasible
        let total: i64 = spec.classes().iter().map(|c| c.multiplicity as i64).sum();
        let dim: i64 = 1 + spec
            .classes()
            .iter()
            .map(|c| if c.kind == ClassKind::NonCm { 3 } else { 1 })
            .sum::<i64>();
        let full = BigRational::new(BigInt::from(2 * total), BigInt::from(dim));
        prop_assert!(alpha(&spec).unwrap().value >= full);
    }

    #[test]
    fn degree_monotone_in_shape(
        kind in arb_kind(),
        s1 in arb_shape(2),
        s2 in arb_shape(2),
    ) {
        // componentwise-larger shapes never have smaller degree
        let m = Modulus::new(3, 2).unwrap();
        let model = ProductModel::new(vec![FactorModel::new(kind, 1, "f").unwrap()], m).unwrap();
        if s1.lower() <= s2.lower() && s1.upper() <= s2.upper() {
            let d1 = product_degree(&model, &[s1]).unwrap().degree;
            let d2 = product_degree(&model, &[s2]).unwrap().degree;
            prop_assert!(d1 <= d2, "{s1} -> {d1}, {s2} -> {d2}");
        }
    }

    #[test]
    fn cm_fixers_agree_with_stabilized_shape(
        kind in prop_oneof![Just(FactorKind::CmSplit), Just(FactorKind::CmNonsplit)],
        shape in arb_shape(3),
    ) {
        let m = Modulus::new(2, 3).unwrap();
        let stable = stabilize_subgroup(kind, shape).unwrap();
        prop_assert_eq!(
            fixer_order(kind, &m, shape).unwrap(),
            fixer_order(kind, &m, stable).unwrap()
        );
    }

    #[test]
    fn oracle_agrees_on_random_pairs(
        a in arb_kind(),
        b in arb_kind(),
        s1 in arb_shape(2),
        s2 in arb_shape(2),
    ) {
        let m = Modulus::new(2, 2).unwrap();
        let model = ProductModel::new(
            vec![
                FactorModel::new(a, 1, "f1").unwrap(),
                FactorModel::new(b, 2, "f2").unwrap(),
            ],
            m,
        )
        .unwrap();
        let shapes = [s1, s2];
        let formula = product_degree(&model, &shapes).unwrap().degree;
        let gens: Vec<Vec<(u64, u64)>> =
            shapes.iter().map(|s| s.standard_generators(&m)).collect();
        let oracle = enumerate_degree_oracle(&model, &gens, 10_000_000).unwrap();
        prop_assert_eq!(formula, oracle);
    }
}
