use criterion::{black_box, criterion_group, criterion_main, Criterion};
use torsion_core::enumerate::enumerate_degree_oracle;
use torsion_core::galois::{
    product_degree, FactorKind, FactorModel, ProductModel, SubgroupShape, DEFAULT_BUDGET,
};
use torsion_core::modular::Modulus;
use torsion_core::verify::check_gammamn;

fn bench_model(c: &mut Criterion) {
    c.bench_function("product_degree_formula_level_24", |b| {
        let m = Modulus::new(3, 24).unwrap();
        let model = ProductModel::new(
            vec![
                FactorModel::new(FactorKind::NonCm, 1, "f1").unwrap(),
                FactorModel::new(FactorKind::CmSplit, 2, "f2").unwrap(),
                FactorModel::new(FactorKind::CmNonsplit, 1, "f3").unwrap(),
            ],
            m,
        )
        .unwrap();
        let shapes = [
            SubgroupShape::new(5, 17).unwrap(),
            SubgroupShape::new(0, 24).unwrap(),
            SubgroupShape::new(3, 9).unwrap(),
        ];
        b.iter(|| product_degree(black_box(&model), black_box(&shapes)).unwrap())
    });
    c.bench_function("degree_oracle_pair_level_9", |b| {
        let m = Modulus::new(3, 2).unwrap();
        let model = ProductModel::new(
            vec![
                FactorModel::new(FactorKind::NonCm, 1, "f1").unwrap(),
                FactorModel::new(FactorKind::CmSplit, 1, "f2").unwrap(),
            ],
            m,
        )
        .unwrap();
        let shapes = [
            SubgroupShape::new(1, 2).unwrap(),
            SubgroupShape::new(1, 1).unwrap(),
        ];
        let gens: Vec<Vec<(u64, u64)>> = shapes.iter().map(|s| s.standard_generators(&m)).collect();
        b.iter(|| {
            enumerate_degree_oracle(black_box(&model), black_box(&gens), DEFAULT_BUDGET).unwrap()
        })
    });
    c.bench_function("gammamn_level_9", |b| {
        let m = Modulus::new(3, 2).unwrap();
        b.iter(|| check_gammamn(black_box(&m), DEFAULT_BUDGET).unwrap())
    });
}

criterion_group!(benches, bench_model);
criterion_main!(benches);
