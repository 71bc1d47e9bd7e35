use criterion::{black_box, criterion_group, criterion_main, Criterion};
use torsion_core::invariants::{m_invariant_grid, uniform_spec, ClassKind, ClassSpec, VarietySpec};
use torsion_core::{alpha, m_invariant};

fn mixed_spec() -> VarietySpec {
    VarietySpec::new(vec![
        ClassSpec {
            label: "nc1".into(),
            kind: ClassKind::NonCm,
            multiplicity: 2,
        },
        ClassSpec {
            label: "nc2".into(),
            kind: ClassKind::NonCm,
            multiplicity: 1,
        },
        ClassSpec {
            label: "cm1".into(),
            kind: ClassKind::Cm,
            multiplicity: 3,
        },
        ClassSpec {
            label: "cm2".into(),
            kind: ClassKind::Cm,
            multiplicity: 1,
        },
    ])
    .unwrap()
}

fn bench_invariants(c: &mut Criterion) {
    c.bench_function("alpha_six_classes", |b| {
        let spec = uniform_spec(3, 3);
        b.iter(|| alpha(black_box(&spec)).unwrap())
    });
    c.bench_function("m_invariant_mixed_four_classes", |b| {
        let spec = mixed_spec();
        b.iter(|| m_invariant(black_box(&spec)).unwrap())
    });
    c.bench_function("m_invariant_grid_bound_4", |b| {
        let spec = mixed_spec();
        b.iter(|| m_invariant_grid(black_box(&spec), 4).unwrap())
    });
}

criterion_group!(benches, bench_invariants);
criterion_main!(benches);
