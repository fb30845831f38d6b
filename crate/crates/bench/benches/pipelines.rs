use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use liesphere::algebra::{complex_product6, wedge_to_hex};
use liesphere::frame::{holonomy_defect, integrate_grid, lie6_residual, DEFAULT_STEP};
use liesphere::potentials::{make_c0_family, C0Params, CanalParams};
use liesphere::spectral::{landau_operator_check, landau_surface, LandauBasis};
use liesphere::surface::theorem1_check;
use liesphere::wilczynski::{integrate_proj_grid, ProjectivePotentials, ProjectiveSpec};
use liesphere::{Axis, Rect, TwistorVector, C64};
use nalgebra::Matrix4;

fn algebra(c: &mut Criterion) {
    let a = TwistorVector(std::array::from_fn(|i| C64::new(0.3 * i as f64, 1.0 - 0.2 * i as f64)));
    let b = TwistorVector(std::array::from_fn(|i| C64::new(-0.5 + 0.1 * i as f64, 0.4)));
    c.bench_function("wedge_and_product", |bench| {
        bench.iter(|| {
            let w = wedge_to_hex(black_box(&a), black_box(&b));
            complex_product6(&w, &w)
        })
    });
}

fn frames(c: &mut Criterion) {
    let field = make_c0_family(&C0Params::default(), Rect::new((0.5, 1.5), (0.5, 1.5))).unwrap();
    let rect = Rect::new((0.75, 1.25), (0.75, 1.25));
    c.bench_function("c0_holonomy", |bench| {
        bench.iter(|| holonomy_defect(&field, black_box(rect), &Matrix4::identity(), DEFAULT_STEP).unwrap())
    });
    let ax = Axis::with_step(0.9, 1e-2, 21);
    c.bench_function("c0_grid_21", |bench| {
        bench.iter(|| integrate_grid(&field, ax, ax, (10, 10), &Matrix4::identity(), DEFAULT_STEP).unwrap())
    });
    let g = integrate_grid(&field, ax, ax, (10, 10), &Matrix4::identity(), DEFAULT_STEP).unwrap();
    c.bench_function("c0_grid_checks_21", |bench| {
        bench.iter(|| (lie6_residual(&field, &g).unwrap(), theorem1_check(&g, &field).unwrap()))
    });
}

fn landau(c: &mut Criterion) {
    let basis = LandauBasis::closed_form();
    let ys: Vec<f64> = Axis::new(-1.8, 1.8, 101).nodes();
    c.bench_function("landau_profile_101", |bench| bench.iter(|| landau_surface(&basis, 1.0, black_box(&ys)).unwrap()));
    let ax = Axis::new(-0.5, 0.5, 41);
    c.bench_function("landau_operators_41", |bench| {
        bench.iter(|| landau_operator_check(&CanalParams::default(), ax, ax, 2).unwrap())
    });
}

fn projective(c: &mut Criterion) {
    let spec = ProjectiveSpec::Linear { beta: 1.2, gamma: -0.8, c: 0.6, v0: 0.3, w0: -0.4 };
    let pot = ProjectivePotentials::from_spec(&spec, Rect::new((-0.5, 0.5), (-0.5, 0.5))).unwrap();
    let ax = Axis::new(-0.2, 0.2, 21);
    c.bench_function("projective_grid_21", |bench| {
        bench.iter(|| integrate_proj_grid(&pot, ax, ax, (10, 10), &Matrix4::identity(), DEFAULT_STEP).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = algebra, frames, landau, projective
}
criterion_main!(benches);
