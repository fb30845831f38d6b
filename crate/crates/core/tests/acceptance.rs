use std::time::Instant;

use liesphere::algebra::{complex_product6, herm_product6, wedge_to_hex};
use liesphere::euclid::{euclid_roundtrip, invariants_pq, SurfaceSpec};
use liesphere::frame::{holonomy_defect, integrate_frame, integrate_grid, lie6_residual, FrameState, DEFAULT_STEP};
use liesphere::potentials::{make_c0_family, make_c1_family, make_canal_landau, C0Params, C1Params, CanalParams, GaugeFn};
use liesphere::spectral::{
    bump_functions, c0_operators, c1_curvature, frame_solution_components, landau_center_radius, landau_hex,
    landau_operator_check, lie_quadric, magnetic_identity_check, LandauBasis,
};
use liesphere::surface::{theorem1_check, theorem1_check_exact};
use liesphere::wilczynski::{
    integrate_proj_grid, laplace_residuals, PluckerFrame, ProjectivePotentials, ProjectiveSpec,
};
use liesphere::{Axis, Bivector6, GaugeMap, PotentialField, Rect, TwistorVector, C64};
use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: u32, what: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] AC-{n} {what}: {detail}");
    assert!(pass, "AC-{n} {what}: {detail}");
}

fn c0_domain() -> Rect {
    Rect::new((0.5, 1.5), (0.5, 1.5))
}

fn c1_domain() -> Rect {
    Rect::new((-0.8, -0.2), (0.2, 0.8))
}

fn canal_domain() -> Rect {
    Rect::new((0.2, 1.2), (-0.6, 0.6))
}

fn c1_params() -> C1Params {
    C1Params::monopole(0.0, -4.0, 0.0, [0.2, -0.3, 0.1])
}

fn families() -> Vec<(&'static str, PotentialField, Axis, Axis)> {
    vec![
        (
            "c=0",
            make_c0_family(&C0Params::default(), c0_domain()).unwrap(),
            Axis::with_step(0.8, 1e-2, 41),
            Axis::with_step(0.8, 1e-2, 41),
        ),
        (
            "c=1",
            make_c1_family(&c1_params(), c1_domain()).unwrap(),
            Axis::with_step(-0.7, 1e-2, 41),
            Axis::with_step(0.3, 1e-2, 41),
        ),
        (
            "canal",
            make_canal_landau(&CanalParams::default(), canal_domain()).unwrap(),
            Axis::with_step(0.5, 1e-2, 41),
            Axis::with_step(-0.2, 1e-2, 41),
        ),
    ]
}

#[test]
fn ac1_compatibility_is_flatness() {
    let t = Instant::now();
    let field = make_c0_family(&C0Params::default(), c0_domain()).unwrap();
    let rect = Rect::new((0.75, 1.25), (0.75, 1.25));
    let id = Matrix4::identity();
    let flat = holonomy_defect(&field, rect, &id, DEFAULT_STEP).unwrap();
    let bent = field.perturb_v(|_, r2| r2 * r2 * 0.1);
    let curved = holonomy_defect(&bent, rect, &id, DEFAULT_STEP).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let pass = flat <= 1e-7 && curved > 1e-4 && secs < 10.0;
    verdict(1, "compatibility <=> flatness", pass, format!("defect {flat:.2e}, perturbed {curved:.2e}, {secs:.2}s"));
}

#[test]
fn ac2_conservation_along_paths() {
    let mut worst = (0.0f64, 0.0f64);
    for (_, field, ax1, ax2) in families() {
        let (a, b) = (ax1.at(0), ax2.at(0));
        let (c, d) = (ax1.at(40), ax2.at(40));
        // length 0.4 + 0.4 + 0.57 + 0.4 < 2
        let path = [(c, b), (c, d), (a, b), (a, d)];
        let out = integrate_frame(&field, &FrameState::standard((a, b)), &path, DEFAULT_STEP).unwrap();
        worst = (worst.0.max(out.gram_drift()), worst.1.max(out.det_drift()));
    }
    let pass = worst.0 <= 1e-8 && worst.1 <= 1e-8;
    verdict(2, "Gram and determinant conservation", pass, format!("gram {:.2e}, det {:.2e}", worst.0, worst.1));
}

#[test]
fn ac3_curvature_spheres_are_null_and_orthogonal() {
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, field, ax1, ax2) in families() {
        let g = integrate_grid(&field, ax1, ax2, (20, 20), &Matrix4::identity(), DEFAULT_STEP).unwrap();
        let m = theorem1_check(&g, &field).unwrap().max();
        pass &= m <= 1e-5;
        lines.push(format!("{name} {m:.2e}"));
    }
    let reference = PotentialField::constant(1.0, 1.0, 0.0, 0.0, c0_domain());
    let ax = Axis::with_step(0.8, 1e-2, 41);
    let g = integrate_grid(&reference, ax, ax, (20, 20), &Matrix4::identity(), DEFAULT_STEP).unwrap();
    let m = theorem1_check_exact(&g, &reference).unwrap().max();
    pass &= m <= 1e-9;
    lines.push(format!("constant (exact derivatives) {m:.2e}"));
    verdict(3, "null and orthogonal curvature spheres", pass, lines.join(", "));
}

#[test]
fn ac4_six_frame_consistency() {
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, field, ax1, ax2) in families() {
        let run = |h: f64, n: usize| {
            let a1 = Axis::with_step(ax1.start, h, n);
            let a2 = Axis::with_step(ax2.start, h, n);
            let g = integrate_grid(&field, a1, a2, (n / 2, n / 2), &Matrix4::identity(), DEFAULT_STEP).unwrap();
            lie6_residual(&field, &g).unwrap()
        };
        let (coarse, fine) = (run(1e-2, 41), run(5e-3, 81));
        let ratio = coarse / fine;
        pass &= coarse <= 1e-5 && (10.0..=24.0).contains(&ratio);
        lines.push(format!("{name} {coarse:.2e} ratio {ratio:.1}"));
    }
    verdict(4, "6-frame equations", pass, lines.join(", "));
}

#[test]
fn ac5_euclidean_round_trip() {
    let ellipsoid = SurfaceSpec::Ellipsoid { a: 3.0, b: 2.0, c: 1.0 };
    let rt = euclid_roundtrip(&ellipsoid, Rect::new((2.3, 2.7), (1.3, 1.7)), 41, DEFAULT_STEP).unwrap();
    let metric = rt.report.metric_error;
    let torus = SurfaceSpec::Torus { a: 2.0, b: 0.5 };
    let (p, q) = invariants_pq(&torus, 0.3, 1.1).unwrap();
    let rejected = euclid_roundtrip(&torus, Rect::new((0.1, 0.5), (0.1, 0.5)), 21, DEFAULT_STEP).is_err();
    let pass = metric <= 1e-4 && rt.report.failed_nodes == 0 && p.abs() < 1e-9 && q.abs() < 1e-9 && rejected;
    verdict(
        5,
        "surface round trip",
        pass,
        format!("ellipsoid metric {metric:.2e}, torus p={p:.1e} q={q:.1e} rejected={rejected}"),
    );
}

#[test]
fn ac6_commuting_operators() {
    let params = C0Params::default();
    let field = make_c0_family(&params, c0_domain()).unwrap();
    let ax = Axis::new(0.8, 1.2, 41);
    let g = integrate_grid(&field, ax, ax, (20, 20), &Matrix4::identity(), DEFAULT_STEP).unwrap();
    let ops = c0_operators(&params, c0_domain()).unwrap();
    let eigen = ops.eigen_residual(&frame_solution_components(&g)).unwrap();
    let wide = Axis::new(0.55, 1.45, 91);
    let comm = ops.commutator(&bump_functions(10, wide, wide)).unwrap();
    let lax = Axis::new(-0.5, 0.5, 101);
    let landau = landau_operator_check(&CanalParams::default(), lax, lax, 10).unwrap();
    let pass = eigen <= 1e-4
        && comm <= 1e-4
        && landau.h_residual <= 1e-4
        && landau.f_residual <= 1e-4
        && landau.commutator <= 1e-4;
    verdict(
        6,
        "commuting operators",
        pass,
        format!(
            "c=0 eigen {eigen:.2e} comm {comm:.2e}; Landau H {:.2e} F {:.2e} comm {:.2e}",
            landau.h_residual, landau.f_residual, landau.commutator
        ),
    );
}

#[test]
fn ac7_magnetic_identity() {
    let mono = C1Params::monopole(0.0, -4.0, 0.0, [0.0; 3]);
    let (ax1, ax2) = (Axis::new(-0.7, -0.3, 11), Axis::new(0.3, 0.7, 11));
    let residual = magnetic_identity_check(&mono, ax1, ax2).unwrap();
    let other = magnetic_identity_check(&C1Params::monopole(0.3, -4.0, 0.1, [0.0; 3]), ax1, ax2).unwrap();
    let mut k_dev = 0.0f64;
    for x in ax1.nodes() {
        for y in ax2.nodes() {
            k_dev = k_dev.max((c1_curvature(&mono, x, y).unwrap() - 1.0).abs());
        }
    }
    let pass = residual <= 1e-5 && other <= 1e-5 && k_dev <= 1e-6;
    verdict(7, "magnetic identity", pass, format!("residual {:.2e}, |K-1| {k_dev:.2e}", residual.max(other)));
}

fn simpson_exp_sq(b: f64, n: usize) -> f64 {
    let h = b / n as f64;
    let f = |t: f64| (t * t).exp();
    let inner: f64 = (1..n).map(|i| f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(0.0) + inner + f(b)) * h / 3.0
}

#[test]
fn ac8_landau_closed_form() {
    let closed = LandauBasis::closed_form();
    let w_exact = closed.wronskian();
    let ode = LandauBasis::integrate(0.5, 3.0).unwrap();
    let w_num = (0..=60).map(|i| (ode.wronskian_at(-3.0 + 0.1 * i as f64).unwrap() - 1.0).abs()).fold(0.0, f64::max);
    let k = 1.0;
    let i1 = simpson_exp_sq(1.0, 2000);
    let (z, r) = landau_center_radius(&closed, k, 0.0).unwrap();
    let dz = (z - (-k / i1 - i1 / (4.0 * k))).abs();
    let dr = (r - (-k / i1 + i1 / (4.0 * k))).abs();
    let mut quad = 0.0f64;
    for i in 0..100 {
        let y = -1.8 + 0.036 * i as f64;
        let h = landau_hex(&closed, k, y).unwrap();
        let scale = h.iter().map(|v| v * v).sum::<f64>().max(1.0);
        quad = quad.max(lie_quadric(&h).abs() / scale);
    }
    let pass = w_exact == 1.0 && w_num <= 1e-9 && dz <= 1e-8 && dr <= 1e-8 && quad <= 1e-10;
    verdict(
        8,
        "Landau n=0 closed form",
        pass,
        format!("W-1 {w_num:.1e}, z(0) {z:.6} (dev {dz:.1e}), R(0) {r:.6} (dev {dr:.1e}), quadric {quad:.1e}"),
    );
}

fn random_twistor(rng: &mut ChaCha8Rng) -> TwistorVector {
    TwistorVector(std::array::from_fn(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
}

#[test]
fn ac9_algebra_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut herm, mut decomp) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let x = Bivector6(std::array::from_fn(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        let y = Bivector6(std::array::from_fn(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        herm = herm.max((herm_product6(&x, &y) - complex_product6(&x, &y.conj())).norm());
        let ab = wedge_to_hex(&random_twistor(&mut rng), &random_twistor(&mut rng));
        decomp = decomp.max(complex_product6(&ab, &ab).norm());
    }
    let pass = herm <= 1e-13 && decomp <= 1e-13;
    verdict(9, "algebra identities", pass, format!("hermitian {herm:.1e}, decomposable {decomp:.1e}"));
}

#[test]
fn ac10_projective_frame() {
    let spec = ProjectiveSpec::Linear { beta: 1.2, gamma: -0.8, c: 0.6, v0: 0.3, w0: -0.4 };
    let base = ProjectivePotentials::from_spec(&spec, Rect::new((-0.5, 0.5), (-0.5, 0.5))).unwrap();
    let map = GaugeMap {
        f: GaugeFn::Mobius { a: 1.0, b: 0.2, c: 0.3, d: 1.0 },
        g: GaugeFn::Compose { outer: Box::new(GaugeFn::Exp), inner: Box::new(GaugeFn::Affine { a: 0.5, b: 0.1 }) },
    };
    let pot = base.gauged(&map).unwrap();
    let d = pot.domain();
    let ax1 = Axis::new(d.r1.0 + 0.05, d.r1.0 + 0.45, 41);
    let ax2 = Axis::new(d.r2.0 + 0.05, d.r2.0 + 0.45, 41);
    let g = integrate_proj_grid(&pot, ax1, ax2, (20, 20), &Matrix4::identity(), DEFAULT_STEP).unwrap();
    let products = PluckerFrame::from_frame(g.get(7, 33)).products();
    let diag = [products[0][2], products[1][1], products[3][5], products[4][4]];
    let table_dev = diag.iter().zip([-1.0, 1.0, 1.0, -1.0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut others = 0.0f64;
    for (i, row) in products.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if PluckerFrame::table_entry(i, j) == 0.0 {
                others = others.max(v.abs());
            }
        }
    }
    let (ru, rv) = laplace_residuals(&pot, &g).unwrap();
    let pass = table_dev <= 1e-9 && others <= 1e-9 && ru <= 1e-6 && rv <= 1e-6;
    verdict(
        10,
        "projective frame",
        pass,
        format!(
            "products ({:.6}, {:.6}, {:.6}, {:.6}), others {others:.1e}, Laplace {ru:.1e} / {rv:.1e}",
            diag[0], diag[1], diag[2], diag[3]
        ),
    );
}
