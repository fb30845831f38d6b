//! Curvature-sphere vectors, the orthogonality relations they satisfy, and
//! reconstruction of the surface as the envelope of the two sphere families.
//!
//! An oriented sphere with center `c` and signed radius `R` has hexaspherical
//! coordinates `((1 + c² − R²)/2, (1 − c² + R²)/2, c, R)`; these satisfy
//! `−y₀² + y₁² + y₂² + y₃² + y₄² − y₅² = 0`.

use nalgebra::Matrix6;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{lie_product, Bivector6};
use crate::error::{Error, Result};
use crate::frame::{frame_to_lie6, lie6_matrices, FrameGrid, FrameState};
use crate::grid::Grid2;
use crate::potentials::{derived_coeffs, PotentialField};

/// Threshold on `|y⁰ + y¹|` below which a sphere is treated as a plane.
pub const EPS_PLANE: f64 = 1e-10;

/// Threshold on `|w¹ − w²|` below which the two curvature spheres coincide.
pub const EPS_UMBILIC: f64 = 1e-8;

/// Tolerance for finite-difference checks at grid spacing `1e−2`.
pub const TOL_THM: f64 = 1e-5;

/// Real point of the Lie quadric in hexaspherical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HexSphere {
    pub y: [f64; 6],
}

impl HexSphere {
    pub fn new(y: [f64; 6]) -> Self {
        HexSphere { y }
    }

    /// Oriented sphere with the given center and signed radius.
    pub fn from_sphere(c: [f64; 3], radius: f64) -> Self {
        let c2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
        let r2 = radius * radius;
        HexSphere { y: [(1.0 + c2 - r2) / 2.0, (1.0 - c2 + r2) / 2.0, c[0], c[1], c[2], radius] }
    }

    /// Real part of a bivector.
    pub fn from_bivector(b: &Bivector6) -> Self {
        HexSphere { y: b.real_part() }
    }

    pub fn quadric_residual(&self) -> f64 {
        lie_product(&self.y, &self.y)
    }

    pub fn scaled(&self, s: f64) -> Self {
        HexSphere { y: self.y.map(|v| v * s) }
    }

    /// Center and signed radius after dividing by `y⁰ + y¹`.
    pub fn normalize(&self) -> Result<([f64; 3], f64)> {
        let denom = self.y[0] + self.y[1];
        if denom.abs() <= EPS_PLANE {
            return Err(Error::PlaneAtInfinity { denom: denom.abs() });
        }
        Ok(([self.y[2] / denom, self.y[3] / denom, self.y[4] / denom], self.y[5] / denom))
    }
}

/// `(center, radius)` of a hexaspherical vector.
pub fn hex_normalize(s: &HexSphere) -> Result<([f64; 3], f64)> {
    s.normalize()
}

/// `U = 𝒰 + conj 𝒰`, `V = 𝒱 + conj 𝒱` with `𝒰 = iψ∧ψ₁`, `𝒱 = ψ∧ψ₂`.
pub fn curvature_spheres(f: &FrameState) -> (HexSphere, HexSphere) {
    let l = frame_to_lie6(f);
    let u = l.u + l.u.conj();
    let v = l.v + l.v.conj();
    (HexSphere::from_bivector(&u), HexSphere::from_bivector(&v))
}

/// Euclidean data of a surface point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub r: [f64; 3],
    pub n: [f64; 3],
    pub w1: f64,
    pub w2: f64,
    /// `| |n| − 1 |`; small values certify that the two spheres are tangent.
    pub normal_defect: f64,
}

/// Surface point with its parameters and curvature spheres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    pub point: (f64, f64),
    pub surface: SurfacePoint,
    pub u: HexSphere,
    pub v: HexSphere,
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Common tangency point of two curvature spheres: `n = (c_U − c_V)/(w² − w¹)`,
/// `r = c_U + w¹ n`.
pub fn envelope_reconstruct(u: &HexSphere, v: &HexSphere) -> Result<SurfacePoint> {
    let (cu, w1) = u.normalize()?;
    let (cv, w2) = v.normalize()?;
    let gap = w2 - w1;
    if gap.abs() <= EPS_UMBILIC {
        return Err(Error::UmbilicDegeneracy { gap: gap.abs() });
    }
    let d = sub3(cu, cv);
    let n = [d[0] / gap, d[1] / gap, d[2] / gap];
    let r = [cu[0] + w1 * n[0], cu[1] + w1 * n[1], cu[2] + w1 * n[2]];
    Ok(SurfacePoint { r, n, w1, w2, normal_defect: (norm3(n) - 1.0).abs() })
}

/// Curvature spheres and envelope at every node of a frame grid; failures
/// are kept per node.
pub fn reconstruct_grid(grid: &FrameGrid) -> Vec<Result<SurfaceSample>> {
    grid.frames
        .par_iter()
        .map(|f| {
            let (u, v) = curvature_spheres(f);
            let surface = envelope_reconstruct(&u, &v)?;
            Ok(SurfaceSample { point: f.point, surface, u, v })
        })
        .collect()
}

/// Names of the eleven products checked by [`theorem1_check`].
pub const THEOREM1_NAMES: [&str; 11] = [
    "(U,U)",
    "(V,V)",
    "(U,V)",
    "(U,d1V)",
    "(U,d1d1V)",
    "(d2U,V)",
    "(d2U,d1V)",
    "(d2U,d1d1V)",
    "(d2d2U,V)",
    "(d2d2U,d1V)",
    "(d2d2U,d1d1V)",
];

/// Maximum residuals of the null and orthogonality relations of the curvature spheres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub residuals: [f64; 11],
    /// Largest imaginary part of `𝒰` and `𝒱`; the 6-frame is real for normalized frames.
    pub max_imag: f64,
    /// `max |∂₂V|` relative to `max |V|`, reported for canal fields where it vanishes.
    pub canal_d2v: Option<f64>,
}

impl Theorem1Report {
    pub fn max(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

type Vec6 = [f64; 6];

#[derive(Clone, Copy, Default)]
struct V6(Vec6);

impl std::ops::Add for V6 {
    type Output = V6;
    fn add(self, o: V6) -> V6 {
        V6(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl std::ops::Sub for V6 {
    type Output = V6;
    fn sub(self, o: V6) -> V6 {
        V6(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl std::ops::Mul<f64> for V6 {
    type Output = V6;
    fn mul(self, s: f64) -> V6 {
        V6(self.0.map(|x| x * s))
    }
}

/// `(U,U)`, `(V,V)` and the nine products between `{U, ∂₂U, ∂₂²U}` and
/// `{V, ∂₁V, ∂₁²V}` on interior nodes, derivatives by fourth-order differences.
pub fn theorem1_check(grid: &FrameGrid, field: &PotentialField) -> Result<Theorem1Report> {
    let lie: Vec<_> = grid.frames.iter().map(frame_to_lie6).collect();
    let max_imag = lie.iter().map(|l| l.u.max_imag().max(l.v.max_imag())).fold(0.0, f64::max);
    let ug = Grid2 {
        ax1: grid.ax1,
        ax2: grid.ax2,
        data: lie.iter().map(|l| V6((l.u + l.u.conj()).real_part())).collect(),
    };
    let vg = Grid2 {
        ax1: grid.ax1,
        ax2: grid.ax2,
        data: lie.iter().map(|l| V6((l.v + l.v.conj()).real_part())).collect(),
    };
    let nodes: Vec<_> = ug.interior(2).collect();
    if nodes.is_empty() {
        let (r1, r2) = grid.frames[0].point;
        return Err(Error::StencilOutOfDomain { r1, r2 });
    }
    let mut residuals = [0.0f64; 11];
    let mut d2v = 0.0f64;
    let mut vmax = 0.0f64;
    for &(i, j) in &nodes {
        let u = [ug.get(i, j), ug.deriv(i, j, 0, 1)?, ug.deriv(i, j, 0, 2)?];
        let v = [vg.get(i, j), vg.deriv(i, j, 1, 0)?, vg.deriv(i, j, 2, 0)?];
        accumulate(&mut residuals, &u, &v);
        if field.is_canal() {
            let dv = vg.deriv(i, j, 0, 1)?;
            d2v = d2v.max(dv.0.iter().map(|x| x.abs()).fold(0.0, f64::max));
            vmax = vmax.max(v[0].0.iter().map(|x| x.abs()).fold(0.0, f64::max));
        }
    }
    Ok(Theorem1Report {
        residuals,
        max_imag,
        canal_d2v: field.is_canal().then(|| d2v / vmax.max(f64::MIN_POSITIVE)),
    })
}

fn accumulate(residuals: &mut [f64; 11], u: &[V6; 3], v: &[V6; 3]) {
    let mut vals = vec![lie_product(&u[0].0, &u[0].0), lie_product(&v[0].0, &v[0].0)];
    for a in u {
        for b in v {
            vals.push(lie_product(&a.0, &b.0));
        }
    }
    for (r, x) in residuals.iter_mut().zip(vals) {
        *r = r.max(x.abs());
    }
}

fn combine(n: &Matrix6<f64>, row: usize, members: &[Bivector6; 6]) -> Bivector6 {
    let mut acc = Bivector6::ZERO;
    for (c, m) in members.iter().enumerate() {
        acc += *m * n[(row, c)];
    }
    acc
}

fn real6(b: Bivector6) -> V6 {
    V6((b + b.conj()).real_part())
}

/// Same products as [`theorem1_check`], with `∂₂U, ∂₂²U, ∂₁V, ∂₁²V` taken
/// from the 6-frame equations and the potential jets instead of differences.
/// Uses every node of the grid.
pub fn theorem1_check_exact(grid: &FrameGrid, field: &PotentialField) -> Result<Theorem1Report> {
    let canal = field.is_canal();
    let per_node = grid
        .frames
        .par_iter()
        .map(|f| -> Result<([f64; 11], f64)> {
            let (r1, r2) = f.point;
            let d = derived_coeffs(field, r1, r2)?;
            let (n1, n2) = lie6_matrices(&d, canal);
            let j = field.jets(r1, r2, 2)?;
            // ∂₂(∂₂p/p) and ∂₁(∂₁q/q), the only varying entries on the rows of U and V
            let dlp = j.p.d(0, 2) / j.p.value() - d.dlnp2 * d.dlnp2;
            let dlq = if canal { 0.0 } else { j.q.d(2, 0) / j.q.value() - d.dlnq1 * d.dlnq1 };
            let lie = frame_to_lie6(f);
            let m = lie.members();
            let u1: [Bivector6; 6] = std::array::from_fn(|r| combine(&n2, r, &m));
            let v1: [Bivector6; 6] = std::array::from_fn(|r| combine(&n1, r, &m));
            let u2 = combine(&n2, 0, &u1) + m[0] * dlp;
            let v2 = combine(&n1, 3, &v1) + m[3] * dlq;
            let mut res = [0.0; 11];
            accumulate(&mut res, &[real6(m[0]), real6(u1[0]), real6(u2)], &[real6(m[3]), real6(v1[3]), real6(v2)]);
            Ok((res, lie.u.max_imag().max(lie.v.max_imag())))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut residuals = [0.0f64; 11];
    let mut max_imag = 0.0f64;
    for (r, im) in per_node {
        for (a, b) in residuals.iter_mut().zip(r) {
            *a = a.max(b);
        }
        max_imag = max_imag.max(im);
    }
    Ok(Theorem1Report { residuals, max_imag, canal_d2v: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{herm_product6, C64};
    use crate::frame::su22_exp;
    use nalgebra::Matrix4;

    #[test]
    fn exact_products_agree_with_differences() {
        use crate::frame::integrate_grid;
        use crate::grid::{Axis, Rect};
        use crate::potentials::{make_c0_family, C0Params};
        let field = make_c0_family(&C0Params::default(), Rect::new((0.5, 1.5), (0.5, 1.5))).unwrap();
        let ax = Axis::with_step(0.9, 1e-2, 21);
        let g = integrate_grid(&field, ax, ax, (10, 10), &Matrix4::identity(), 1e-3).unwrap();
        let exact = theorem1_check_exact(&g, &field).unwrap();
        assert!(exact.max() < 1e-11, "{exact:?}");
        assert!(theorem1_check(&g, &field).unwrap().max() < 1e-6);
    }

    #[test]
    fn unit_sphere_and_point_sphere() {
        let (c, r) = hex_normalize(&HexSphere::new([0.0, 1.0, 0.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!((c, r), ([0.0; 3], 1.0));
        let (c, r) = hex_normalize(&HexSphere::new([1.0, 0.0, 1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!((c, r), ([1.0, 0.0, 0.0], 0.0));
    }

    #[test]
    fn normalization_is_projective() {
        let s = HexSphere::from_sphere([0.3, -1.2, 2.0], 0.7);
        assert!(s.quadric_residual().abs() < 1e-14);
        let (c1, r1) = s.normalize().unwrap();
        let (c2, r2) = s.scaled(2.0).normalize().unwrap();
        assert_eq!(r1, r2);
        assert_eq!(c1, c2);
        let (c3, r3) = s.scaled(-3.5).normalize().unwrap();
        assert!((r3 - r1).abs() < 1e-15 && (c3[2] - c1[2]).abs() < 1e-15);
    }

    #[test]
    fn planes_are_rejected() {
        let plane = HexSphere::new([0.5, -0.5, 0.0, 0.0, 1.0, 1.0]);
        assert!(matches!(plane.normalize(), Err(Error::PlaneAtInfinity { .. })));
    }

    #[test]
    fn standard_tetrad_spheres_are_real_null() {
        let (u, v) = curvature_spheres(&FrameState::standard((0.0, 0.0)));
        assert!(u.quadric_residual().abs() < 1e-15);
        assert!(v.quadric_residual().abs() < 1e-15);
        let l = frame_to_lie6(&FrameState::standard((0.0, 0.0)));
        assert!(l.u.is_real() && l.v.is_real());
    }

    #[test]
    fn six_frame_of_any_normalized_frame_is_real() {
        let x = Matrix4::from_fn(|i, j| C64::new(0.3 * (i as f64 - j as f64), 0.2 * ((i * j) as f64).sin()));
        let f = FrameState::with_matrix((0.0, 0.0), su22_exp(&x)).unwrap();
        let l = frame_to_lie6(&f);
        for m in l.members() {
            assert!(m.max_imag() < 1e-12, "{}", m.max_imag());
        }
        assert!(l.table_residual() < 1e-12);
        let (u, v) = curvature_spheres(&f);
        assert!(lie_product(&u.y, &v.y).abs() < 1e-12);
        assert!(herm_product6(&l.u, &l.u).norm() < 1e-12);
    }

    #[test]
    fn envelope_round_trip() {
        let r = [0.4, -0.2, 1.1];
        let n = {
            let raw = [0.3, 0.5, -0.8];
            let s = norm3(raw);
            raw.map(|x| x / s)
        };
        let (w1, w2) = (0.7, -1.9);
        let u = HexSphere::from_sphere([r[0] - w1 * n[0], r[1] - w1 * n[1], r[2] - w1 * n[2]], w1);
        let v = HexSphere::from_sphere([r[0] - w2 * n[0], r[1] - w2 * n[1], r[2] - w2 * n[2]], w2);
        let s = envelope_reconstruct(&u, &v).unwrap();
        for k in 0..3 {
            assert!((s.r[k] - r[k]).abs() < 1e-12);
            assert!((s.n[k] - n[k]).abs() < 1e-12);
        }
        assert!((s.w1 - w1).abs() < 1e-12 && (s.w2 - w2).abs() < 1e-12);
        let t = envelope_reconstruct(&u.scaled(3.0), &v.scaled(0.25)).unwrap();
        for k in 0..3 {
            assert!((t.r[k] - s.r[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn umbilic_spheres_are_rejected() {
        let u = HexSphere::from_sphere([0.0; 3], 1.0);
        assert!(matches!(envelope_reconstruct(&u, &u), Err(Error::UmbilicDegeneracy { .. })));
    }
}
