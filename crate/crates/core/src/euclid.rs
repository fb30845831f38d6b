//! Lie sphere frame of a Euclidean surface given in curvature-line coordinates.
//!
//! With unit normal `n` and principal radii `wⁱ` (so that `∂ᵢr = wⁱ ∂ᵢn`), the
//! curvature spheres lift to null vectors
//!
//! ```text
//! U = ((1 + r² − 2w¹(r·n))/2, (1 − r² + 2w¹(r·n))/2, r − w¹n, w¹)
//! ```
//!
//! and `V` likewise with `w²`. Rescaling by the third fundamental form gives
//! `𝒰 = U/(√G₂₂ (w² − w¹))`, `𝒱 = V/(√G₁₁ (w¹ − w²))` with `∂₁𝒰 = p𝒱`,
//! `∂₂𝒱 = q𝒰`, and the completion
//!
//! ```text
//! 𝒜 = ∂₂𝒰 − (∂₂p/p)𝒰,  a = −½(∂₂𝒜, ∂₂𝒜),  𝒫 = ∂₂𝒜 − a𝒰
//! ℬ = ∂₁𝒱 − (∂₁q/q)𝒱,  b = −½(∂₁ℬ, ∂₁ℬ),  𝒬 = ∂₁ℬ − b𝒱
//! V = b + ∂₁² ln q + ½(∂₁ ln q)²,  W = a + ∂₂² ln p + ½(∂₂ ln p)²
//! ```
//!
//! Everything is computed either with jets of the position vector (exact
//! derivatives) or with fourth-order finite differences on a grid.

use std::sync::Arc;

use nalgebra::Matrix6;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{lie_product, Bivector6, HEX_SIGNS};
use crate::error::{Error, Result};
use crate::frame::LieFrame6;
use crate::grid::{central_diff, Axis, Grid2, Rect};
use crate::jet::Jet;
use crate::potentials::{FieldJets, GaugeFn, PotentialField, PotentialModel};
use crate::surface::{HexSphere, SurfacePoint, EPS_UMBILIC};

/// Tolerance for the Dirac relations with exact derivatives.
pub const TOL_DIRAC: f64 = 1e-5;

/// Tolerance for the Dirac relations on sampled data.
pub const TOL_DIRAC_SAMPLED: f64 = 1e-3;

/// Extra derivative orders of the position consumed by `(p, q, V, W)`.
const POSITION_EXTRA: usize = 5;

/// Parametrized surface whose coordinate lines are curvature lines.
pub trait EuclidSurface: Send + Sync {
    /// Position vector with the parameters supplied as jets.
    fn position(&self, u: &Jet, v: &Jet) -> [Jet; 3];
}

/// Surfaces available by name in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceSpec {
    /// `(A + B cos θ)(cos φ, sin φ, 0) + B sin θ e_z` with `(R¹, R²) = (θ, φ)`.
    Torus { a: f64, b: f64 },
    /// `x²/a + y²/b + z²/c = 1` in confocal coordinates `c < R² < b < R¹ < a`,
    /// positive octant.
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// Dupin cyclide with `c² = a² − b²` and offset `d`, `(R¹, R²)` angles.
    DupinCyclide { a: f64, b: f64, d: f64 },
    /// Round cylinder of the given radius, `(R¹, R²) = (θ, z)`.
    Cylinder { radius: f64 },
}

impl EuclidSurface for SurfaceSpec {
    fn position(&self, u: &Jet, v: &Jet) -> [Jet; 3] {
        match *self {
            SurfaceSpec::Torus { a, b } => {
                let rho = u.cos() * b + a;
                [&rho * &v.cos(), &rho * &v.sin(), u.sin() * b]
            }
            SurfaceSpec::Ellipsoid { a, b, c } => {
                let coord = |e: f64, f: f64, g: f64| (((u - e) * (v - e)) * (e / ((f - e) * (g - e)))).sqrt();
                [coord(a, b, c), coord(b, a, c), coord(c, a, b)]
            }
            SurfaceSpec::DupinCyclide { a, b, d } => {
                let c = (a * a - b * b).sqrt();
                let (cu, su, cv, sv) = (u.cos(), u.sin(), v.cos(), v.sin());
                let den = (&cu * &cv) * (-c) + a;
                let x = ((&cu * &cv) * (-a) + c) * d + &cu * (b * b);
                let y = &su * &(cv.clone() * (-d) + a) * b;
                let z = &sv * &(cu * c - d) * b;
                [&x / &den, &y / &den, &z / &den]
            }
            SurfaceSpec::Cylinder { radius } => [u.cos() * radius, u.sin() * radius, v.clone()],
        }
    }
}

/// `rotation · S + translation`.
pub struct RigidMotion<S> {
    pub base: S,
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl<S: EuclidSurface> EuclidSurface for RigidMotion<S> {
    fn position(&self, u: &Jet, v: &Jet) -> [Jet; 3] {
        let r = self.base.position(u, v);
        std::array::from_fn(|i| {
            let m = &self.rotation[i];
            &r[0] * m[0] + &r[1] * m[1] + &r[2] * m[2] + self.translation[i]
        })
    }
}

/// The surface in new coordinates `s¹ = f(R¹)`, `s² = g(R²)`.
pub struct Reparametrized<S> {
    pub base: S,
    pub f: GaugeFn,
    pub g: GaugeFn,
}

impl<S: EuclidSurface> EuclidSurface for Reparametrized<S> {
    fn position(&self, u: &Jet, v: &Jet) -> [Jet; 3] {
        self.base.position(&self.f.invert(u), &self.g.invert(v))
    }
}

impl<S: EuclidSurface + ?Sized> EuclidSurface for Arc<S> {
    fn position(&self, u: &Jet, v: &Jet) -> [Jet; 3] {
        (**self).position(u, v)
    }
}

fn dot(a: &[Jet; 3], b: &[Jet; 3]) -> Jet {
    &a[0] * &b[0] + &a[1] * &b[1] + &a[2] * &b[2]
}

fn cross(a: &[Jet; 3], b: &[Jet; 3]) -> [Jet; 3] {
    [
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

fn lie_dot(a: &[Jet; 6], b: &[Jet; 6]) -> Jet {
    let mut acc = &a[0] * &b[0] * HEX_SIGNS[0];
    for i in 1..6 {
        acc = acc + &a[i] * &b[i] * HEX_SIGNS[i];
    }
    acc
}

fn values3(a: &[Jet; 3]) -> [f64; 3] {
    [a[0].value(), a[1].value(), a[2].value()]
}

fn values6(a: &[Jet; 6]) -> [f64; 6] {
    std::array::from_fn(|i| a[i].value())
}

/// Principal data of a surface point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeingartenData {
    pub r: [f64; 3],
    /// Unit normal along `∂₁r × ∂₂r`.
    pub n: [f64; 3],
    /// Principal radii; infinite along a direction in which the normal is constant.
    pub w1: f64,
    pub w2: f64,
    /// `(∂₁n, ∂₁n)` and `(∂₂n, ∂₂n)`.
    pub g11: f64,
    pub g22: f64,
    /// `max |∂ᵢr − wⁱ ∂ᵢn|` over finite radii.
    pub residual: f64,
}

impl WeingartenData {
    /// Direction (1 or 2) whose principal radius is infinite, if any.
    pub fn canal_direction(&self) -> Option<u8> {
        if !self.w1.is_finite() {
            Some(1)
        } else if !self.w2.is_finite() {
            Some(2)
        } else {
            None
        }
    }
}

struct NormalJets {
    r: [Jet; 3],
    n: [Jet; 3],
    w1: Jet,
    w2: Jet,
    g11: Jet,
    g22: Jet,
    residual: f64,
    flat: [bool; 2],
}

/// Third-form components this small (relative to the metric) mark a
/// direction along which the normal does not turn.
const FLAT_NORMAL: f64 = 1e-24;

fn normal_jets(s: &dyn EuclidSurface, r1: f64, r2: f64, order: usize) -> Result<NormalJets> {
    let n_pos = order + 2;
    let r = s.position(&Jet::var1(r1, n_pos), &Jet::var2(r2, n_pos));
    let ru: [Jet; 3] = std::array::from_fn(|i| r[i].d1());
    let rv: [Jet; 3] = std::array::from_fn(|i| r[i].d2());
    let c = cross(&ru, &rv);
    let area2 = dot(&c, &c);
    let scale = dot(&ru, &ru).value().max(dot(&rv, &rv).value());
    if !(area2.value() > 1e-24 * scale * scale) {
        return Err(Error::DegenerateParametrization { r1, r2 });
    }
    let inv = area2.powf(-0.5);
    let n: [Jet; 3] = std::array::from_fn(|i| &c[i] * &inv);
    let nu: [Jet; 3] = std::array::from_fn(|i| n[i].d1());
    let nv: [Jet; 3] = std::array::from_fn(|i| n[i].d2());
    let ru: [Jet; 3] = std::array::from_fn(|i| ru[i].truncate(order));
    let rv: [Jet; 3] = std::array::from_fn(|i| rv[i].truncate(order));
    let g11 = dot(&nu, &nu);
    let g22 = dot(&nv, &nv);
    let flat = [
        g11.value() <= FLAT_NORMAL * dot(&ru, &ru).value(),
        g22.value() <= FLAT_NORMAL * dot(&rv, &rv).value(),
    ];
    let radius = |rr: &[Jet; 3], nn: &[Jet; 3], g: &Jet, is_flat: bool| {
        if is_flat {
            Jet::constant(f64::INFINITY, order)
        } else {
            &dot(rr, nn) / g
        }
    };
    let w1 = radius(&ru, &nu, &g11, flat[0]);
    let w2 = radius(&rv, &nv, &g22, flat[1]);
    let mut residual = 0.0f64;
    for (rr, nn, w, is_flat) in [(&ru, &nu, &w1, flat[0]), (&rv, &nv, &w2, flat[1])] {
        if !is_flat {
            for i in 0..3 {
                residual = residual.max((rr[i].value() - w.value() * nn[i].value()).abs());
            }
        }
    }
    Ok(NormalJets { r, n, w1, w2, g11, g22, residual, flat })
}

/// Normal, principal radii, third fundamental form and Weingarten residual.
/// A direction in which the normal is constant yields an infinite radius
/// rather than an error.
pub fn weingarten_data(s: &dyn EuclidSurface, r1: f64, r2: f64) -> Result<WeingartenData> {
    let j = normal_jets(s, r1, r2, 0)?;
    let (w1, w2) = (j.w1.value(), j.w2.value());
    if (w1.is_finite() && w2.is_finite() && (w1 - w2).abs() <= EPS_UMBILIC) || (j.flat[0] && j.flat[1]) {
        return Err(Error::UmbilicPoint { r1, r2 });
    }
    Ok(WeingartenData {
        r: values3(&j.r),
        n: values3(&j.n),
        w1,
        w2,
        g11: j.g11.value(),
        g22: j.g22.value(),
        residual: j.residual,
    })
}

fn sphere_jets(r: &[Jet; 3], n: &[Jet; 3], w: &Jet) -> [Jet; 6] {
    let rr = dot(r, r);
    let rn = dot(r, n);
    let t = &(w * &rn) * 2.0;
    [
        (&rr - &t + 1.0) * 0.5,
        (-&rr + &t + 1.0) * 0.5,
        &r[0] - &(w * &n[0]),
        &r[1] - &(w * &n[1]),
        &r[2] - &(w * &n[2]),
        w.clone(),
    ]
}

fn checked(d: &NormalJets, r1: f64, r2: f64) -> Result<()> {
    if d.flat[0] {
        return Err(Error::CanalTypeInput { direction: 1 });
    }
    if d.flat[1] {
        return Err(Error::CanalTypeInput { direction: 2 });
    }
    if (d.w1.value() - d.w2.value()).abs() <= EPS_UMBILIC {
        return Err(Error::UmbilicPoint { r1, r2 });
    }
    if !(d.g11.value() > 0.0 && d.g22.value() > 0.0) {
        return Err(Error::DegenerateThirdForm { r1, r2 });
    }
    Ok(())
}

/// Curvature spheres `U` (radius `w¹`) and `V` (radius `w²`) as points of the Lie quadric.
pub fn lie_lift(s: &dyn EuclidSurface, r1: f64, r2: f64) -> Result<(HexSphere, HexSphere)> {
    let d = normal_jets(s, r1, r2, 0)?;
    checked(&d, r1, r2)?;
    let (r, n) = (values3(&d.r), values3(&d.n));
    let (w1, w2) = (d.w1.value(), d.w2.value());
    let center = |w: f64| [r[0] - w * n[0], r[1] - w * n[1], r[2] - w * n[2]];
    Ok((HexSphere::from_sphere(center(w1), w1), HexSphere::from_sphere(center(w2), w2)))
}

/// Jets of the Lie sphere frame and the invariants at a point.
#[derive(Debug, Clone)]
pub struct LieSphereJets {
    pub u: [Jet; 6],
    pub v: [Jet; 6],
    pub p: Jet,
    pub q: Jet,
    pub a: Jet,
    pub b: Jet,
    pub frame: LieFrame6,
    pub field: FieldJets,
}

fn pq_jets(d: &NormalJets) -> (Jet, Jet) {
    let gap = &d.w2 - &d.w1;
    let ratio = &d.g11.sqrt() / &d.g22.sqrt();
    let p = &(&d.w1.d1() / &(-&gap)) * &ratio;
    let q = &(&d.w2.d2() / &gap) * &ratio.recip();
    (p, q)
}

/// The invariants `p = ∂₁w¹/(w¹ − w²) √(G₁₁/G₂₂)` and `q = ∂₂w²/(w² − w¹) √(G₂₂/G₁₁)`
/// at a point. Both vanish identically exactly on Dupin cyclides.
pub fn invariants_pq(s: &dyn EuclidSurface, r1: f64, r2: f64) -> Result<(f64, f64)> {
    let d = normal_jets(s, r1, r2, 1)?;
    checked(&d, r1, r2)?;
    let (p, q) = pq_jets(&d);
    Ok((p.value(), q.value()))
}

/// Frame, invariants and potentials with `(p, q, V, W)` jets of the given order.
pub fn lie_sphere_jets(s: &dyn EuclidSurface, r1: f64, r2: f64, order: usize) -> Result<LieSphereJets> {
    let top = order + POSITION_EXTRA;
    let d = normal_jets(s, r1, r2, top - 2)?;
    checked(&d, r1, r2)?;
    let (p, q) = pq_jets(&d);
    let gap = &d.w2 - &d.w1;
    let (sg11, sg22) = (d.g11.sqrt(), d.g22.sqrt());
    let big_u = sphere_jets(&d.r, &d.n, &d.w1);
    let big_v = sphere_jets(&d.r, &d.n, &d.w2);
    let su = (&sg22 * &gap).recip();
    let sv = -(&sg11 * &gap).recip();
    let u: [Jet; 6] = std::array::from_fn(|i| &big_u[i] * &su);
    let v: [Jet; 6] = std::array::from_fn(|i| &big_v[i] * &sv);
    if p.value() == 0.0 || !p.value().is_finite() {
        return Err(Error::ZeroPotential { name: "p", r1, r2 });
    }
    if q.value() == 0.0 || !q.value().is_finite() {
        return Err(Error::ZeroPotential { name: "q", r1, r2 });
    }
    let lp2 = p.d2() / &p;
    let lq1 = q.d1() / &q;
    let big_a: [Jet; 6] = std::array::from_fn(|i| u[i].d2() - &lp2 * &u[i]);
    let big_b: [Jet; 6] = std::array::from_fn(|i| v[i].d1() - &lq1 * &v[i]);
    let da: [Jet; 6] = std::array::from_fn(|i| big_a[i].d2());
    let db: [Jet; 6] = std::array::from_fn(|i| big_b[i].d1());
    let a = lie_dot(&da, &da) * -0.5;
    let b = lie_dot(&db, &db) * -0.5;
    let big_p: [Jet; 6] = std::array::from_fn(|i| &da[i] - &(&a * &u[i]));
    let big_q: [Jet; 6] = std::array::from_fn(|i| &db[i] - &(&b * &v[i]));
    let w = (&a + lp2.d2() + lp2.powi(2) * 0.5).truncate(order);
    let vv = (&b + lq1.d1() + lq1.powi(2) * 0.5).truncate(order);
    let biv = |x: &[Jet; 6]| Bivector6::from_real(values6(x));
    let frame = LieFrame6 {
        point: (r1, r2),
        u: biv(&u),
        a: biv(&big_a),
        p: biv(&big_p),
        v: biv(&v),
        b: biv(&big_b),
        q: biv(&big_q),
    };
    let field = FieldJets { p: p.truncate(order), q: q.truncate(order), v: vv, w };
    Ok(LieSphereJets { u, v, p, q, a, b, frame, field })
}

/// The Lie sphere frame `(𝒰, 𝒜, 𝒫, 𝒱, ℬ, 𝒬)` at a point.
pub fn lie_sphere_frame(s: &dyn EuclidSurface, r1: f64, r2: f64) -> Result<LieFrame6> {
    Ok(lie_sphere_jets(s, r1, r2, 0)?.frame)
}

struct EuclidModel {
    surface: Arc<dyn EuclidSurface>,
}

impl PotentialModel for EuclidModel {
    fn jets(&self, r1: f64, r2: f64, order: usize) -> Result<FieldJets> {
        Ok(lie_sphere_jets(self.surface.as_ref(), r1, r2, order)?.field)
    }
}

/// Potentials of the surface with exact derivatives.
pub fn lie_invariant_field(surface: Arc<dyn EuclidSurface>, domain: Rect, label: impl Into<String>) -> PotentialField {
    PotentialField::new(EuclidModel { surface }, domain, false, label)
}

/// Normalized curvature-sphere vectors and `p, q` on a grid.
#[derive(Debug, Clone)]
pub struct NormalizedUv {
    pub u: Grid2<Bivector6>,
    pub v: Grid2<Bivector6>,
    pub p: Grid2<f64>,
    pub q: Grid2<f64>,
}

/// `𝒰`, `𝒱`, `p`, `q` at every node of `ax1 × ax2`.
pub fn normalize_uv(s: &dyn EuclidSurface, ax1: Axis, ax2: Axis) -> Result<NormalizedUv> {
    let nodes: Vec<(f64, f64)> =
        (0..ax1.n).flat_map(|i| (0..ax2.n).map(move |j| (ax1.at(i), ax2.at(j)))).collect();
    let data = nodes
        .par_iter()
        .map(|&(x, y)| {
            let j = lie_sphere_jets(s, x, y, 0)?;
            Ok((j.frame.u, j.frame.v, j.p.value(), j.q.value()))
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = |f: &dyn Fn(&(Bivector6, Bivector6, f64, f64)) -> Bivector6| Grid2 {
        ax1,
        ax2,
        data: data.iter().map(f).collect(),
    };
    let scalar = |f: &dyn Fn(&(Bivector6, Bivector6, f64, f64)) -> f64| Grid2 {
        ax1,
        ax2,
        data: data.iter().map(f).collect(),
    };
    Ok(NormalizedUv { u: grid(&|d| d.0), v: grid(&|d| d.1), p: scalar(&|d| d.2), q: scalar(&|d| d.3) })
}

/// Largest `|∂₁𝒰 − p𝒱|`, `|∂₂𝒱 − q𝒰|` over interior nodes by finite differences.
pub fn dirac_residual(nuv: &NormalizedUv) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, j) in nuv.u.interior(2) {
        let r1 = nuv.u.deriv(i, j, 1, 0)? - nuv.v.get(i, j) * nuv.p.get(i, j);
        let r2 = nuv.v.deriv(i, j, 0, 1)? - nuv.u.get(i, j) * nuv.q.get(i, j);
        worst = worst.max(r1.norm_max()).max(r2.norm_max());
    }
    Ok(worst)
}

/// Lie sphere frame and `a, b` completed from sampled `𝒰, 𝒱, p, q` by finite
/// differences, on the grid shrunk by the stencil margin.
#[derive(Debug, Clone)]
pub struct CompletedFrame {
    pub frames: Grid2<[Bivector6; 6]>,
    pub p: Grid2<f64>,
    pub q: Grid2<f64>,
    pub a: Grid2<f64>,
    pub b: Grid2<f64>,
}

impl CompletedFrame {
    pub fn frame(&self, i: usize, j: usize) -> LieFrame6 {
        let m = self.frames.data[i * self.frames.ax2.n + j];
        LieFrame6 { point: (self.frames.ax1.at(i), self.frames.ax2.at(j)), u: m[0], a: m[1], p: m[2], v: m[3], b: m[4], q: m[5] }
    }

    /// Largest deviation of the product table over all nodes.
    pub fn table_residual(&self) -> f64 {
        let (n1, n2) = (self.frames.ax1.n, self.frames.ax2.n);
        (0..n1).flat_map(|i| (0..n2).map(move |j| (i, j))).map(|(i, j)| self.frame(i, j).table_residual()).fold(0.0, f64::max)
    }
}

fn lie_b(x: &Bivector6, y: &Bivector6) -> f64 {
    lie_product(&x.real_part(), &y.real_part())
}

/// Complete `𝒰, 𝒱` to the Lie sphere frame with finite differences.
pub fn complete_frame(nuv: &NormalizedUv) -> Result<CompletedFrame> {
    const M: usize = 2;
    let (n1, n2) = nuv.u.shape();
    if n1 < 2 * M + 1 || n2 < 2 * M + 1 {
        let (r1, r2) = nuv.u.point(0, 0);
        return Err(Error::StencilOutOfDomain { r1, r2 });
    }
    let mut frames = Vec::new();
    let (mut av, mut bv, mut pv, mut qv) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for i in M..n1 - M {
        for j in M..n2 - M {
            let (p, q) = (nuv.p.get(i, j), nuv.q.get(i, j));
            let (r1, r2) = nuv.u.point(i, j);
            if p == 0.0 {
                return Err(Error::ZeroPotential { name: "p", r1, r2 });
            }
            if q == 0.0 {
                return Err(Error::ZeroPotential { name: "q", r1, r2 });
            }
            let (u, v) = (nuv.u.get(i, j), nuv.v.get(i, j));
            let (lp, lq) = (nuv.p.deriv(i, j, 0, 1)? / p, nuv.q.deriv(i, j, 1, 0)? / q);
            let dlp = nuv.p.deriv(i, j, 0, 2)? / p - lp * lp;
            let dlq = nuv.q.deriv(i, j, 2, 0)? / q - lq * lq;
            let (u2, u22) = (nuv.u.deriv(i, j, 0, 1)?, nuv.u.deriv(i, j, 0, 2)?);
            let (v1, v11) = (nuv.v.deriv(i, j, 1, 0)?, nuv.v.deriv(i, j, 2, 0)?);
            let big_a = u2 - u * lp;
            let da = u22 - u * dlp - u2 * lp;
            let big_b = v1 - v * lq;
            let db = v11 - v * dlq - v1 * lq;
            let a = -0.5 * lie_b(&da, &da);
            let b = -0.5 * lie_b(&db, &db);
            frames.push([u, big_a, da - u * a, v, big_b, db - v * b]);
            av.push(a);
            bv.push(b);
            pv.push(p);
            qv.push(q);
        }
    }
    let (ax1, ax2) = (nuv.u.ax1.shrink(M), nuv.u.ax2.shrink(M));
    let g = |data: Vec<f64>| Grid2 { ax1, ax2, data };
    Ok(CompletedFrame { frames: Grid2 { ax1, ax2, data: frames }, p: g(pv), q: g(qv), a: g(av), b: g(bv) })
}

/// Sampled potentials from a completed frame: `V` and `W` use finite
/// differences of `ln q` and `ln p`.
pub fn extract_potentials(frame: &CompletedFrame) -> Result<PotentialField> {
    const M: usize = 2;
    let lp = frame.p.map(|x| x.abs().ln());
    let lq = frame.q.map(|x| x.abs().ln());
    let (n1, n2) = frame.p.shape();
    let (mut v, mut w) = (Vec::new(), Vec::new());
    for i in M..n1 - M {
        for j in M..n2 - M {
            let lq1 = lq.deriv(i, j, 1, 0)?;
            let lp2 = lp.deriv(i, j, 0, 1)?;
            v.push(frame.b.get(i, j) + lq.deriv(i, j, 2, 0)? + 0.5 * lq1 * lq1);
            w.push(frame.a.get(i, j) + lp.deriv(i, j, 0, 2)? + 0.5 * lp2 * lp2);
        }
    }
    let p = frame.p.shrink(M);
    let q = frame.q.shrink(M);
    let v = Grid2 { ax1: p.ax1, ax2: p.ax2, data: v };
    let w = Grid2 { ax1: p.ax1, ax2: p.ax2, data: w };
    PotentialField::sampled(p, q, v, w, false)
}

/// Largest residual of the frame equations for a completed frame, using
/// finite differences of the frame members and the coefficients of `field`.
pub fn completed_frame_residual(frame: &CompletedFrame, field: &PotentialField) -> Result<f64> {
    let comps: Vec<Grid2<Bivector6>> = (0..6).map(|c| frame.frames.map_members(c)).collect();
    let mut worst = 0.0f64;
    for (i, j) in comps[0].interior(2) {
        let (x, y) = comps[0].point(i, j);
        if !field.domain().contains(x, y) {
            continue;
        }
        let d = crate::potentials::derived_coeffs(field, x, y)?;
        let (m1, m2) = crate::frame::lie6_matrices(&d, false);
        let members = frame.frame(i, j).members();
        for (c, g) in comps.iter().enumerate() {
            let mut rhs1 = Bivector6::ZERO;
            let mut rhs2 = Bivector6::ZERO;
            for (k, m) in members.iter().enumerate() {
                rhs1 += *m * m1[(c, k)];
                rhs2 += *m * m2[(c, k)];
            }
            worst = worst.max((g.deriv(i, j, 1, 0)? - rhs1).norm_max());
            worst = worst.max((g.deriv(i, j, 0, 1)? - rhs2).norm_max());
        }
    }
    Ok(worst)
}

trait MemberGrid {
    fn map_members(&self, c: usize) -> Grid2<Bivector6>;
}

impl MemberGrid for Grid2<[Bivector6; 6]> {
    fn map_members(&self, c: usize) -> Grid2<Bivector6> {
        Grid2 { ax1: self.ax1, ax2: self.ax2, data: self.data.iter().map(|m| m[c]).collect() }
    }
}

/// Lie sphere transformation `T` with `T·gᵢ = tᵢ` for the six members of two
/// frames with the same product table.
pub fn lie_alignment(generated: &LieFrame6, target: &LieFrame6) -> Result<Matrix6<f64>> {
    let rows = |f: &LieFrame6| {
        let m = f.members();
        Matrix6::from_fn(|i, k| m[i][k].re)
    };
    let g = rows(generated);
    let t = rows(target);
    let ginv = g.try_inverse().ok_or(Error::DependentVectors)?;
    Ok((ginv * t).transpose())
}

/// Apply a 6×6 transformation to a sphere.
pub fn transform_sphere(t: &Matrix6<f64>, s: &HexSphere) -> HexSphere {
    let y = nalgebra::Vector6::from_row_slice(&s.y);
    let z = t * y;
    HexSphere::new(std::array::from_fn(|i| z[i]))
}

/// `p, q` recomputed from sampled surface points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantSample {
    pub point: (f64, f64),
    pub p: f64,
    pub q: f64,
}

/// `p, q` of a sampled surface grid by the same formulas with finite
/// differences: `p = ∂₁w¹/(w¹ − w²) √(G₁₁/G₂₂)`, `q = ∂₂w²/(w² − w¹) √(G₂₂/G₁₁)`.
/// `points` is stored with the `R²` index fastest; nodes whose stencil meets a
/// missing point are skipped.
pub fn sampled_invariants(ax1: Axis, ax2: Axis, points: &[Option<SurfacePoint>]) -> Vec<InvariantSample> {
    const M: usize = 2;
    let at = |i: usize, j: usize| points[i * ax2.n + j];
    let mut out = Vec::new();
    for i in M..ax1.n.saturating_sub(M) {
        for j in M..ax2.n.saturating_sub(M) {
            let line1: Option<Vec<SurfacePoint>> = (i - M..=i + M).map(|k| at(k, j)).collect();
            let line2: Option<Vec<SurfacePoint>> = (j - M..=j + M).map(|k| at(i, k)).collect();
            let (Some(line1), Some(line2)) = (line1, line2) else { continue };
            let d1 = |f: &dyn Fn(&SurfacePoint) -> f64| {
                central_diff(|t| f(&line1[(t.round() as i64 + M as i64) as usize]), 0.0, 1.0, 1) / ax1.step()
            };
            let d2 = |f: &dyn Fn(&SurfacePoint) -> f64| {
                central_diff(|t| f(&line2[(t.round() as i64 + M as i64) as usize]), 0.0, 1.0, 1) / ax2.step()
            };
            let n1: [f64; 3] = std::array::from_fn(|k| d1(&|s| s.n[k]));
            let n2: [f64; 3] = std::array::from_fn(|k| d2(&|s| s.n[k]));
            let g11: f64 = n1.iter().map(|x| x * x).sum();
            let g22: f64 = n2.iter().map(|x| x * x).sum();
            let c = line1[M];
            let gap = c.w2 - c.w1;
            out.push(InvariantSample {
                point: (ax1.at(i), ax2.at(j)),
                p: d1(&|s| s.w1) / -gap * (g11 / g22).sqrt(),
                q: d2(&|s| s.w2) / gap * (g22 / g11).sqrt(),
            });
        }
    }
    out
}

/// Largest entry of `TᵀJT − J` for the Lie quadric form `J`.
pub fn lie_isometry_defect(t: &Matrix6<f64>) -> f64 {
    let j = Matrix6::from_diagonal(&nalgebra::Vector6::from_row_slice(&HEX_SIGNS));
    (t.transpose() * j * t - j).abs().max()
}

/// Residuals collected along the reconstruction round trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundTripReport {
    /// `∂₁𝒰 − p𝒱`, `∂₂𝒱 − q𝒰` on the sampling grid.
    pub dirac_residual: f64,
    /// Product table of the completed frame.
    pub table_residual: f64,
    /// Compatibility residual of the extracted sampled potentials.
    pub gc_residual: f64,
    /// Aligned reconstructed positions against the input surface.
    pub position_error: f64,
    /// `|pq − p̃q̃|` with `p̃, q̃` recomputed from the reconstructed surface.
    pub metric_error: f64,
    /// Deviation of the alignment from a Lie sphere transformation.
    pub alignment_defect: f64,
    /// Nodes at which reconstruction failed.
    pub failed_nodes: usize,
}

/// Output of [`euclid_roundtrip`].
#[derive(Debug, Clone)]
pub struct RoundTrip {
    pub ax1: Axis,
    pub ax2: Axis,
    /// Reconstructed points after alignment, `R²` index fastest.
    pub samples: Vec<Option<SurfacePoint>>,
    pub alignment: Matrix6<f64>,
    pub report: RoundTripReport,
}

/// Nodes consumed on each side by frame completion, extraction and interpolation.
const ROUNDTRIP_PAD: usize = 8;

/// Surface → sampled Lie sphere frame → extracted potentials → integrated
/// twistor frame from the standard tetrad → curvature spheres → envelope.
///
/// The generated frame agrees with the surface's own frame up to a fixed Lie
/// sphere transformation, computed at the center node and applied before the
/// comparison. `n` is the number of nodes per side of the evaluation grid on
/// `domain`; `h` the integration step.
pub fn euclid_roundtrip(surface: &dyn EuclidSurface, domain: Rect, n: usize, h: f64) -> Result<RoundTrip> {
    if n < 9 {
        return Err(Error::InvalidInput(format!("round trip needs at least 9 nodes per side, got {n}")));
    }
    let ax1 = Axis::new(domain.r1.0, domain.r1.1, n);
    let ax2 = Axis::new(domain.r2.0, domain.r2.1, n);
    let pad = |ax: &Axis| Axis::with_step(ax.start - ROUNDTRIP_PAD as f64 * ax.step(), ax.step(), ax.n + 2 * ROUNDTRIP_PAD);
    let nuv = normalize_uv(surface, pad(&ax1), pad(&ax2))?;
    let dirac = dirac_residual(&nuv)?;
    let completed = complete_frame(&nuv)?;
    let table = completed.table_residual();
    let field = extract_potentials(&completed)?;
    let gc = crate::potentials::gc_max_residual(&field, domain, 11)?;
    let center = (n / 2, n / 2);
    let init = crate::frame::FrameState::standard((0.0, 0.0)).m;
    let frames = crate::frame::integrate_grid(&field, ax1, ax2, center, &init, h)?;
    let generated = crate::frame::frame_to_lie6(frames.get(center.0, center.1));
    let target = lie_sphere_frame(surface, ax1.at(center.0), ax2.at(center.1))?;
    let alignment = lie_alignment(&generated, &target)?;
    let samples: Vec<Option<SurfacePoint>> = frames
        .frames
        .par_iter()
        .map(|f| {
            let (u, v) = crate::surface::curvature_spheres(f);
            crate::surface::envelope_reconstruct(&transform_sphere(&alignment, &u), &transform_sphere(&alignment, &v)).ok()
        })
        .collect();
    let mut position_error = 0.0f64;
    for (k, s) in samples.iter().enumerate() {
        if let Some(s) = s {
            let w = weingarten_data(surface, ax1.at(k / ax2.n), ax2.at(k % ax2.n))?;
            for c in 0..3 {
                position_error = position_error.max((s.r[c] - w.r[c]).abs());
            }
        }
    }
    let mut metric_error = 0.0f64;
    for s in sampled_invariants(ax1, ax2, &samples) {
        let (p, q) = invariants_pq(surface, s.point.0, s.point.1)?;
        metric_error = metric_error.max((p * q - s.p * s.q).abs());
    }
    let report = RoundTripReport {
        dirac_residual: dirac,
        table_residual: table,
        gc_residual: gc,
        position_error,
        metric_error,
        alignment_defect: lie_isometry_defect(&alignment),
        failed_nodes: samples.iter().filter(|s| s.is_none()).count(),
    };
    Ok(RoundTrip { ax1, ax2, samples, alignment, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::central_diff;
    use crate::potentials::{gc_max_residual, GaugeFn};

    fn ellipsoid() -> SurfaceSpec {
        SurfaceSpec::Ellipsoid { a: 3.0, b: 2.0, c: 1.0 }
    }

    fn torus() -> SurfaceSpec {
        SurfaceSpec::Torus { a: 2.0, b: 0.5 }
    }

    struct RoundSphere;

    impl EuclidSurface for RoundSphere {
        fn position(&self, u: &Jet, v: &Jet) -> [Jet; 3] {
            [&u.cos() * &v.cos(), &u.cos() * &v.sin(), u.sin()]
        }
    }

    #[test]
    fn torus_principal_radii() {
        let (a, b) = (2.0, 0.5);
        for theta in [0.3, -0.7, 1.1] {
            let w = weingarten_data(&torus(), theta, 0.4).unwrap();
            // ∂θr × ∂φr points inward, so both radii carry a minus sign.
            assert!((w.w1 + b).abs() < 1e-12);
            assert!((w.w2 + (a + b * theta.cos()) / theta.cos()).abs() < 1e-12);
            assert!(w.residual < 1e-9);
            assert!((w.g11 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cylinder_is_flagged_canal_type() {
        let cyl = SurfaceSpec::Cylinder { radius: 1.5 };
        let w = weingarten_data(&cyl, 0.3, 0.2).unwrap();
        assert!((w.w1 - 1.5).abs() < 1e-12);
        assert_eq!(w.canal_direction(), Some(2));
        assert_eq!(lie_lift(&cyl, 0.3, 0.2), Err(Error::CanalTypeInput { direction: 2 }));
    }

    #[test]
    fn round_sphere_is_umbilic() {
        assert!(matches!(weingarten_data(&RoundSphere, 0.2, 0.3), Err(Error::UmbilicPoint { .. })));
        assert!(matches!(lie_lift(&RoundSphere, 0.2, 0.3), Err(Error::UmbilicPoint { .. })));
    }

    #[test]
    fn lifted_spheres_are_null_and_orthogonal() {
        for (s, x, y) in [(torus(), 0.3, 0.2), (ellipsoid(), 2.4, 1.6)] {
            let (u, v) = lie_lift(&s, x, y).unwrap();
            assert!(u.quadric_residual().abs() < 1e-12);
            assert!(v.quadric_residual().abs() < 1e-12);
            assert!(lie_product(&u.y, &v.y).abs() < 1e-12);
        }
    }

    #[test]
    fn first_derivative_of_u_is_along_u_minus_v() {
        let s = ellipsoid();
        let (x, y, h) = (2.45, 1.55, 1e-3);
        let (u, v) = lie_lift(&s, x, y).unwrap();
        let w = weingarten_data(&s, x, y).unwrap();
        let dw1 = central_diff(|t| weingarten_data(&s, t, y).unwrap().w1, x, h, 1);
        let coef = dw1 / (w.w1 - w.w2);
        for c in 0..6 {
            let du = central_diff(|t| lie_lift(&s, t, y).unwrap().0.y[c], x, h, 1);
            assert!((du - coef * (u.y[c] - v.y[c])).abs() < 1e-6);
        }
    }

    #[test]
    fn dupin_cyclides_have_vanishing_invariants() {
        let dupin = SurfaceSpec::DupinCyclide { a: 3.0, b: 2.0, d: 1.0 };
        for (s, x, y) in [(torus(), 0.3, 0.2), (dupin, 0.3, 0.7)] {
            let (p, q) = invariants_pq(&s, x, y).unwrap();
            assert!(p.abs() < 1e-12 && q.abs() < 1e-12, "p = {p}, q = {q}");
            assert!(matches!(lie_sphere_jets(&s, x, y, 0), Err(Error::ZeroPotential { .. })));
        }
    }

    #[test]
    fn analytic_frame_has_the_product_table() {
        let f = lie_sphere_frame(&ellipsoid(), 2.5, 1.5).unwrap();
        assert!(f.table_residual() < 1e-10);
        let j = lie_sphere_jets(&ellipsoid(), 2.5, 1.5, 0).unwrap();
        let du2: [Jet; 6] = std::array::from_fn(|i| j.u[i].d2());
        let dv1: [Jet; 6] = std::array::from_fn(|i| j.v[i].d1());
        assert!((lie_dot(&du2, &du2).value() - 1.0).abs() < 1e-10);
        assert!((lie_dot(&dv1, &dv1).value() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn analytic_potentials_are_compatible() {
        let field = lie_invariant_field(Arc::new(ellipsoid()), Rect::new((2.2, 2.8), (1.2, 1.8)), "ellipsoid");
        assert!(gc_max_residual(&field, Rect::new((2.3, 2.7), (1.3, 1.7)), 5).unwrap() < 1e-9);
    }

    #[test]
    fn invariants_are_euclidean_invariant() {
        let (c, s) = (0.6f64.cos(), 0.6f64.sin());
        let moved = RigidMotion {
            base: ellipsoid(),
            rotation: [[c, -s, 0.0], [s * 0.8, c * 0.8, 0.6], [-s * 0.6, -c * 0.6, 0.8]],
            translation: [1.0, -2.0, 0.5],
        };
        for (x, y) in [(2.3, 1.3), (2.6, 1.7)] {
            let a = invariants_pq(&ellipsoid(), x, y).unwrap();
            let b = invariants_pq(&moved, x, y).unwrap();
            assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
        }
    }

    #[test]
    fn reparametrization_rescales_p_and_q() {
        let re = Reparametrized { base: ellipsoid(), f: GaugeFn::Affine { a: 2.0, b: 0.0 }, g: GaugeFn::Identity };
        let (p, q) = invariants_pq(&ellipsoid(), 2.5, 1.5).unwrap();
        let (ps, qs) = invariants_pq(&re, 5.0, 1.5).unwrap();
        assert!((ps - p / 4.0).abs() < 1e-12);
        assert!((qs - q * 2.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_frame_route() {
        let (ax1, ax2) = (Axis::new(2.3, 2.7, 41), Axis::new(1.3, 1.7, 41));
        let nuv = normalize_uv(&ellipsoid(), ax1, ax2).unwrap();
        assert!(dirac_residual(&nuv).unwrap() < TOL_DIRAC);
        let cf = complete_frame(&nuv).unwrap();
        let f = cf.frame(10, 10);
        assert!((lie_b(&f.a, &f.a) - 1.0).abs() < 1e-5);
        assert!((lie_b(&f.u, &f.p) + 1.0).abs() < 1e-5);
        assert!(cf.table_residual() < 1e-5);
        let field = extract_potentials(&cf).unwrap();
        assert!(gc_max_residual(&field, field.domain(), 7).unwrap() < TOL_DIRAC_SAMPLED);
    }

    #[test]
    fn completed_frame_satisfies_frame_equations() {
        let (ax1, ax2) = (Axis::new(2.4, 2.6, 41), Axis::new(1.4, 1.6, 41));
        let cf = complete_frame(&normalize_uv(&ellipsoid(), ax1, ax2).unwrap()).unwrap();
        let field = lie_invariant_field(Arc::new(ellipsoid()), Rect::new((2.3, 2.7), (1.3, 1.7)), "ellipsoid");
        assert!(completed_frame_residual(&cf, &field).unwrap() < 1e-4);
    }

    #[test]
    fn alignment_is_a_lie_sphere_transformation() {
        let a = lie_sphere_frame(&ellipsoid(), 2.5, 1.5).unwrap();
        let b = lie_sphere_frame(&ellipsoid(), 2.4, 1.35).unwrap();
        let t = lie_alignment(&a, &b).unwrap();
        assert!(lie_isometry_defect(&t) < 1e-9);
        let mapped = transform_sphere(&t, &HexSphere::from_bivector(&a.u));
        for c in 0..6 {
            assert!((mapped.y[c] - b.u[c].re).abs() < 1e-10);
        }
    }
}
