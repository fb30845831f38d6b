//! Real projective counterpart: surfaces in RP³ given by
//! `r_xx = βr_y + ½(V − β_y)r`, `r_yy = γr_x + ½(W − γ_x)r` in asymptotic
//! coordinates `(x, y)`, the Wilczynski tetrahedron `(r, r₁, r₂, η)` and the
//! Plücker images of its edges.
//!
//! Plücker coordinates are stored as `(p₀₁, p₀₂, p₀₃, p₂₃, p₃₁, p₁₂)`. The
//! scalar product on them is `(P, Q) = −½(p₀₁q₂₃ + p₂₃q₀₁ + p₀₂q₃₁ + p₃₁q₀₂ + p₀₃q₁₂ + p₁₂q₀₃)`,
//! so `(a∧b, c∧d) = −½ det(a, b, c, d)`. With tetrahedra of unit determinant
//! this yields `(𝒰,𝒫) = −1`, `(𝒜,𝒜) = 1`, `(𝒱,𝒬) = 1`, `(ℬ,ℬ) = −1`.
//!
//! The reparametrization law of `(β, γ, V, W)` coincides with the gauge law of
//! the Lie sphere potentials `(p, q, V, W)`, so the potentials are held in a
//! [`PotentialField`] with `p = β`, `q = γ`.

use nalgebra::{Matrix4, Matrix6};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid2, Rect};
use crate::jet::Jet;
use crate::potentials::{apply_gauge, FieldJets, GaugeMap, PotentialField, PotentialModel};

/// Closed-form projective potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProjectiveSpec {
    /// Constant `β, γ` with `V = (c/γ)x + v0`, `W = (c/β)y + w0`; always compatible.
    Linear { beta: f64, gamma: f64, c: f64, v0: f64, w0: f64 },
    /// `β = eˣ`, `γ = eʸ`, `V = W = e^{x+y}`; only the first compatibility
    /// equation fails, by `e^{x+2y} − e^{2x+y}`.
    Exponential,
}

struct LinearModel {
    beta: f64,
    gamma: f64,
    c: f64,
    v0: f64,
    w0: f64,
}

impl PotentialModel for LinearModel {
    fn jets(&self, x: f64, y: f64, order: usize) -> Result<FieldJets> {
        let (xj, yj) = (Jet::var1(x, order), Jet::var2(y, order));
        Ok(FieldJets {
            p: Jet::constant(self.beta, order),
            q: Jet::constant(self.gamma, order),
            v: xj * (self.c / self.gamma) + self.v0,
            w: yj * (self.c / self.beta) + self.w0,
        })
    }
}

struct ExponentialModel;

impl PotentialModel for ExponentialModel {
    fn jets(&self, x: f64, y: f64, order: usize) -> Result<FieldJets> {
        let (xj, yj) = (Jet::var1(x, order), Jet::var2(y, order));
        let s = (&xj + &yj).exp();
        Ok(FieldJets { p: xj.exp(), q: yj.exp(), v: s.clone(), w: s })
    }
}

/// `β, γ, V, W` over a rectangle of the `(x, y)` plane.
#[derive(Debug, Clone)]
pub struct ProjectivePotentials {
    field: PotentialField,
}

impl ProjectivePotentials {
    /// Potentials from a model returning `(β, γ, V, W)` in the `(p, q, V, W)` slots.
    pub fn new(model: impl PotentialModel + 'static, domain: Rect, label: impl Into<String>) -> Self {
        ProjectivePotentials { field: PotentialField::new(model, domain, false, label) }
    }

    pub fn from_spec(spec: &ProjectiveSpec, domain: Rect) -> Result<Self> {
        match *spec {
            ProjectiveSpec::Linear { beta, gamma, c, v0, w0 } => {
                if beta == 0.0 || gamma == 0.0 {
                    let name = if beta == 0.0 { "beta" } else { "gamma" };
                    return Err(Error::ZeroPotential { name, r1: domain.r1.0, r2: domain.r2.0 });
                }
                Ok(Self::new(LinearModel { beta, gamma, c, v0, w0 }, domain, "linear"))
            }
            ProjectiveSpec::Exponential => Ok(Self::new(ExponentialModel, domain, "exponential")),
        }
    }

    pub fn constant(beta: f64, gamma: f64, v: f64, w: f64, domain: Rect) -> Self {
        ProjectivePotentials { field: PotentialField::constant(beta, gamma, v, w, domain) }
    }

    /// Potentials after `x* = f(x)`, `y* = g(y)`: `β* = βg′/f′²`, `γ* = γf′/g′²`,
    /// `V*f′² = V + S(f)`, `W*g′² = W + S(g)`.
    pub fn gauged(&self, map: &GaugeMap) -> Result<Self> {
        Ok(ProjectivePotentials { field: apply_gauge(&self.field, map)? })
    }

    pub fn domain(&self) -> Rect {
        self.field.domain()
    }

    /// Jets of `(β, γ, V, W)` in the `(p, q, v, w)` slots.
    pub fn jets(&self, x: f64, y: f64, order: usize) -> Result<FieldJets> {
        self.field.jets(x, y, order)
    }

    /// `(β, γ, V, W)` at a point.
    pub fn values(&self, x: f64, y: f64) -> Result<[f64; 4]> {
        self.field.values(x, y)
    }

    /// Coefficient `2βγ` of the projective metric `2βγ dx dy`.
    pub fn projective_metric(&self, x: f64, y: f64) -> Result<f64> {
        let [b, g, _, _] = self.values(x, y)?;
        Ok(2.0 * b * g)
    }

    /// Darboux cubic form `β dx³ + γ dy³` on a tangent vector.
    pub fn darboux_cubic(&self, x: f64, y: f64, dir: (f64, f64)) -> Result<f64> {
        let [b, g, _, _] = self.values(x, y)?;
        Ok(b * dir.0.powi(3) + g * dir.1.powi(3))
    }
}

/// Residuals of the projective compatibility equations:
/// `β_yyy − 2β_yW − βW_y − (γ_xxx − 2γ_xV − γV_x)`,
/// `W_x − 2γβ_y − βγ_y`, `V_y − 2βγ_x − γβ_x`.
pub fn proj_gc_residual(pot: &ProjectivePotentials, x: f64, y: f64) -> Result<[f64; 3]> {
    let j = pot.jets(x, y, 3)?;
    if j.order() < 3 {
        return Err(Error::StencilOutOfDomain { r1: x, r2: y });
    }
    let (b, g, v, w) = (&j.p, &j.q, &j.v, &j.w);
    let d = |f: &Jet, i, k| f.d(i, k);
    let first = d(b, 0, 3) - 2.0 * d(b, 0, 1) * w.value() - b.value() * d(w, 0, 1)
        - (d(g, 3, 0) - 2.0 * d(g, 1, 0) * v.value() - g.value() * d(v, 1, 0));
    let second = d(w, 1, 0) - 2.0 * g.value() * d(b, 0, 1) - b.value() * d(g, 0, 1);
    let third = d(v, 0, 1) - 2.0 * b.value() * d(g, 1, 0) - g.value() * d(b, 1, 0);
    Ok([first, second, third])
}

/// Largest compatibility residual over an `n × n` grid of `rect`.
pub fn proj_gc_max_residual(pot: &ProjectivePotentials, rect: Rect, n: usize) -> Result<f64> {
    let (a1, a2) = (Axis::new(rect.r1.0, rect.r1.1, n), Axis::new(rect.r2.0, rect.r2.1, n));
    let pts: Vec<(f64, f64)> = a1.nodes().into_iter().flat_map(|x| a2.nodes().into_iter().map(move |y| (x, y))).collect();
    let r = pts.par_iter().map(|&(x, y)| proj_gc_residual(pot, x, y)).collect::<Result<Vec<_>>>()?;
    Ok(r.iter().flatten().fold(0.0, |m, v| m.max(v.abs())))
}

/// Coefficients of the tetrahedron equations at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjCoeffs {
    pub beta: f64,
    pub gamma: f64,
    /// `β_y/β`
    pub dlnb_y: f64,
    /// `γ_x/γ`
    pub dlng_x: f64,
    pub k: f64,
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

/// `k = βγ − (ln β)_xy`, `l = βγ − (ln γ)_xy`,
/// `a = W − (ln β)_yy − ½(ln β)_y²`, `b = V − (ln γ)_xx − ½(ln γ)_x²`.
pub fn proj_coeffs(pot: &ProjectivePotentials, x: f64, y: f64) -> Result<ProjCoeffs> {
    let j = pot.jets(x, y, 2)?;
    let (beta, gamma) = (j.p.value(), j.q.value());
    if beta == 0.0 {
        return Err(Error::ZeroPotential { name: "beta", r1: x, r2: y });
    }
    if gamma == 0.0 {
        return Err(Error::ZeroPotential { name: "gamma", r1: x, r2: y });
    }
    // logarithmic derivatives as quotients, valid for either sign
    let lb_y = j.p.d2() / j.p.truncate(1);
    let lg_x = j.q.d1() / j.q.truncate(1);
    let (lb, lg) = (lb_y.value(), lg_x.value());
    Ok(ProjCoeffs {
        beta,
        gamma,
        dlnb_y: lb,
        dlng_x: lg,
        k: beta * gamma - lb_y.d(1, 0),
        l: beta * gamma - lg_x.d(0, 1),
        a: j.w.value() - lb_y.d(0, 1) - 0.5 * lb * lb,
        b: j.v.value() - lg_x.d(1, 0) - 0.5 * lg * lg,
    })
}

/// Real 4×4 matrices of `∂ₓT = M₁T`, `∂_yT = M₂T` for the tetrahedron `T`
/// with rows `r, r₁, r₂, η`.
pub fn proj_frame_matrices(c: &ProjCoeffs) -> (Matrix4<f64>, Matrix4<f64>) {
    let (hg, hb) = (0.5 * c.dlng_x, 0.5 * c.dlnb_y);
    #[rustfmt::skip]
    let m1 = Matrix4::new(
        hg, 1.0, 0.0, 0.0,
        0.5 * c.b, -hg, c.beta, 0.0,
        0.5 * c.k, 0.0, hg, 1.0,
        0.5 * c.beta * c.a, 0.5 * c.k, 0.5 * c.b, -hg,
    );
    #[rustfmt::skip]
    let m2 = Matrix4::new(
        hb, 0.0, 1.0, 0.0,
        0.5 * c.l, hb, 0.0, 1.0,
        0.5 * c.a, c.gamma, -hb, 0.0,
        0.5 * c.gamma * c.b, 0.5 * c.a, 0.5 * c.l, -hb,
    );
    (m1, m2)
}

pub fn proj_frame_connection(pot: &ProjectivePotentials, x: f64, y: f64) -> Result<(Matrix4<f64>, Matrix4<f64>)> {
    Ok(proj_frame_matrices(&proj_coeffs(pot, x, y)?))
}

/// The tetrahedron `r, r₁, r₂, η` as rows of a real matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectiveFrame {
    pub point: (f64, f64),
    pub m: Matrix4<f64>,
}

impl ProjectiveFrame {
    pub fn standard(point: (f64, f64)) -> Self {
        ProjectiveFrame { point, m: Matrix4::identity() }
    }

    pub fn row(&self, i: usize) -> [f64; 4] {
        std::array::from_fn(|j| self.m[(i, j)])
    }

    pub fn r(&self) -> [f64; 4] {
        self.row(0)
    }

    pub fn det(&self) -> f64 {
        self.m.determinant()
    }
}

fn rk4_proj(pot: &ProjectivePotentials, mut f: Matrix4<f64>, from: (f64, f64), to: (f64, f64), h: f64) -> Result<Matrix4<f64>> {
    let (dx, dy) = (to.0 - from.0, to.1 - from.1);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return Ok(f);
    }
    let n = (len / h).ceil().max(1.0) as usize;
    let dt = 1.0 / n as f64;
    let gen = |t: f64| -> Result<Matrix4<f64>> {
        let (m1, m2) = proj_frame_connection(pot, from.0 + t * dx, from.1 + t * dy)?;
        Ok(m1 * dx + m2 * dy)
    };
    let mut a0 = gen(0.0)?;
    for s in 0..n {
        let t = s as f64 * dt;
        let am = gen(t + 0.5 * dt)?;
        let a1 = gen(if s + 1 == n { 1.0 } else { t + dt })?;
        let k1 = a0 * f;
        let k2 = am * (f + k1 * (0.5 * dt));
        let k3 = am * (f + k2 * (0.5 * dt));
        let k4 = a1 * (f + k3 * dt);
        f += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        if !f.iter().all(|v| v.is_finite()) {
            return Err(Error::StepFailure { t: t + dt });
        }
        a0 = a1;
    }
    Ok(f)
}

/// Integrate the tetrahedron along a polyline with RK4 of step at most `h`.
pub fn integrate_proj_frame(
    pot: &ProjectivePotentials,
    init: &ProjectiveFrame,
    path: &[(f64, f64)],
    h: f64,
) -> Result<ProjectiveFrame> {
    let mut f = init.m;
    let mut at = init.point;
    for &next in path {
        pot.domain().check(next.0, next.1)?;
        f = rk4_proj(pot, f, at, next, h)?;
        at = next;
    }
    Ok(ProjectiveFrame { point: at, m: f })
}

/// Max-norm change of the tetrahedron after one loop around `rect`.
pub fn proj_holonomy_defect(pot: &ProjectivePotentials, rect: Rect, h: f64) -> Result<f64> {
    let (a, b) = rect.r1;
    let (c, d) = rect.r2;
    let start = ProjectiveFrame::standard((a, c));
    pot.domain().check(a, c)?;
    let end = integrate_proj_frame(pot, &start, &[(b, c), (b, d), (a, d), (a, c)], h)?;
    Ok((end.m - start.m).amax())
}

/// Tetrahedra on `ax1 × ax2` with the `y` index fastest.
#[derive(Debug, Clone)]
pub struct ProjectiveFrameGrid {
    pub ax1: Axis,
    pub ax2: Axis,
    pub frames: Vec<ProjectiveFrame>,
}

impl ProjectiveFrameGrid {
    pub fn get(&self, i: usize, j: usize) -> &ProjectiveFrame {
        &self.frames[i * self.ax2.n + j]
    }
}

/// Integrate along the row through `base`, then along every column in parallel.
pub fn integrate_proj_grid(
    pot: &ProjectivePotentials,
    ax1: Axis,
    ax2: Axis,
    base: (usize, usize),
    init: &Matrix4<f64>,
    h: f64,
) -> Result<ProjectiveFrameGrid> {
    let (ib, jb) = base;
    let (x0, y0) = (ax1.at(ib), ax2.at(jb));
    pot.domain().check(x0, y0)?;
    let march = |start: ProjectiveFrame, pts: Vec<(f64, f64)>| -> Result<Vec<ProjectiveFrame>> {
        let mut cur = start;
        pts.into_iter()
            .map(|p| {
                cur = integrate_proj_frame(pot, &cur, &[p], h)?;
                Ok(cur)
            })
            .collect()
    };
    let start = ProjectiveFrame { point: (x0, y0), m: *init };
    let mut row = vec![start; ax1.n];
    for (k, f) in march(start, (ib + 1..ax1.n).map(|i| (ax1.at(i), y0)).collect())?.into_iter().enumerate() {
        row[ib + 1 + k] = f;
    }
    for (k, f) in march(start, (0..ib).rev().map(|i| (ax1.at(i), y0)).collect())?.into_iter().enumerate() {
        row[ib - 1 - k] = f;
    }
    let cols = row
        .par_iter()
        .enumerate()
        .map(|(i, &s)| -> Result<Vec<ProjectiveFrame>> {
            let x = ax1.at(i);
            let mut col = vec![s; ax2.n];
            for (k, f) in march(s, (jb + 1..ax2.n).map(|j| (x, ax2.at(j))).collect())?.into_iter().enumerate() {
                col[jb + 1 + k] = f;
            }
            for (k, f) in march(s, (0..jb).rev().map(|j| (x, ax2.at(j))).collect())?.into_iter().enumerate() {
                col[jb - 1 - k] = f;
            }
            Ok(col)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProjectiveFrameGrid { ax1, ax2, frames: cols.into_iter().flatten().collect() })
}

/// Plücker coordinates `(p₀₁, p₀₂, p₀₃, p₂₃, p₃₁, p₁₂)` of `a ∧ b` without a
/// dependence check.
pub fn wedge_plucker(a: &[f64; 4], b: &[f64; 4]) -> [f64; 6] {
    let p = |i: usize, j: usize| a[i] * b[j] - a[j] * b[i];
    [p(0, 1), p(0, 2), p(0, 3), p(2, 3), p(3, 1), p(1, 2)]
}

/// Plücker coordinates of the line through `a` and `b`.
pub fn plucker_embed(a: &[f64; 4], b: &[f64; 4]) -> Result<[f64; 6]> {
    let p = wedge_plucker(a, b);
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let np = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(np > 1e-12 * na * nb) {
        return Err(Error::DependentVectors);
    }
    Ok(p)
}

/// `p₀₁p₂₃ + p₀₂p₃₁ + p₀₃p₁₂`.
pub fn plucker_relation(p: &[f64; 6]) -> f64 {
    p[0] * p[3] + p[1] * p[4] + p[2] * p[5]
}

/// The signature (3, 3) scalar product of the module header.
pub fn plucker_product(p: &[f64; 6], q: &[f64; 6]) -> f64 {
    -0.5 * (p[0] * q[3] + p[3] * q[0] + p[1] * q[4] + p[4] * q[1] + p[2] * q[5] + p[5] * q[2])
}

fn add6(a: [f64; 6], b: [f64; 6]) -> [f64; 6] {
    std::array::from_fn(|i| a[i] + b[i])
}

fn scale6(a: [f64; 6], s: f64) -> [f64; 6] {
    a.map(|v| v * s)
}

/// `𝒰 = r∧r₁`, `𝒜 = r₂∧r₁ + r∧η`, `𝒫 = 2r₂∧η`, `𝒱 = r∧r₂`, `ℬ = r₁∧r₂ + r∧η`, `𝒬 = 2r₁∧η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluckerFrame {
    pub u: [f64; 6],
    pub a: [f64; 6],
    pub p: [f64; 6],
    pub v: [f64; 6],
    pub b: [f64; 6],
    pub q: [f64; 6],
}

impl PluckerFrame {
    pub fn from_frame(f: &ProjectiveFrame) -> Self {
        let [u, a, p, v, b, q] = Self::bilinear(&f.m, &f.m);
        PluckerFrame { u, a, p, v, b, q }
    }

    /// Members with the first factor of every wedge taken from `s` and the
    /// second from `t`.
    pub fn bilinear(s: &Matrix4<f64>, t: &Matrix4<f64>) -> [[f64; 6]; 6] {
        let row = |m: &Matrix4<f64>, i: usize| -> [f64; 4] { std::array::from_fn(|j| m[(i, j)]) };
        let w = |i: usize, j: usize| wedge_plucker(&row(s, i), &row(t, j));
        let re = w(0, 3);
        [w(0, 1), add6(w(2, 1), re), scale6(w(2, 3), 2.0), w(0, 2), add6(w(1, 2), re), scale6(w(1, 3), 2.0)]
    }

    /// Members in the order `𝒰, 𝒜, 𝒫, 𝒱, ℬ, 𝒬`.
    pub fn members(&self) -> [[f64; 6]; 6] {
        [self.u, self.a, self.p, self.v, self.b, self.q]
    }

    /// Expected product of members `i` and `j`.
    pub fn table_entry(i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 2) | (4, 4) => -1.0,
            (1, 1) | (3, 5) => 1.0,
            _ => 0.0,
        }
    }

    /// Matrix of all 36 products.
    pub fn products(&self) -> [[f64; 6]; 6] {
        let m = self.members();
        std::array::from_fn(|i| std::array::from_fn(|j| plucker_product(&m[i], &m[j])))
    }

    pub fn table_residual(&self) -> f64 {
        let g = self.products();
        let mut worst = 0.0f64;
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                worst = worst.max((v - Self::table_entry(i, j)).abs());
            }
        }
        worst
    }
}

/// Real 6×6 matrices of the equations for `(𝒰, 𝒜, 𝒫, 𝒱, ℬ, 𝒬)`.
pub fn uapvbq_matrices(c: &ProjCoeffs) -> (Matrix6<f64>, Matrix6<f64>) {
    let (be, ga, k, l, a, b) = (c.beta, c.gamma, c.k, c.l, c.a, c.b);
    let (lb, lg) = (c.dlnb_y, c.dlng_x);
    #[rustfmt::skip]
    let n1 = Matrix6::new(
        0.0, 0.0, 0.0, be, 0.0, 0.0,
        k, 0.0, 0.0, 0.0, 0.0, 0.0,
        0.0, k, 0.0, -be * a, 0.0, 0.0,
        0.0, 0.0, 0.0, lg, 1.0, 0.0,
        0.0, 0.0, 0.0, b, 0.0, 1.0,
        -be * a, 0.0, be, 0.0, b, -lg,
    );
    #[rustfmt::skip]
    let n2 = Matrix6::new(
        lb, 1.0, 0.0, 0.0, 0.0, 0.0,
        a, 0.0, 1.0, 0.0, 0.0, 0.0,
        0.0, a, -lb, -ga * b, 0.0, ga,
        ga, 0.0, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, l, 0.0, 0.0,
        -ga * b, 0.0, 0.0, 0.0, l, 0.0,
    );
    (n1, n2)
}

/// Coordinate grids of each member: `out[member][coordinate]`.
struct MemberGrids(Vec<[Grid2<f64>; 6]>);

impl MemberGrids {
    fn new(grid: &ProjectiveFrameGrid) -> Self {
        let frames: Vec<[[f64; 6]; 6]> = grid.frames.iter().map(|f| PluckerFrame::from_frame(f).members()).collect();
        MemberGrids(
            (0..6)
                .map(|m| {
                    std::array::from_fn(|c| Grid2 {
                        ax1: grid.ax1,
                        ax2: grid.ax2,
                        data: frames.iter().map(|f| f[m][c]).collect(),
                    })
                })
                .collect(),
        )
    }

    fn get(&self, m: usize, i: usize, j: usize) -> [f64; 6] {
        std::array::from_fn(|c| self.0[m][c].get(i, j))
    }

    fn deriv(&self, m: usize, i: usize, j: usize, o1: usize, o2: usize) -> Result<[f64; 6]> {
        let mut out = [0.0; 6];
        for (c, g) in self.0[m].iter().enumerate() {
            out[c] = g.deriv(i, j, o1, o2)?;
        }
        Ok(out)
    }
}

fn interior_nodes(grid: &ProjectiveFrameGrid) -> Result<Vec<(usize, usize)>> {
    if grid.ax1.n < 5 || grid.ax2.n < 5 {
        let (r1, r2) = grid.frames[0].point;
        return Err(Error::StencilOutOfDomain { r1, r2 });
    }
    Ok((2..grid.ax1.n - 2).flat_map(|i| (2..grid.ax2.n - 2).map(move |j| (i, j))).collect())
}

fn max_abs6(v: [f64; 6]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Max-norm residual of the Plücker frame equations on interior nodes, with
/// fourth-order finite differences.
pub fn uapvbq_residual(pot: &ProjectivePotentials, grid: &ProjectiveFrameGrid) -> Result<f64> {
    let comps = MemberGrids::new(grid);
    let nodes = interior_nodes(grid)?;
    let worst = nodes
        .par_iter()
        .map(|&(i, j)| -> Result<f64> {
            let (x, y) = (grid.ax1.at(i), grid.ax2.at(j));
            let (n1, n2) = uapvbq_matrices(&proj_coeffs(pot, x, y)?);
            let members: Vec<[f64; 6]> = (0..6).map(|m| comps.get(m, i, j)).collect();
            let combine = |n: &Matrix6<f64>, row: usize| -> [f64; 6] {
                let mut acc = [0.0; 6];
                for (c, m) in members.iter().enumerate() {
                    acc = add6(acc, scale6(*m, n[(row, c)]));
                }
                acc
            };
            let mut worst = 0.0f64;
            for c in 0..6 {
                let dx = comps.deriv(c, i, j, 1, 0)?;
                let dy = comps.deriv(c, i, j, 0, 1)?;
                let rx = add6(dx, scale6(combine(&n1, c), -1.0));
                let ry = add6(dy, scale6(combine(&n2, c), -1.0));
                worst = worst.max(max_abs6(rx)).max(max_abs6(ry));
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

/// Residual of the Plücker frame equations with member derivatives taken
/// exactly from the tetrahedron connection at each frame.
pub fn uapvbq_residual_exact(pot: &ProjectivePotentials, frames: &[ProjectiveFrame]) -> Result<f64> {
    let worst = frames
        .par_iter()
        .map(|f| -> Result<f64> {
            let (x, y) = f.point;
            let c = proj_coeffs(pot, x, y)?;
            let (m1, m2) = proj_frame_matrices(&c);
            let (n1, n2) = uapvbq_matrices(&c);
            let members = PluckerFrame::from_frame(f).members();
            let mut worst = 0.0f64;
            for (m, n) in [(m1, n1), (m2, n2)] {
                // members are bilinear in the rows of T, so d(members) = B(MT, T) + B(T, MT)
                let mt = m * f.m;
                let (d1, d2) = (PluckerFrame::bilinear(&mt, &f.m), PluckerFrame::bilinear(&f.m, &mt));
                let d: [[f64; 6]; 6] = std::array::from_fn(|i| add6(d1[i], d2[i]));
                for (row, dm) in d.iter().enumerate() {
                    let mut acc = *dm;
                    for (col, mc) in members.iter().enumerate() {
                        acc = add6(acc, scale6(*mc, -n[(row, col)]));
                    }
                    worst = worst.max(max_abs6(acc));
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

/// Largest deviation from the product table over all tetrahedra of the grid.
pub fn table_residual(grid: &ProjectiveFrameGrid) -> f64 {
    grid.frames.iter().map(|f| PluckerFrame::from_frame(f).table_residual()).fold(0.0, f64::max)
}

/// Max-norm residuals of `𝒰_x − β𝒱` and `𝒱_y − γ𝒰` on interior nodes.
pub fn laplace_residuals(pot: &ProjectivePotentials, grid: &ProjectiveFrameGrid) -> Result<(f64, f64)> {
    let comps = MemberGrids::new(grid);
    let nodes = interior_nodes(grid)?;
    let r = nodes
        .par_iter()
        .map(|&(i, j)| -> Result<(f64, f64)> {
            let (x, y) = (grid.ax1.at(i), grid.ax2.at(j));
            let [beta, gamma, _, _] = pot.values(x, y)?;
            let ru = add6(comps.deriv(0, i, j, 1, 0)?, scale6(comps.get(3, i, j), -beta));
            let rv = add6(comps.deriv(3, i, j, 0, 1)?, scale6(comps.get(0, i, j), -gamma));
            Ok((max_abs6(ru), max_abs6(rv)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(r.into_iter().fold((0.0, 0.0), |(a, b), (c, d)| (a.max(c), b.max(d))))
}

/// `[1234][1256] / ([1235][1246])` for six points of RP³: unchanged by any
/// linear map and by rescaling each point.
pub fn projective_invariant(pts: &[[f64; 4]; 6]) -> f64 {
    let det = |a: usize, b: usize, c: usize, d: usize| {
        Matrix4::from_fn(|i, j| [pts[a], pts[b], pts[c], pts[d]][i][j]).determinant()
    };
    det(0, 1, 2, 3) * det(0, 1, 4, 5) / (det(0, 1, 2, 4) * det(0, 1, 3, 5))
}
