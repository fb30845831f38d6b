//! The null tetrad `(ψ, ψ₁, ψ₂, η)`, its connection, integration over the
//! parameter rectangle, and the induced 6-frame in Λ²(C⁴).
//!
//! A [`FrameState`] stores the tetrad as the rows of a 4×4 matrix `F`, so the
//! frame equations read `∂ᵢF = MᵢF`. The normalization is
//! `(ψ₁, ψ₂) = 1`, `(ψ, η) = −1`, all other products zero, and `det F = 1`.

use nalgebra::{Matrix4, Matrix6};
use rayon::prelude::*;

use crate::algebra::{complex_product6, herm_product6, null_tetrad_gram, wedge_to_hex, Bivector6, TwistorVector, C64};
use crate::error::{Error, Result};
use crate::grid::{Axis, Grid2, Rect};
use crate::potentials::{derived_coeffs, DerivedCoeffs, PotentialField};

/// Default RK4 step.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Allowed drift of the Gram matrix and determinant per unit path length.
pub const TOL_DRIFT: f64 = 1e-8;

const I: C64 = C64::new(0.0, 1.0);

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Coefficient matrices of `∂₁F = M₁F`, `∂₂F = M₂F` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionPair {
    pub m1: Matrix4<C64>,
    pub m2: Matrix4<C64>,
}

impl ConnectionPair {
    pub fn from_coeffs(d: &DerivedCoeffs, canal: bool) -> Self {
        let (p, q, k, a, b) = (d.p, d.q, d.k, d.a, d.b);
        let hp = 0.5 * d.dlnp2;
        let z = C64::new(0.0, 0.0);
        if canal {
            #[rustfmt::skip]
            let m1 = Matrix4::new(
                z, re(1.0), z, z,
                re(0.5 * b), z, -I * p, z,
                re(0.5 * k), z, z, re(1.0),
                -I * (0.5 * p * a), re(0.5 * k), re(0.5 * b), z,
            );
            #[rustfmt::skip]
            let m2 = Matrix4::new(
                re(hp), z, re(1.0), z,
                z, re(hp), z, re(1.0),
                re(0.5 * a), z, re(-hp), z,
                z, re(0.5 * a), z, re(-hp),
            );
            return ConnectionPair { m1, m2 };
        }
        let hq = 0.5 * d.dlnq1;
        let l = d.l.expect("non-canal coefficients carry l");
        #[rustfmt::skip]
        let m1 = Matrix4::new(
            re(hq), re(1.0), z, z,
            re(0.5 * b), re(-hq), -I * p, z,
            re(0.5 * k), z, re(hq), re(1.0),
            -I * (0.5 * p * a), re(0.5 * k), re(0.5 * b), re(-hq),
        );
        #[rustfmt::skip]
        let m2 = Matrix4::new(
            re(hp), z, re(1.0), z,
            re(0.5 * l), re(hp), z, re(1.0),
            re(0.5 * a), I * q, re(-hp), z,
            I * (0.5 * q * b), re(0.5 * a), re(0.5 * l), re(-hp),
        );
        ConnectionPair { m1, m2 }
    }

    /// `max(|tr M₁|, |tr M₂|)`.
    pub fn trace_defect(&self) -> f64 {
        self.m1.trace().norm().max(self.m2.trace().norm())
    }

    /// Max-norm of `J M + M* J` over both matrices; zero for infinitesimal isometries.
    pub fn isometry_defect(&self) -> f64 {
        let j = null_tetrad_gram();
        let d = |m: &Matrix4<C64>| (j * m + m.adjoint() * j).iter().map(|z| z.norm()).fold(0.0, f64::max);
        d(&self.m1).max(d(&self.m2))
    }
}

pub fn connection_matrices(field: &PotentialField, r1: f64, r2: f64) -> Result<ConnectionPair> {
    let d = derived_coeffs(field, r1, r2)?;
    Ok(ConnectionPair::from_coeffs(&d, field.is_canal()))
}

/// The standard basis `(e₀, e₁, e₂, e₃)`, which realizes the normalization exactly.
pub fn standard_null_tetrad() -> [TwistorVector; 4] {
    std::array::from_fn(TwistorVector::basis)
}

/// Null tetrad at a point, stored as matrix rows `ψ, ψ₁, ψ₂, η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameState {
    pub point: (f64, f64),
    pub m: Matrix4<C64>,
}

impl FrameState {
    pub fn standard(point: (f64, f64)) -> Self {
        FrameState { point, m: Matrix4::identity() }
    }

    pub fn from_rows(point: (f64, f64), rows: [TwistorVector; 4]) -> Self {
        FrameState { point, m: Matrix4::from_fn(|i, j| rows[i][j]) }
    }

    /// Caller-supplied initial frame; must preserve the Gram target and have unit determinant.
    pub fn with_matrix(point: (f64, f64), m: Matrix4<C64>) -> Result<Self> {
        let f = FrameState { point, m };
        let (g, d) = (f.gram_drift(), f.det_drift());
        if g > 1e-10 || d > 1e-10 {
            return Err(Error::InvalidFrame(format!("Gram defect {g:e}, determinant defect {d:e}")));
        }
        Ok(f)
    }

    pub fn row(&self, i: usize) -> TwistorVector {
        TwistorVector(std::array::from_fn(|j| self.m[(i, j)]))
    }

    pub fn psi(&self) -> TwistorVector {
        self.row(0)
    }

    pub fn psi1(&self) -> TwistorVector {
        self.row(1)
    }

    pub fn psi2(&self) -> TwistorVector {
        self.row(2)
    }

    pub fn eta(&self) -> TwistorVector {
        self.row(3)
    }

    /// Gram matrix `G[i][j] = (rowᵢ, rowⱼ)`.
    pub fn gram(&self) -> Matrix4<C64> {
        self.m * null_tetrad_gram() * self.m.adjoint()
    }

    pub fn det(&self) -> C64 {
        self.m.determinant()
    }

    pub fn gram_drift(&self) -> f64 {
        (self.gram() - null_tetrad_gram()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn det_drift(&self) -> f64 {
        (self.det() - 1.0).norm()
    }
}

/// Project an arbitrary complex matrix onto su(2, 2) for the form of this crate.
pub fn project_su22(x: &Matrix4<C64>) -> Matrix4<C64> {
    let j = null_tetrad_gram();
    let y = (x - j * x.adjoint() * j) * re(0.5);
    let t = y.trace() / 4.0;
    y - Matrix4::identity() * t
}

/// Group element `exp(X)` for `X` in su(2, 2); rows form a normalized tetrad.
pub fn su22_exp(x: &Matrix4<C64>) -> Matrix4<C64> {
    project_su22(x).exp()
}

fn rk4_segment(
    field: &PotentialField,
    mut f: Matrix4<C64>,
    from: (f64, f64),
    to: (f64, f64),
    h: f64,
) -> Result<Matrix4<C64>> {
    let (dx, dy) = (to.0 - from.0, to.1 - from.1);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return Ok(f);
    }
    let n = (len / h).ceil().max(1.0) as usize;
    let dt = 1.0 / n as f64;
    let gen = |t: f64| -> Result<Matrix4<C64>> {
        let (x, y) = (from.0 + t * dx, from.1 + t * dy);
        let c = connection_matrices(field, x, y)?;
        Ok(c.m1 * re(dx) + c.m2 * re(dy))
    };
    let mut a0 = gen(0.0)?;
    for s in 0..n {
        let t = s as f64 * dt;
        let am = gen(t + 0.5 * dt)?;
        let a1 = gen(if s + 1 == n { 1.0 } else { t + dt })?;
        let hh = re(dt);
        let k1 = a0 * f;
        let k2 = am * (f + k1 * (hh * 0.5));
        let k3 = am * (f + k2 * (hh * 0.5));
        let k4 = a1 * (f + k3 * hh);
        f += (k1 + k2 * re(2.0) + k3 * re(2.0) + k4) * (hh / 6.0);
        if !f.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::StepFailure { t: t + dt });
        }
        a0 = a1;
    }
    Ok(f)
}

/// Integrate the frame equations along a polyline starting at `init.point`
/// with classical RK4 of step at most `h`.
pub fn integrate_frame(field: &PotentialField, init: &FrameState, path: &[(f64, f64)], h: f64) -> Result<FrameState> {
    let mut f = init.m;
    let mut at = init.point;
    for &next in path {
        field.domain().check(next.0, next.1)?;
        f = rk4_segment(field, f, at, next, h)?;
        at = next;
    }
    Ok(FrameState { point: at, m: f })
}

/// Integration result with a Richardson error estimate from one step halving.
#[derive(Debug, Clone, Copy)]
pub struct IntegrationReport {
    pub frame: FrameState,
    pub error_estimate: f64,
}

pub fn integrate_frame_with_estimate(
    field: &PotentialField,
    init: &FrameState,
    path: &[(f64, f64)],
    h: f64,
) -> Result<IntegrationReport> {
    let coarse = integrate_frame(field, init, path, h)?;
    let fine = integrate_frame(field, init, path, 0.5 * h)?;
    let diff = (fine.m - coarse.m).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(IntegrationReport { frame: fine, error_estimate: diff / 15.0 })
}

/// Integrate around the boundary of `rect` from its lower-left corner and
/// return the max-norm of the change of the frame matrix.
pub fn holonomy_defect(field: &PotentialField, rect: Rect, init: &Matrix4<C64>, h: f64) -> Result<f64> {
    let (a, b) = rect.r1;
    let (c, d) = rect.r2;
    let start = FrameState { point: (a, c), m: *init };
    field.domain().check(a, c)?;
    let end = integrate_frame(field, &start, &[(b, c), (b, d), (a, d), (a, c)], h)?;
    Ok((end.m - init).iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Frames on a tensor grid, stored with the `R²` index fastest.
#[derive(Debug, Clone)]
pub struct FrameGrid {
    pub ax1: Axis,
    pub ax2: Axis,
    pub frames: Vec<FrameState>,
}

impl FrameGrid {
    pub fn get(&self, i: usize, j: usize) -> &FrameState {
        &self.frames[i * self.ax2.n + j]
    }

    pub fn map<T: crate::grid::Sample>(&self, f: impl Fn(&FrameState) -> T) -> Grid2<T> {
        Grid2 { ax1: self.ax1, ax2: self.ax2, data: self.frames.iter().map(f).collect() }
    }
}

fn integrate_line(
    field: &PotentialField,
    start: FrameState,
    points: &[(f64, f64)],
    h: f64,
) -> Result<Vec<FrameState>> {
    let mut out = Vec::with_capacity(points.len());
    let mut cur = start;
    for &pt in points {
        cur = integrate_frame(field, &cur, &[pt], h)?;
        out.push(cur);
    }
    Ok(out)
}

/// Integrate the frame to every node of `ax1 × ax2`: first along the row
/// through the base node, then along every column. Columns run in parallel;
/// the result does not depend on scheduling.
pub fn integrate_grid(
    field: &PotentialField,
    ax1: Axis,
    ax2: Axis,
    base: (usize, usize),
    init: &Matrix4<C64>,
    h: f64,
) -> Result<FrameGrid> {
    let (ib, jb) = base;
    let y0 = ax2.at(jb);
    let x0 = ax1.at(ib);
    field.domain().check(x0, y0)?;
    let start = FrameState { point: (x0, y0), m: *init };
    let right: Vec<_> = (ib + 1..ax1.n).map(|i| (ax1.at(i), y0)).collect();
    let left: Vec<_> = (0..ib).rev().map(|i| (ax1.at(i), y0)).collect();
    let mut row = vec![start; ax1.n];
    for (k, f) in integrate_line(field, start, &right, h)?.into_iter().enumerate() {
        row[ib + 1 + k] = f;
    }
    for (k, f) in integrate_line(field, start, &left, h)?.into_iter().enumerate() {
        row[ib - 1 - k] = f;
    }
    let columns: Vec<Vec<FrameState>> = row
        .par_iter()
        .enumerate()
        .map(|(i, &s)| -> Result<Vec<FrameState>> {
            let x = ax1.at(i);
            let up: Vec<_> = (jb + 1..ax2.n).map(|j| (x, ax2.at(j))).collect();
            let down: Vec<_> = (0..jb).rev().map(|j| (x, ax2.at(j))).collect();
            let mut col = vec![s; ax2.n];
            for (k, f) in integrate_line(field, s, &up, h)?.into_iter().enumerate() {
                col[jb + 1 + k] = f;
            }
            for (k, f) in integrate_line(field, s, &down, h)?.into_iter().enumerate() {
                col[jb - 1 - k] = f;
            }
            Ok(col)
        })
        .collect::<Result<_>>()?;
    Ok(FrameGrid { ax1, ax2, frames: columns.into_iter().flatten().collect() })
}

/// The six bivectors `𝒰, 𝒜, 𝒫, 𝒱, ℬ, 𝒬` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LieFrame6 {
    pub point: (f64, f64),
    pub u: Bivector6,
    pub a: Bivector6,
    pub p: Bivector6,
    pub v: Bivector6,
    pub b: Bivector6,
    pub q: Bivector6,
}

impl LieFrame6 {
    /// Members in the order `𝒰, 𝒜, 𝒫, 𝒱, ℬ, 𝒬`.
    pub fn members(&self) -> [Bivector6; 6] {
        [self.u, self.a, self.p, self.v, self.b, self.q]
    }

    /// Expected value of both products between members `i` and `j`.
    pub fn table_entry(i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 2) | (3, 5) => -1.0,
            (1, 1) | (4, 4) => 1.0,
            _ => 0.0,
        }
    }

    /// Largest deviation of the pseudo-Hermitian and complex product tables
    /// from `(𝒰,𝒫) = (𝒱,𝒬) = −1`, `(𝒜,𝒜) = (ℬ,ℬ) = 1`, others zero.
    pub fn table_residual(&self) -> f64 {
        let m = self.members();
        let mut worst = 0.0f64;
        for i in 0..6 {
            for j in 0..6 {
                let t = Self::table_entry(i, j);
                worst = worst.max((herm_product6(&m[i], &m[j]) - t).norm());
                worst = worst.max((complex_product6(&m[i], &m[j]) - t).norm());
            }
        }
        worst
    }
}

/// `𝒰 = iψ∧ψ₁`, `𝒱 = ψ∧ψ₂`, `𝒜 = iψ₂∧ψ₁ + iψ∧η`, `ℬ = ψ₁∧ψ₂ + ψ∧η`,
/// `𝒫 = 2iψ₂∧η`, `𝒬 = 2ψ₁∧η`.
pub fn frame_to_lie6(f: &FrameState) -> LieFrame6 {
    let (psi, psi1, psi2, eta) = (f.psi(), f.psi1(), f.psi2(), f.eta());
    let w = wedge_to_hex;
    let pe = w(&psi, &eta);
    LieFrame6 {
        point: f.point,
        u: w(&psi, &psi1) * I,
        v: w(&psi, &psi2),
        a: (w(&psi2, &psi1) + pe) * I,
        b: w(&psi1, &psi2) + pe,
        p: w(&psi2, &eta) * (I * 2.0),
        q: w(&psi1, &eta) * 2.0,
    }
}

/// Real 6×6 coefficient matrices of `∂ᵢ(𝒰, 𝒜, 𝒫, 𝒱, ℬ, 𝒬)ᵀ = Nᵢ (𝒰, …, 𝒬)ᵀ`.
pub fn lie6_matrices(d: &DerivedCoeffs, canal: bool) -> (Matrix6<f64>, Matrix6<f64>) {
    let (p, q, k, a, b) = (d.p, d.q, d.k, d.a, d.b);
    let (lp, lq) = (d.dlnp2, d.dlnq1);
    if canal {
        #[rustfmt::skip]
        let n1 = Matrix6::new(
            0.0, 0.0, 0.0, p, 0.0, 0.0,
            k, 0.0, 0.0, 0.0, 0.0, 0.0,
            0.0, k, 0.0, -p * a, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, b, 0.0, 1.0,
            p * a, 0.0, -p, 0.0, b, 0.0,
        );
        #[rustfmt::skip]
        let n2 = Matrix6::new(
            lp, 1.0, 0.0, 0.0, 0.0, 0.0,
            a, 0.0, 1.0, 0.0, 0.0, 0.0,
            0.0, a, -lp, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        );
        return (n1, n2);
    }
    let l = d.l.expect("non-canal coefficients carry l");
    #[rustfmt::skip]
    let n1 = Matrix6::new(
        0.0, 0.0, 0.0, p, 0.0, 0.0,
        k, 0.0, 0.0, 0.0, 0.0, 0.0,
        0.0, k, 0.0, -p * a, 0.0, 0.0,
        0.0, 0.0, 0.0, lq, 1.0, 0.0,
        0.0, 0.0, 0.0, b, 0.0, 1.0,
        p * a, 0.0, -p, 0.0, b, -lq,
    );
    #[rustfmt::skip]
    let n2 = Matrix6::new(
        lp, 1.0, 0.0, 0.0, 0.0, 0.0,
        a, 0.0, 1.0, 0.0, 0.0, 0.0,
        0.0, a, -lp, q * b, 0.0, -q,
        q, 0.0, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, l, 0.0, 0.0,
        -q * b, 0.0, 0.0, 0.0, l, 0.0,
    );
    (n1, n2)
}

fn combine(n: &Matrix6<f64>, row: usize, members: &[Bivector6; 6]) -> Bivector6 {
    let mut acc = Bivector6::ZERO;
    for (c, m) in members.iter().enumerate() {
        let w = n[(row, c)];
        if w != 0.0 {
            acc += *m * w;
        }
    }
    acc
}

/// Max-norm residual of the 6-frame equations on interior grid nodes, with
/// fourth-order finite-difference derivatives of the frame members.
pub fn lie6_residual(field: &PotentialField, grid: &FrameGrid) -> Result<f64> {
    let lie: Vec<LieFrame6> = grid.frames.iter().map(frame_to_lie6).collect();
    let comps: Vec<Grid2<Bivector6>> = (0..6)
        .map(|c| Grid2 { ax1: grid.ax1, ax2: grid.ax2, data: lie.iter().map(|l| l.members()[c]).collect() })
        .collect();
    let nodes: Vec<(usize, usize)> = comps[0].interior(2).collect();
    if nodes.is_empty() {
        let (r1, r2) = grid.frames[0].point;
        return Err(Error::StencilOutOfDomain { r1, r2 });
    }
    let worst = nodes
        .par_iter()
        .map(|&(i, j)| -> Result<f64> {
            let (x, y) = comps[0].point(i, j);
            let d = derived_coeffs(field, x, y)?;
            let (n1, n2) = lie6_matrices(&d, field.is_canal());
            let members = lie[i * grid.ax2.n + j].members();
            let mut worst = 0.0f64;
            for (c, g) in comps.iter().enumerate() {
                let r1 = g.deriv(i, j, 1, 0)? - combine(&n1, c, &members);
                let r2 = g.deriv(i, j, 0, 1)? - combine(&n2, c, &members);
                worst = worst.max(r1.norm_max()).max(r2.norm_max());
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}
