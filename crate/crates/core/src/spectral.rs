//! Commuting Schrödinger operators attached to the `c = 0`, `c = 1` and
//! Landau families, and the Landau-level canal surfaces of revolution.
//!
//! Every operator is stored through its coefficients
//! `a₁₁∂₁² + a₂₂∂₂² + b₁∂₁ + b₂∂₂ + c` in the `(R¹, R²)` chart and applied to
//! grid samples with fourth-order central differences. For the Landau
//! operator `R¹ = y` and `R² = x`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{det4, herm_product4, lie_product, wedge_to_hex, Bivector6, TwistorVector, C64};
use crate::error::{Error, Result};
use crate::frame::{FrameGrid, FrameState};
use crate::grid::{Axis, Grid2, Rect};
use crate::jet::Jet;
use crate::potentials::{c0_profiles, make_c1_family, poly_eval, poly_jet, C0Params, C1Params, CanalParams};

/// Default finite-difference spacing for operator application.
pub const DEFAULT_SPACING: f64 = 1e-2;

/// Default tolerance for eigen-residuals and commutators.
pub const TOL_OPERATOR: f64 = 1e-4;

/// Profile values beyond this magnitude are treated as poles.
pub const POLE_THRESHOLD: f64 = 1e8;

/// Landau basis solutions beyond this magnitude abort the integration.
pub const LANDAU_BLOWUP: f64 = 1e12;

const LANDAU_STEP: f64 = 1e-3;

const I: C64 = C64::new(0.0, 1.0);

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Coefficients of `a₁₁∂₁² + a₂₂∂₂² + b₁∂₁ + b₂∂₂ + c` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OperatorCoeffs {
    pub a11: C64,
    pub a22: C64,
    pub b1: C64,
    pub b2: C64,
    pub c: C64,
}

impl OperatorCoeffs {
    pub fn scale(&self, s: C64) -> Self {
        OperatorCoeffs { a11: self.a11 * s, a22: self.a22 * s, b1: self.b1 * s, b2: self.b2 * s, c: self.c * s }
    }

    pub fn add(&self, o: &OperatorCoeffs) -> Self {
        OperatorCoeffs {
            a11: self.a11 + o.a11,
            a22: self.a22 + o.a22,
            b1: self.b1 + o.b1,
            b2: self.b2 + o.b2,
            c: self.c + o.c,
        }
    }

    pub fn max_diff(&self, o: &OperatorCoeffs) -> f64 {
        [self.a11 - o.a11, self.a22 - o.a22, self.b1 - o.b1, self.b2 - o.b2, self.c - o.c]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

type CoeffFn = dyn Fn(f64, f64) -> Result<OperatorCoeffs> + Send + Sync;

/// A second-order operator with magnetic terms, together with the eigenvalue
/// it takes on the frame solutions of its family.
#[derive(Clone)]
pub struct MagneticOperator {
    name: String,
    coeffs: Arc<CoeffFn>,
    pub eigenvalue: f64,
}

impl fmt::Debug for MagneticOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MagneticOperator").field("name", &self.name).field("eigenvalue", &self.eigenvalue).finish()
    }
}

impl MagneticOperator {
    pub fn new(
        name: impl Into<String>,
        eigenvalue: f64,
        coeffs: impl Fn(f64, f64) -> Result<OperatorCoeffs> + Send + Sync + 'static,
    ) -> Self {
        MagneticOperator { name: name.into(), coeffs: Arc::new(coeffs), eigenvalue }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coeffs(&self, r1: f64, r2: f64) -> Result<OperatorCoeffs> {
        (self.coeffs)(r1, r2)
    }

    /// `Lu` at node `(i, j)`.
    pub fn apply_at(&self, u: &Grid2<C64>, i: usize, j: usize) -> Result<C64> {
        let (x, y) = u.point(i, j);
        let c = self.coeffs(x, y)?;
        Ok(c.a11 * u.deriv(i, j, 2, 0)?
            + c.a22 * u.deriv(i, j, 0, 2)?
            + c.b1 * u.deriv(i, j, 1, 0)?
            + c.b2 * u.deriv(i, j, 0, 1)?
            + c.c * u.get(i, j))
    }

    /// `Lu` on the grid shrunk by the stencil half-width.
    pub fn apply(&self, u: &Grid2<C64>) -> Result<Grid2<C64>> {
        let (n1, n2) = u.shape();
        if n1 < 5 || n2 < 5 {
            let (r1, r2) = u.point(0, 0);
            return Err(Error::StencilOutOfDomain { r1, r2 });
        }
        let nodes: Vec<(usize, usize)> = u.interior(2).collect();
        let data = nodes.par_iter().map(|&(i, j)| self.apply_at(u, i, j)).collect::<Result<Vec<_>>>()?;
        Ok(Grid2 { ax1: u.ax1.shrink(2), ax2: u.ax2.shrink(2), data })
    }

    /// `max |Lu − eigenvalue·u|` over the interior nodes.
    pub fn eigen_residual(&self, u: &Grid2<C64>) -> Result<f64> {
        let lu = self.apply(u)?;
        let inner = u.shrink(2);
        Ok(lu.data.iter().zip(&inner.data).map(|(a, b)| (a - b * self.eigenvalue).norm()).fold(0.0, f64::max))
    }
}

/// `max |L₁(L₂u) − L₂(L₁u)|` with nested finite differences.
pub fn commutator_residual(l1: &MagneticOperator, l2: &MagneticOperator, u: &Grid2<C64>) -> Result<f64> {
    let a = l1.apply(&l2.apply(u)?)?;
    let b = l2.apply(&l1.apply(u)?)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
}

/// Worst commutator residual over a set of test functions.
pub fn max_commutator(l1: &MagneticOperator, l2: &MagneticOperator, tests: &[Grid2<C64>]) -> Result<f64> {
    tests.iter().map(|u| commutator_residual(l1, l2, u)).try_fold(0.0, |acc, r| Ok(f64::max(acc, r?)))
}

/// `n` smooth complex test functions on `ax1 × ax2`: Gaussian bumps of width
/// a fifth of the shorter side, centered along a golden-ratio sequence in the
/// middle half of the rectangle, each carrying a plane-wave phase.
pub fn bump_functions(n: usize, ax1: Axis, ax2: Axis) -> Vec<Grid2<C64>> {
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (w1, w2) = (ax1.end - ax1.start, ax2.end - ax2.start);
    let sigma = 0.2 * w1.min(w2);
    (0..n)
        .map(|m| {
            let s = (m + 1) as f64;
            let (t1, t2) = ((s * golden).fract(), (s * golden * golden).fract());
            let c1 = ax1.start + w1 * (0.25 + 0.5 * t1);
            let c2 = ax2.start + w2 * (0.25 + 0.5 * t2);
            let (k1, k2) = (1.0 + 2.0 * t2, 2.0 - 3.0 * t1);
            Grid2::from_fn(ax1, ax2, |x, y| {
                let r2 = ((x - c1).powi(2) + (y - c2).powi(2)) / (sigma * sigma);
                C64::from_polar((-0.5 * r2).exp(), k1 * (x - c1) + k2 * (y - c2))
            })
        })
        .collect()
}

/// The four components of `ψ`, the first row of every frame on the grid.
pub fn frame_solution_components(grid: &FrameGrid) -> [Grid2<C64>; 4] {
    std::array::from_fn(|c| grid.map(|f| f.m[(0, c)]))
}

/// The pair of commuting operators of a family and their eigenvalues.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    pub h: MagneticOperator,
    pub f: MagneticOperator,
}

impl OperatorPair {
    /// Largest eigen-residual of both operators over the given solutions.
    pub fn eigen_residual(&self, solutions: &[Grid2<C64>]) -> Result<f64> {
        let mut worst = 0.0f64;
        for u in solutions {
            worst = worst.max(self.h.eigen_residual(u)?).max(self.f.eigen_residual(u)?);
        }
        Ok(worst)
    }

    pub fn commutator(&self, tests: &[Grid2<C64>]) -> Result<f64> {
        max_commutator(&self.h, &self.f, tests)
    }
}

/// `H = (∂₁ + (i/2)ψ₂′)² + (∂₂ + (i/2)ψ₁′)² + V_H` and
/// `F = (∂₁ − (i/2)ψ₂′)² − (∂₂ − (i/2)ψ₁′)² + V_F` with eigenvalues
/// `λ = (ε₁+ε₂)/2` and `μ = (ε₁−ε₂)/2`.
pub fn c0_operators(params: &C0Params, domain: Rect) -> Result<OperatorPair> {
    let prof = Arc::new(c0_profiles(params, domain)?);
    let [e0, e1, e2] = params.eps;
    let [rho1, rho2] = params.rho;
    let profile_values = {
        let prof = prof.clone();
        move |r1: f64, r2: f64| -> Result<([f64; 3], [f64; 3])> {
            domain.check(r1, r2)?;
            let a = prof.psi1.derivs(r1, 2)?;
            let b = prof.psi2.derivs(r2, 2)?;
            Ok(([a[0], a[1], a[2]], [b[0], b[1], b[2]]))
        }
    };
    let pv = profile_values.clone();
    let h = MagneticOperator::new("c0-H", 0.5 * (e1 + e2), move |r1, r2| {
        let ([u, u1, u11], [v, v1, v11]) = pv(r1, r2)?;
        let vh = 0.25
            * (2.0 * v * u11 + 2.0 * u * v11 + rho2 * u * u + rho1 * v * v + v1 * v1 + u1 * u1
                - 2.0 * e0 * (u + v));
        // (∂ + iφ)² = ∂² + 2iφ∂ − φ² when φ does not depend on that variable
        Ok(OperatorCoeffs {
            a11: re(1.0),
            a22: re(1.0),
            b1: I * v1,
            b2: I * u1,
            c: re(vh - 0.25 * (v1 * v1 + u1 * u1)),
        })
    });
    let f = MagneticOperator::new("c0-F", 0.5 * (e1 - e2), move |r1, r2| {
        let ([u, u1, u11], [v, v1, v11]) = profile_values(r1, r2)?;
        let vf = 0.25
            * (2.0 * v * u11 - 2.0 * u * v11 + rho2 * u * u - rho1 * v * v + v1 * v1 - u1 * u1
                - 2.0 * e0 * (u - v));
        Ok(OperatorCoeffs {
            a11: re(1.0),
            a22: re(-1.0),
            b1: -I * v1,
            b2: I * u1,
            c: re(vf - 0.25 * v1 * v1 + 0.25 * u1 * u1),
        })
    });
    Ok(OperatorPair { h, f })
}

/// Pointwise data of the `c = 1` family: the Stäckel metric `g¹¹, g²²`, the
/// magnetic potential `A, B` and the scalar potential `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C1Geometry {
    pub g11: f64,
    pub g22: f64,
    pub a: f64,
    pub b: f64,
    pub h: f64,
}

struct C1Jets {
    f1: Jet,
    f2: Jet,
    d: Jet,
}

fn c1_jets(params: &C1Params, r1: f64, r2: f64, order: usize) -> C1Jets {
    let x = Jet::var1(r1, order);
    let y = Jet::var2(r2, order);
    C1Jets { f1: poly_jet(&params.f1, &x), f2: poly_jet(&params.f2, &y), d: &y - &x }
}

/// Jets of the magnetic potential `A = −√(f₂/f₁)/(2D)`, `B = −√(f₁/f₂)/(2D)`, `D = R²−R¹`.
fn magnetic_potential_jets(j: &C1Jets) -> (Jet, Jet) {
    let half_inv = j.d.recip() * -0.5;
    let a = &half_inv * (&j.f2 / &j.f1).sqrt();
    let b = &half_inv * (&j.f1 / &j.f2).sqrt();
    (a, b)
}

fn check_positive(params: &C1Params, r1: f64, r2: f64) -> Result<()> {
    let (f1, f2) = (poly_eval(&params.f1, r1), poly_eval(&params.f2, r2));
    if !(f1 > 0.0 && f2 > 0.0 && r2 > r1) {
        return Err(Error::DomainViolation(format!("f1 = {f1}, f2 = {f2}, R² − R¹ = {} at ({r1}, {r2})", r2 - r1)));
    }
    Ok(())
}

/// `h = (f₁′−f₂′)/(4D²) + (f₁+f₂)/(2D³) + (ε₂/2)(R¹+R²)`.
pub fn c1_scalar_potential(params: &C1Params, r1: f64, r2: f64) -> Result<f64> {
    check_positive(params, r1, r2)?;
    let j = c1_jets(params, r1, r2, 1);
    let d = r2 - r1;
    let (f1, f2) = (j.f1.value(), j.f2.value());
    let (df1, df2) = (j.f1.d(1, 0), j.f2.d(0, 1));
    Ok((df1 - df2) / (4.0 * d * d) + (f1 + f2) / (2.0 * d * d * d) + 0.5 * params.eps[2] * (r1 + r2))
}

pub fn c1_geometry(params: &C1Params, r1: f64, r2: f64) -> Result<C1Geometry> {
    check_positive(params, r1, r2)?;
    let j = c1_jets(params, r1, r2, 0);
    let (a, b) = magnetic_potential_jets(&j);
    let d = r2 - r1;
    Ok(C1Geometry {
        g11: j.f1.value() / d,
        g22: j.f2.value() / d,
        a: a.value(),
        b: b.value(),
        h: c1_scalar_potential(params, r1, r2)?,
    })
}

/// `H = s(i∂₁ + A)(g¹¹/s)(i∂₁ + A) + s(i∂₂ + B)(g²²/s)(i∂₂ + B) + h` with
/// `s = √(g¹¹g²²)`, expanded into coefficients.
fn laplace_coeffs(params: &C1Params, r1: f64, r2: f64) -> Result<OperatorCoeffs> {
    check_positive(params, r1, r2)?;
    let j = c1_jets(params, r1, r2, 1);
    let (a, b) = magnetic_potential_jets(&j);
    let d = r2 - r1;
    let (f1, f2) = (j.f1.value(), j.f2.value());
    let (g11, g22) = (f1 / d, f2 / d);
    let s = (f1 * f2).sqrt() / d;
    // ∂₁(g¹¹/s) and ∂₂(g²²/s), with g¹¹/s = √(f₁/f₂)
    let dc1 = j.f1.d(1, 0) / (2.0 * (f1 * f2).sqrt());
    let dc2 = j.f2.d(0, 1) / (2.0 * (f1 * f2).sqrt());
    let (av, bv) = (a.value(), b.value());
    let h = c1_scalar_potential(params, r1, r2)?;
    Ok(OperatorCoeffs {
        a11: re(-g11),
        a22: re(-g22),
        b1: re(-s * dc1) + I * (2.0 * g11 * av),
        b2: re(-s * dc2) + I * (2.0 * g22 * bv),
        c: I * (s * dc1 * av + g11 * a.d(1, 0) + s * dc2 * bv + g22 * b.d(0, 1))
            + re(g11 * av * av + g22 * bv * bv + h),
    })
}

/// The two separated equations for `R = ψ/(f₁f₂)^{1/4}`, without their
/// `ε` terms: `L₁R = −½(ε₀+ε₁R¹+ε₂(R¹)²)R` and `L₂R = ½(ε₀+ε₁R²+ε₂(R²)²)R`.
pub fn c1_separated_coeffs(params: &C1Params, r1: f64, r2: f64) -> Result<(OperatorCoeffs, OperatorCoeffs)> {
    check_positive(params, r1, r2)?;
    let j = c1_jets(params, r1, r2, 1);
    let d = r2 - r1;
    let (f1, f2) = (j.f1.value(), j.f2.value());
    let (df1, df2) = (j.f1.d(1, 0), j.f2.d(0, 1));
    let rt = (f1 * f2).sqrt();
    let l1 = OperatorCoeffs {
        a11: re(f1),
        a22: re(0.0),
        b1: re(0.5 * df1),
        b2: I * (rt / d),
        c: -(re(3.0 * f1 / (4.0 * d * d) + df1 / (4.0 * d)) - I * (0.5 * rt / (d * d))),
    };
    let l2 = OperatorCoeffs {
        a11: re(0.0),
        a22: re(f2),
        b1: I * (rt / d),
        b2: re(0.5 * df2),
        c: -(re(3.0 * f2 / (4.0 * d * d) - df2 / (4.0 * d)) + I * (0.5 * rt / (d * d))),
    };
    Ok((l1, l2))
}

/// Laplace–Beltrami form `H` with `HR = −(ε₁/2)R`, and
/// `F = (R²L₁ + R¹L₂)/(R²−R¹) − (ε₂/2)R¹R²` with `FR = −(ε₀/2)R`.
pub fn c1_operators(params: &C1Params, domain: Rect) -> Result<OperatorPair> {
    make_c1_family(params, domain)?;
    let [e0, e1, e2] = params.eps;
    let ph = params.clone();
    let h = MagneticOperator::new("c1-H", -0.5 * e1, move |r1, r2| {
        domain.check(r1, r2)?;
        laplace_coeffs(&ph, r1, r2)
    });
    let pf = params.clone();
    let f = MagneticOperator::new("c1-F", -0.5 * e0, move |r1, r2| {
        domain.check(r1, r2)?;
        let (l1, l2) = c1_separated_coeffs(&pf, r1, r2)?;
        let d = r2 - r1;
        let mut c = l1.scale(re(r2 / d)).add(&l2.scale(re(r1 / d)));
        c.c -= re(0.5 * e2 * r1 * r2);
        Ok(c)
    });
    Ok(OperatorPair { h, f })
}

/// `R = ψ/(f₁f₂)^{1/4}` on the grid of a frame solution component.
pub fn c1_rescale(params: &C1Params, psi: &Grid2<C64>) -> Grid2<C64> {
    let mut out = psi.clone();
    for i in 0..psi.ax1.n {
        for j in 0..psi.ax2.n {
            let (x, y) = psi.point(i, j);
            let w = (poly_eval(&params.f1, x) * poly_eval(&params.f2, y)).powf(-0.25);
            out.data[i * psi.ax2.n + j] = psi.get(i, j) * w;
        }
    }
    out
}

/// Gaussian curvature of the diagonal metric with inverse components
/// `g¹¹, g²²`, given as functions of jets of the coordinates:
/// `K = −(∂₁(G₁/√(EG)) + ∂₂(E₂/√(EG)))/(2√(EG))` with `E = 1/g¹¹`, `G = 1/g²²`.
pub fn gaussian_curvature(inverse_metric: impl Fn(&Jet, &Jet) -> (Jet, Jet), r1: f64, r2: f64) -> Result<f64> {
    let x = Jet::var1(r1, 2);
    let y = Jet::var2(r2, 2);
    let (g11, g22) = inverse_metric(&x, &y);
    if !(g11.value() > 0.0 && g22.value() > 0.0) || !g11.value().is_finite() || !g22.value().is_finite() {
        return Err(Error::MetricDegenerate { r1, r2 });
    }
    let e = g11.recip();
    let g = g22.recip();
    let root = (&e * &g).sqrt();
    let t1 = g.d1() / root.truncate(1);
    let t2 = e.d2() / root.truncate(1);
    Ok(-(t1.d(1, 0) + t2.d(0, 1)) / (2.0 * root.value()))
}

/// Curvature of the Stäckel metric `g¹¹ = f₁/(R²−R¹)`, `g²² = f₂/(R²−R¹)`.
pub fn c1_curvature(params: &C1Params, r1: f64, r2: f64) -> Result<f64> {
    gaussian_curvature(
        |x, y| {
            let d = y - x;
            (poly_jet(&params.f1, x) / &d, poly_jet(&params.f2, y) / &d)
        },
        r1,
        r2,
    )
}

/// `(∂₁B − ∂₂A) + K(R²−R¹)/√(f₁f₂)` at a point: the magnetic field plus
/// `K` times the area density.
pub fn magnetic_identity_residual(params: &C1Params, r1: f64, r2: f64) -> Result<f64> {
    check_positive(params, r1, r2)?;
    let j = c1_jets(params, r1, r2, 1);
    let (a, b) = magnetic_potential_jets(&j);
    let k = c1_curvature(params, r1, r2)?;
    let area = (r2 - r1) / (j.f1.value() * j.f2.value()).sqrt();
    Ok(b.d(1, 0) - a.d(0, 1) + k * area)
}

/// Largest magnetic identity residual over the grid `ax1 × ax2`.
pub fn magnetic_identity_check(params: &C1Params, ax1: Axis, ax2: Axis) -> Result<f64> {
    let pts: Vec<(f64, f64)> = ax1.nodes().into_iter().flat_map(|x| ax2.nodes().into_iter().map(move |y| (x, y))).collect();
    let r = pts
        .par_iter()
        .map(|&(x, y)| magnetic_identity_residual(params, x, y).map(f64::abs))
        .collect::<Result<Vec<_>>>()?;
    Ok(r.into_iter().fold(0.0, f64::max))
}

/// `∫₀^y e^{ξ²} dξ` by double-exponential quadrature at relative accuracy 1e−12.
pub fn erfi_integral(y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let scale = y.abs() * (y * y).exp();
    let v = quadrature::double_exponential::integrate(|t| (t * t).exp(), 0.0, y.abs(), 1e-13 * scale).integral;
    v.copysign(y)
}

#[derive(Debug, Clone)]
enum BasisKind {
    Closed,
    /// RK4 states `(ψ, ψ′)` of both solutions at `y_min + k·LANDAU_STEP`.
    Table { y_min: f64, states: Vec<[[f64; 2]; 2]> },
}

/// Basis of `ψ″ = (y² − 2λ)ψ` with `ψ₁(0) = 1, ψ₁′(0) = 0, ψ₂(0) = 0, ψ₂′(0) = 1`,
/// so the Wronskian `ψ₁ψ₂′ − ψ₂ψ₁′` equals 1.
#[derive(Debug, Clone)]
pub struct LandauBasis {
    lambda: f64,
    kind: BasisKind,
}

fn hermite_rhs(lambda: f64, y: f64, s: [f64; 2]) -> [f64; 2] {
    [s[1], (y * y - 2.0 * lambda) * s[0]]
}

fn hermite_rk4(lambda: f64, y: f64, s: [f64; 2], h: f64) -> [f64; 2] {
    let f = |y: f64, s: [f64; 2]| hermite_rhs(lambda, y, s);
    let add = |s: [f64; 2], k: [f64; 2], c: f64| [s[0] + c * k[0], s[1] + c * k[1]];
    let k1 = f(y, s);
    let k2 = f(y + 0.5 * h, add(s, k1, 0.5 * h));
    let k3 = f(y + 0.5 * h, add(s, k2, 0.5 * h));
    let k4 = f(y + h, add(s, k3, h));
    [
        s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

impl LandauBasis {
    /// Closed-form basis of the lowest level `λ = 1/2`:
    /// `ψ₁ = e^{−y²/2}`, `ψ₂ = e^{−y²/2}∫₀^y e^{ξ²}dξ`.
    pub fn closed_form() -> Self {
        LandauBasis { lambda: 0.5, kind: BasisKind::Closed }
    }

    /// Basis tabulated by RK4 on `[−y_max, y_max]`.
    pub fn integrate(lambda: f64, y_max: f64) -> Result<Self> {
        if !(y_max > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("Landau basis needs y_max > 0 and finite λ, got {y_max}, {lambda}")));
        }
        let n = (y_max / LANDAU_STEP).ceil() as usize;
        let run = |dir: f64| -> Result<Vec<[[f64; 2]; 2]>> {
            let mut out = Vec::with_capacity(n + 1);
            let mut s = [[1.0, 0.0], [0.0, 1.0]];
            out.push(s);
            for k in 0..n {
                let y = dir * k as f64 * LANDAU_STEP;
                s = [hermite_rk4(lambda, y, s[0], dir * LANDAU_STEP), hermite_rk4(lambda, y, s[1], dir * LANDAU_STEP)];
                if s.iter().flatten().any(|v| !(v.abs() <= LANDAU_BLOWUP)) {
                    return Err(Error::OdeBlowUp { t: y + dir * LANDAU_STEP, bound: LANDAU_BLOWUP });
                }
                out.push(s);
            }
            Ok(out)
        };
        let fwd = run(1.0)?;
        let mut states = run(-1.0)?;
        states.reverse();
        states.extend_from_slice(&fwd[1..]);
        Ok(LandauBasis { lambda, kind: BasisKind::Table { y_min: -(n as f64) * LANDAU_STEP, states } })
    }

    /// Closed form when requested (only at `λ = 1/2`), otherwise RK4.
    pub fn new(lambda: f64, closed_form: bool, y_max: f64) -> Result<Self> {
        if closed_form {
            if lambda != 0.5 {
                return Err(Error::InvalidInput(format!("closed-form basis exists only for λ = 1/2, got {lambda}")));
            }
            return Ok(Self::closed_form());
        }
        Self::integrate(lambda, y_max)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.kind, BasisKind::Closed)
    }

    /// The Wronskian fixed by the initial data.
    pub fn wronskian(&self) -> f64 {
        1.0
    }

    fn state(&self, which: usize, y: f64) -> Result<[f64; 2]> {
        match &self.kind {
            BasisKind::Closed => {
                let g = (-0.5 * y * y).exp();
                Ok(if which == 1 {
                    [g, -y * g]
                } else {
                    let v = g * erfi_integral(y);
                    [v, -y * v + (0.5 * y * y).exp()]
                })
            }
            BasisKind::Table { y_min, states } => {
                let k = ((y - y_min) / LANDAU_STEP).round();
                if k < 0.0 || k as usize >= states.len() {
                    return Err(Error::DomainViolation(format!("y = {y} lies outside the tabulated Landau basis")));
                }
                let y0 = y_min + k * LANDAU_STEP;
                let s = states[k as usize][which - 1];
                if y == y0 {
                    return Ok(s);
                }
                Ok(hermite_rk4(self.lambda, y0, s, y - y0))
            }
        }
    }

    /// `(ψ, ψ′, ψ″, ψ‴)` of basis member `which` ∈ {1, 2}.
    pub fn derivs(&self, which: usize, y: f64) -> Result<[f64; 4]> {
        assert!(which == 1 || which == 2, "basis member must be 1 or 2");
        let [v, d] = self.state(which, y)?;
        let pot = y * y - 2.0 * self.lambda;
        Ok([v, d, pot * v, 2.0 * y * v + pot * d])
    }

    pub fn psi1(&self, y: f64) -> Result<f64> {
        Ok(self.state(1, y)?[0])
    }

    pub fn psi2(&self, y: f64) -> Result<f64> {
        Ok(self.state(2, y)?[0])
    }

    /// `ψ₁ψ₂′ − ψ₂ψ₁′` evaluated at `y`.
    pub fn wronskian_at(&self, y: f64) -> Result<f64> {
        let a = self.state(1, y)?;
        let b = self.state(2, y)?;
        Ok(a[0] * b[1] - b[0] * a[1])
    }
}

fn check_k(k: f64) -> Result<()> {
    if k == 0.0 || !k.is_finite() {
        return Err(Error::InvalidInput(format!("wave number must be nonzero, got {k}")));
    }
    Ok(())
}

/// Hexaspherical vector `(y⁰, …, y⁵)` of the Landau canal surface at height `y`.
pub fn landau_hex(basis: &LandauBasis, k: f64, y: f64) -> Result<[f64; 6]> {
    check_k(k)?;
    let w = basis.wronskian();
    let (a1, a2) = (basis.psi1(y - k)?, basis.psi2(y - k)?);
    let (b1, b2) = (basis.psi1(y + k)?, basis.psi2(y + k)?);
    let s = a2 * b2 / (2.0 * k * w * w);
    Ok([
        (a1 * b2 - a2 * b1) / w,
        -(a1 * b2 + a2 * b1) / w,
        0.0,
        0.0,
        -2.0 * k * a1 * b1 + s,
        -2.0 * k * a1 * b1 - s,
    ])
}

/// Lie quadric residual `−(y⁰)² + (y¹)² + … − (y⁵)²`.
pub fn lie_quadric(y: &[f64; 6]) -> f64 {
    lie_product(y, y)
}

/// Center `z` on the axis and signed radius `R` at height `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub y: f64,
    pub z: f64,
    pub radius: f64,
}

/// Meridian data of the Landau surface of revolution, with poles removed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandauProfile {
    pub k: f64,
    pub samples: Vec<ProfileSample>,
    /// Heights skipped because `z` or `R` exceeded the pole threshold, and
    /// midpoints of intervals across which a denominator changed sign.
    pub poles: Vec<f64>,
}

/// `z = kWψ₁(y−k)/ψ₂(y−k) − ψ₂(y+k)/(4kWψ₁(y+k))` and `R` the same with `+`.
pub fn landau_center_radius(basis: &LandauBasis, k: f64, y: f64) -> Result<(f64, f64)> {
    check_k(k)?;
    let w = basis.wronskian();
    let (a1, a2) = (basis.psi1(y - k)?, basis.psi2(y - k)?);
    let (b1, b2) = (basis.psi1(y + k)?, basis.psi2(y + k)?);
    let first = k * w * a1 / a2;
    let second = b2 / (4.0 * k * w * b1);
    let (z, r) = (first - second, first + second);
    if !(z.abs() <= POLE_THRESHOLD && r.abs() <= POLE_THRESHOLD) {
        return Err(Error::PoleOnGrid { y });
    }
    Ok((z, r))
}

pub fn landau_surface(basis: &LandauBasis, k: f64, ys: &[f64]) -> Result<LandauProfile> {
    check_k(k)?;
    let mut samples = Vec::with_capacity(ys.len());
    let mut poles = Vec::new();
    let mut prev: Option<(f64, f64, f64)> = None;
    for &y in ys {
        let den = (basis.psi2(y - k)?, basis.psi1(y + k)?);
        if let Some((py, d1, d2)) = prev {
            if d1 * den.0 < 0.0 || d2 * den.1 < 0.0 {
                poles.push(0.5 * (py + y));
            }
        }
        prev = Some((y, den.0, den.1));
        match landau_center_radius(basis, k, y) {
            Ok((z, radius)) => samples.push(ProfileSample { y, z, radius }),
            Err(Error::PoleOnGrid { y }) => poles.push(y),
            Err(e) => return Err(e),
        }
    }
    poles.sort_by(f64::total_cmp);
    poles.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(LandauProfile { k, samples, poles })
}

/// The solution `ψ` of the Landau system at `M = 1` and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandauTwistor {
    pub point: (f64, f64),
    pub psi: TwistorVector,
    pub psi_x: TwistorVector,
    pub psi_y: TwistorVector,
    pub psi_xy: TwistorVector,
}

/// `ψ = (e^{ikx}ψ₁(y+k), e^{−ikx}ψ₁(y−k), e^{−ikx}ψ₂(y−k)/(2ikW), e^{ikx}ψ₂(y+k)/(2ikW))`.
pub fn landau_twistor(basis: &LandauBasis, k: f64, x: f64, y: f64) -> Result<LandauTwistor> {
    check_k(k)?;
    let w = basis.wronskian();
    let ep = C64::from_polar(1.0, k * x);
    let em = ep.conj();
    let norm = (I * (2.0 * k * w)).inv();
    let p1p = basis.derivs(1, y + k)?;
    let p1m = basis.derivs(1, y - k)?;
    let p2m = basis.derivs(2, y - k)?;
    let p2p = basis.derivs(2, y + k)?;
    // (exponential, x-frequency, profile) per component
    let parts = [(ep, k, p1p, re(1.0)), (em, -k, p1m, re(1.0)), (em, -k, p2m, norm), (ep, k, p2p, norm)];
    let comp = |dx: bool, dy: bool| -> TwistorVector {
        TwistorVector(std::array::from_fn(|c| {
            let (e, freq, prof, n) = parts[c];
            let fx = if dx { I * freq } else { re(1.0) };
            e * n * fx * prof[usize::from(dy)]
        }))
    };
    Ok(LandauTwistor {
        point: (x, y),
        psi: comp(false, false),
        psi_x: comp(true, false),
        psi_y: comp(false, true),
        psi_xy: comp(true, true),
    })
}

impl LandauTwistor {
    /// Frame rows `(ψ, ∂₁ψ, ∂₂ψ, ∂₁∂₂ψ)` at `(R¹, R²) = (y, x)`.
    pub fn frame_state(&self) -> FrameState {
        FrameState::from_rows((self.point.1, self.point.0), [self.psi, self.psi_y, self.psi_x, self.psi_xy])
    }

    /// Largest deviation of the products of `ψ, ψ_x, ψ_y, ψ_xy` from
    /// `(ψ_x, ψ_y) = 1`, `(ψ, ψ_xy) = −1`, all others zero.
    pub fn gram_defect(&self) -> f64 {
        let v = [self.psi, self.psi_x, self.psi_y, self.psi_xy];
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let target = match (i.min(j), i.max(j)) {
                    (1, 2) => 1.0,
                    (0, 3) => -1.0,
                    _ => 0.0,
                };
                worst = worst.max((herm_product4(&v[i], &v[j]) - target).norm());
            }
        }
        worst
    }

    /// `ψ ∧ ψ_x ∧ ψ_y ∧ ψ_xy`.
    pub fn det(&self) -> C64 {
        det4(&self.psi, &self.psi_x, &self.psi_y, &self.psi_xy)
    }

    /// `ψ ∧ ψ_x + conj(ψ ∧ ψ_x)`.
    pub fn sphere(&self) -> Bivector6 {
        let v = wedge_to_hex(&self.psi, &self.psi_x);
        v + v.conj()
    }
}

/// Landau operators `H = ½(i∂ₓ − My)² + ½(i∂_y)²` and `F = −∂ₓ²` in the
/// `(y, x)` chart, with eigenvalues `λ` and `k²`.
pub fn landau_operators(params: &CanalParams) -> OperatorPair {
    let m = params.m;
    let h = MagneticOperator::new("landau-H", params.lambda, move |y, _x| {
        Ok(OperatorCoeffs {
            a11: re(-0.5),
            a22: re(-0.5),
            b1: re(0.0),
            b2: -I * (m * y),
            c: re(0.5 * m * m * y * y),
        })
    });
    let f = MagneticOperator::new("landau-F", params.k * params.k, |_, _| {
        Ok(OperatorCoeffs { a22: re(-1.0), ..Default::default() })
    });
    OperatorPair { h, f }
}

/// Basis for the rescaled level `λ/M`: closed form at `λ/M = 1/2`, RK4 otherwise.
pub fn landau_scaled_basis(params: &CanalParams, y_max: f64) -> Result<LandauBasis> {
    let lt = params.lambda / params.m;
    LandauBasis::new(lt, lt == 0.5, y_max)
}

/// Components of `ψ` for magnetic strength `M` on the `(y, x)` grid, through
/// `x̃ = x√M`, `ỹ = y√M`, `k̃ = k/√M` applied to the `M = 1` solution.
pub fn landau_components(params: &CanalParams, basis: &LandauBasis, ax1: Axis, ax2: Axis) -> Result<[Grid2<C64>; 4]> {
    let s = params.m.sqrt();
    let kt = params.k / s;
    let mut comps: [Grid2<C64>; 4] = std::array::from_fn(|_| Grid2::from_fn(ax1, ax2, |_, _| C64::new(0.0, 0.0)));
    for i in 0..ax1.n {
        for j in 0..ax2.n {
            let (y, x) = (ax1.at(i), ax2.at(j));
            let t = landau_twistor(basis, kt, x * s, y * s)?;
            for (c, g) in comps.iter_mut().enumerate() {
                g.data[i * ax2.n + j] = t.psi[c];
            }
        }
    }
    Ok(comps)
}

/// Residuals of the Landau operators on the closed-form solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandauOperatorReport {
    pub h_residual: f64,
    pub f_residual: f64,
    pub commutator: f64,
}

/// Apply `H` and `F` to the four components of `ψ` and to `n_bumps` test functions.
pub fn landau_operator_check(params: &CanalParams, ax1: Axis, ax2: Axis, n_bumps: usize) -> Result<LandauOperatorReport> {
    check_k(params.k)?;
    if !(params.m > 0.0) {
        return Err(Error::InvalidInput(format!("magnetic strength must be positive, got {}", params.m)));
    }
    let s = params.m.sqrt();
    let reach = s * (ax1.start.abs().max(ax1.end.abs()) + params.k.abs() / params.m) + 1.0;
    let basis = landau_scaled_basis(params, reach)?;
    let comps = landau_components(params, &basis, ax1, ax2)?;
    let ops = landau_operators(params);
    let mut rep = LandauOperatorReport { h_residual: 0.0, f_residual: 0.0, commutator: 0.0 };
    for u in &comps {
        rep.h_residual = rep.h_residual.max(ops.h.eigen_residual(u)?);
        rep.f_residual = rep.f_residual.max(ops.f.eigen_residual(u)?);
    }
    rep.commutator = ops.commutator(&bump_functions(n_bumps, ax1, ax2))?;
    Ok(rep)
}
