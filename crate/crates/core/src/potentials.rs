//! Potential data `(p, q, V, W)` of the twistor linear system, its
//! compatibility (Gauss–Codazzi) conditions, gauge transformations, and the
//! explicit Lie-applicable and canal families.
//!
//! The linear system is
//!
//! ```text
//! ∂₁²ψ = −ip ∂₂ψ + ½(V + i∂₂p) ψ
//! ∂₂²ψ =  iq ∂₁ψ + ½(W − i∂₁q) ψ
//! ```
//!
//! and it is compatible iff
//!
//! ```text
//! ∂₂³p − 2W∂₂p − p∂₂W + ∂₁³q − 2V∂₁q − q∂₁V = 0
//! ∂₁W = 2q∂₂p + p∂₂q
//! ∂₂V = 2p∂₁q + q∂₁p
//! ```

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid2, Rect};
use crate::jet::Jet;

/// Jets of the four potentials at a point.
#[derive(Debug, Clone)]
pub struct FieldJets {
    pub p: Jet,
    pub q: Jet,
    pub v: Jet,
    pub w: Jet,
}

impl FieldJets {
    pub fn order(&self) -> usize {
        self.p.order().min(self.q.order()).min(self.v.order()).min(self.w.order())
    }
}

/// Source of potential jets. Implementations must be pure functions of the point.
pub trait PotentialModel: Send + Sync {
    /// Jets of `(p, q, V, W)` at `(r1, r2)`. The returned order may be lower than
    /// requested for sampled models.
    fn jets(&self, r1: f64, r2: f64, order: usize) -> Result<FieldJets>;
}

/// Potentials over a rectangle, either closed-form or sampled.
#[derive(Clone)]
pub struct PotentialField {
    model: Arc<dyn PotentialModel>,
    domain: Rect,
    canal: bool,
    label: String,
}

impl fmt::Debug for PotentialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialField")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("canal", &self.canal)
            .finish()
    }
}

impl PotentialField {
    pub fn new(model: impl PotentialModel + 'static, domain: Rect, canal: bool, label: impl Into<String>) -> Self {
        PotentialField { model: Arc::new(model), domain, canal, label: label.into() }
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn is_canal(&self) -> bool {
        self.canal
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Restrict to a sub-rectangle.
    pub fn restrict(&self, domain: Rect) -> Result<Self> {
        if !self.domain.contains_rect(&domain) {
            return Err(Error::DomainViolation(format!("{domain:?} is not inside {:?}", self.domain)));
        }
        Ok(PotentialField { domain, ..self.clone() })
    }

    pub fn jets(&self, r1: f64, r2: f64, order: usize) -> Result<FieldJets> {
        self.domain.check(r1, r2)?;
        self.model.jets(r1, r2, order)
    }

    /// Values `(p, q, V, W)` at a point.
    pub fn values(&self, r1: f64, r2: f64) -> Result<[f64; 4]> {
        let j = self.jets(r1, r2, 0)?;
        Ok([j.p.value(), j.q.value(), j.v.value(), j.w.value()])
    }

    /// Constant potentials on `domain`.
    pub fn constant(p: f64, q: f64, v: f64, w: f64, domain: Rect) -> Self {
        let canal = q == 0.0;
        PotentialField::new(ConstantModel { p, q, v, w }, domain, canal, "constant")
    }

    /// Add `dv(R¹, R²)` to `V`; the result is in general incompatible.
    pub fn perturb_v(&self, dv: impl Fn(&Jet, &Jet) -> Jet + Send + Sync + 'static) -> Self {
        let model = PerturbedModel { base: self.clone(), dv: Arc::new(dv) };
        PotentialField { model: Arc::new(model), label: format!("{}+dV", self.label), ..self.clone() }
    }

    /// Exchange the two coordinate directions: `(p, q, V, W)(R¹, R²) ↦ (−q, −p, W, V)(R², R¹)`.
    /// A field with `p ≡ 0` becomes a canal field with `q ≡ 0`.
    pub fn swapped(&self, canal: bool) -> Self {
        let d = self.domain;
        PotentialField {
            model: Arc::new(SwappedModel { base: self.clone() }),
            domain: Rect::new(d.r2, d.r1),
            canal,
            label: format!("{}-swapped", self.label),
        }
    }

    /// Sampled potentials with fourth-order finite-difference derivatives.
    pub fn sampled(p: Grid2<f64>, q: Grid2<f64>, v: Grid2<f64>, w: Grid2<f64>, canal: bool) -> Result<Self> {
        let model = SampledModel::new(p, q, v, w)?;
        let domain = model.valid_rect();
        Ok(PotentialField::new(model, domain, canal, "sampled"))
    }
}

#[derive(Debug, Clone)]
struct ConstantModel {
    p: f64,
    q: f64,
    v: f64,
    w: f64,
}

impl PotentialModel for ConstantModel {
    fn jets(&self, _r1: f64, _r2: f64, order: usize) -> Result<FieldJets> {
        Ok(FieldJets {
            p: Jet::constant(self.p, order),
            q: Jet::constant(self.q, order),
            v: Jet::constant(self.v, order),
            w: Jet::constant(self.w, order),
        })
    }
}

type JetFn2 = Arc<dyn Fn(&Jet, &Jet) -> Jet + Send + Sync>;

struct PerturbedModel {
    base: PotentialField,
    dv: JetFn2,
}

impl PotentialModel for PerturbedModel {
    fn jets(&self, r1: f64, r2: f64, order: usize) -> Result<FieldJets> {
        let mut j = self.base.model.jets(r1, r2, order)?;
        let n = j.v.order();
        j.v = &j.v + (self.dv)(&Jet::var1(r1, n), &Jet::var2(r2, n));
        Ok(j)
    }
}

struct SwappedModel {
    base: PotentialField,
}

impl PotentialModel for SwappedModel {
    fn jets(&self, r1: f64, r2: f64, order: usize) -> Result<FieldJets> {
        let j = self.base.model.jets(r2, r1, order)?;
        Ok(FieldJets { p: -j.q.transpose(), q: -j.p.transpose(), v: j.w.transpose(), w: j.v.transpose() })
    }
}

/// Residuals of the three compatibility equations (left minus right side).
pub fn gauss_codazzi_residual(field: &PotentialField, r1: f64, r2: f64) -> Result<[f64; 3]> {
    let j = field.jets(r1, r2, 3)?;
    if j.order() < 3 {
        return Err(Error::StencilOutOfDomain { r1, r2 });
    }
    Ok(gc_residual_from_jets(&j))
}

fn gc_residual_from_jets(j: &FieldJets) -> [f64; 3] {
    let (p, q, v, w) = (&j.p, &j.q, &j.v, &j.w);
    let first = p.d(0, 3) - 2.0 * w.value() * p.d(0, 1) - p.value() * w.d(0, 1) + q.d(3, 0)
        - 2.0 * v.value() * q.d(1, 0)
        - q.value() * v.d(1, 0);
    let second = w.d(1, 0) - 2.0 * q.value() * p.d(0, 1) - p.value() * q.d(0, 1);
    let third = v.d(0, 1) - 2.0 * p.value() * q.d(1, 0) - q.value() * p.d(1, 0);
    [first, second, third]
}

/// Maximum absolute compatibility residual over an `n × n` grid of `rect`.
pub fn gc_max_residual(field: &PotentialField, rect: Rect, n: usize) -> Result<f64> {
    let (a1, a2) = (Axis::new(rect.r1.0, rect.r1.1, n), Axis::new(rect.r2.0, rect.r2.1, n));
    let mut worst = 0.0f64;
    for x in a1.nodes() {
        for y in a2.nodes() {
            for r in gauss_codazzi_residual(field, x, y)? {
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(worst)
}

/// Coefficients `k, l, a, b` of the frame equations at a point, together with
/// the logarithmic derivatives that enter the connection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoeffs {
    pub p: f64,
    pub q: f64,
    pub k: f64,
    /// Undefined on the canal branch.
    pub l: Option<f64>,
    pub a: f64,
    pub b: f64,
    /// `∂₂p / p`
    pub dlnp2: f64,
    /// `∂₁q / q`, zero on the canal branch.
    pub dlnq1: f64,
}

/// `k, l, a, b` as jets, for checking their compatibility relations.
#[derive(Debug, Clone)]
pub struct DerivedJets {
    pub k: Jet,
    pub l: Option<Jet>,
    pub a: Jet,
    pub b: Jet,
}

fn nonzero(name: &'static str, j: &Jet, r1: f64, r2: f64) -> Result<()> {
    if j.value() == 0.0 || !j.value().is_finite() {
        Err(Error::ZeroPotential { name, r1, r2 })
    } else {
        Ok(())
    }
}

/// Derived jets of order `j.order() − 2`.
pub fn derived_jets(j: &FieldJets, canal: bool, r1: f64, r2: f64) -> Result<DerivedJets> {
    nonzero("p", &j.p, r1, r2)?;
    let lp = j.p.ln();
    let lp2 = lp.d2();
    let a = &j.w - lp2.d2() - lp2.truncate(lp2.order() - 1).powi(2) * 0.5;
    if canal {
        let k = -lp.d1().d2();
        return Ok(DerivedJets { k, l: None, a, b: j.v.truncate(j.order() - 2) });
    }
    nonzero("q", &j.q, r1, r2)?;
    let lq = j.q.ln();
    let lq1 = lq.d1();
    let pq = &j.p * &j.q;
    let k = &pq - lp.d1().d2();
    let l = &pq - lq1.d2();
    let b = &j.v - lq1.d1() - lq1.truncate(lq1.order() - 1).powi(2) * 0.5;
    Ok(DerivedJets { k, l: Some(l), a, b })
}

pub fn derived_coeffs(field: &PotentialField, r1: f64, r2: f64) -> Result<DerivedCoeffs> {
    let j = field.jets(r1, r2, 2)?;
    derived_coeffs_from_jets(&j, field.canal, r1, r2)
}

pub(crate) fn derived_coeffs_from_jets(j: &FieldJets, canal: bool, r1: f64, r2: f64) -> Result<DerivedCoeffs> {
    let d = derived_jets(j, canal, r1, r2)?;
    let p = j.p.value();
    let q = j.q.value();
    Ok(DerivedCoeffs {
        p,
        q,
        k: d.k.value(),
        l: d.l.map(|l| l.value()),
        a: d.a.value(),
        b: d.b.value(),
        dlnp2: j.p.d(0, 1) / p,
        dlnq1: if canal { 0.0 } else { j.q.d(1, 0) / q },
    })
}

/// Residuals of the five relations satisfied by `k, l, a, b` on compatible fields:
/// the two definitions of `k, l`, the two Codazzi-type relations, and the
/// mixed relation `p∂₂a + 2a∂₂p + q∂₁b + 2b∂₁q = 0`. Canal fields report zero
/// for the relations involving `l`.
pub fn lie_gc_residual(field: &PotentialField, r1: f64, r2: f64) -> Result<[f64; 5]> {
    let j = field.jets(r1, r2, 3)?;
    let d = derived_jets(&j, field.canal, r1, r2)?;
    let (p, q) = (&j.p, &j.q);
    let pq = p.value() * q.value();
    let lp = p.ln();
    let r_k = lp.d(1, 1) - (if field.canal { -d.k.value() } else { pq - d.k.value() });
    let codazzi_a = d.a.d(1, 0) - d.k.d(0, 1) - p.d(0, 1) / p.value() * d.k.value();
    let mixed = p.value() * d.a.d(0, 1) + 2.0 * d.a.value() * p.d(0, 1) + q.value() * d.b.d(1, 0)
        + 2.0 * d.b.value() * q.d(1, 0);
    let (r_l, codazzi_b) = match &d.l {
        Some(l) => {
            let lq = q.ln();
            (
                lq.d(1, 1) - (pq - l.value()),
                d.b.d(0, 1) - l.d(1, 0) - q.d(1, 0) / q.value() * l.value(),
            )
        }
        None => (0.0, d.b.d(0, 1)),
    };
    Ok([r_k, r_l, codazzi_a, codazzi_b, mixed])
}

/// Invariant metric `−pq dR¹dR²` and cubic form `p(dR¹)³ − q(dR²)³` on a direction.
pub fn invariant_forms(field: &PotentialField, r1: f64, r2: f64, dir: (f64, f64)) -> Result<(f64, f64)> {
    let [p, q, _, _] = field.values(r1, r2)?;
    Ok((-p * q * dir.0 * dir.1, p * dir.0.powi(3) - q * dir.1.powi(3)))
}

/// Schwarzian derivative `h‴/h′ − (3/2)(h″/h′)²` of a jet-valued function.
pub fn schwarzian(h: impl Fn(&Jet) -> Jet, t: f64) -> Result<f64> {
    let j = h(&Jet::var1(t, 3));
    let (d1, d2, d3) = (j.d(1, 0), j.d(2, 0), j.d(3, 0));
    if d1.abs() < 1e-14 {
        return Err(Error::DegenerateJet { t });
    }
    Ok(d3 / d1 - 1.5 * (d2 / d1).powi(2))
}

fn schwarzian_jet(fj: &Jet) -> Jet {
    let f1 = fj.d1();
    let f2 = f1.d1();
    let f3 = f2.d1();
    let n = f3.order();
    let f1 = f1.truncate(n);
    let f2 = f2.truncate(n);
    &f3 / &f1 - (&f2 / &f1).powi(2) * 1.5
}

/// Monotone reparametrization of one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GaugeFn {
    Identity,
    /// `t ↦ a t + b`
    Affine { a: f64, b: f64 },
    /// `t ↦ eᵗ`
    Exp,
    /// `t ↦ (a t + b)/(c t + d)`
    Mobius { a: f64, b: f64, c: f64, d: f64 },
    /// `outer ∘ inner`
    Compose { outer: Box<GaugeFn>, inner: Box<GaugeFn> },
}

impl GaugeFn {
    pub fn apply(&self, t: &Jet) -> Jet {
        match self {
            GaugeFn::Identity => t.clone(),
            GaugeFn::Affine { a, b } => t * *a + *b,
            GaugeFn::Exp => t.exp(),
            GaugeFn::Mobius { a, b, c, d } => (t * *a + *b) / (t * *c + *d),
            GaugeFn::Compose { outer, inner } => outer.apply(&inner.apply(t)),
        }
    }

    pub fn invert(&self, s: &Jet) -> Jet {
        match self {
            GaugeFn::Identity => s.clone(),
            GaugeFn::Affine { a, b } => (s - *b) * (1.0 / a),
            GaugeFn::Exp => s.ln(),
            GaugeFn::Mobius { a, b, c, d } => (s * *d - *b) / (s * -*c + *a),
            GaugeFn::Compose { outer, inner } => inner.invert(&outer.invert(s)),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.apply(&Jet::constant(t, 0)).value()
    }

    pub fn inverse_value(&self, s: f64) -> f64 {
        self.invert(&Jet::constant(s, 0)).value()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.apply(&Jet::var1(t, 1)).d(1, 0)
    }

    /// Check `f′ > 0` on `[lo, hi]` and that Möbius poles stay outside.
    fn validate(&self, lo: f64, hi: f64) -> Result<()> {
        if let GaugeFn::Mobius { c, d, .. } = self {
            if *c != 0.0 {
                let pole = -d / c;
                if pole >= lo && pole <= hi {
                    return Err(Error::DomainViolation(format!("Möbius pole at {pole} inside [{lo}, {hi}]")));
                }
            }
        }
        let n = 64;
        for i in 0..=n {
            let t = lo + (hi - lo) * i as f64 / n as f64;
            let d = self.derivative(t);
            if !(d > 0.0) {
                return Err(Error::DomainViolation(format!("gauge derivative {d} ≤ 0 at {t}")));
            }
        }
        Ok(())
    }
}

/// Pair of reparametrizations `R¹ ↦ f(R¹)`, `R² ↦ g(R²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeMap {
    pub f: GaugeFn,
    pub g: GaugeFn,
}

struct GaugedModel {
    base: PotentialField,
    map: GaugeMap,
}

impl PotentialModel for GaugedModel {
    fn jets(&self, s1: f64, s2: f64, order: usize) -> Result<FieldJets> {
        let x = self.map.f.invert(&Jet::var1(s1, order));
        let y = self.map.g.invert(&Jet::var2(s2, order));
        let (r1, r2) = (x.value(), y.value());
        let base = self.base.model.jets(r1, r2, order)?;
        let n = base.order();
        let fj = self.map.f.apply(&Jet::var1(r1, n + 3));
        let gj = self.map.g.apply(&Jet::var2(r2, n + 3));
        let sf = schwarzian_jet(&fj).truncate(n);
        let sg = schwarzian_jet(&gj.transpose()).transpose().truncate(n);
        let f1 = fj.d1().truncate(n);
        let g1 = gj.d2().truncate(n);
        let f1sq = f1.powi(2);
        let g1sq = g1.powi(2);
        let p = &base.p * &g1 / &f1sq;
        let q = &base.q * &f1 / &g1sq;
        let v = (&base.v + sf) / &f1sq;
        let w = (&base.w + sg) / &g1sq;
        Ok(FieldJets {
            p: p.substitute(&x, &y),
            q: q.substitute(&x, &y),
            v: v.substitute(&x, &y),
            w: w.substitute(&x, &y),
        })
    }
}

/// Transform the potentials under `R¹* = f(R¹)`, `R²* = g(R²)`:
/// `p* = p g′/f′²`, `q* = q f′/g′²`, `V* f′² = V + S(f)`, `W* g′² = W + S(g)`.
pub fn apply_gauge(field: &PotentialField, map: &GaugeMap) -> Result<PotentialField> {
    let d = field.domain;
    map.f.validate(d.r1.0, d.r1.1)?;
    map.g.validate(d.r2.0, d.r2.1)?;
    let domain = Rect::new(
        (map.f.value(d.r1.0), map.f.value(d.r1.1)),
        (map.g.value(d.r2.0), map.g.value(d.r2.1)),
    );
    Ok(PotentialField {
        model: Arc::new(GaugedModel { base: field.clone(), map: map.clone() }),
        domain,
        canal: field.canal,
        label: format!("{}-gauged", field.label),
    })
}

/// Parameters of the family with `∂₁∂₂ ln p = ∂₁∂₂ ln q = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct C0Params {
    pub eps: [f64; 3],
    pub alpha: f64,
    pub rho: [f64; 2],
    pub s: [f64; 2],
    /// `(ψᵢ(0), ψᵢ′(0))` for the two profile ODEs.
    pub init: [[f64; 2]; 2],
    /// Profiles exceeding this magnitude abort construction.
    pub blowup_bound: f64,
}

impl Default for C0Params {
    fn default() -> Self {
        C0Params {
            eps: [0.3, 0.5, -0.4],
            alpha: 0.5,
            rho: [0.3, -0.2],
            s: [0.1, 0.2],
            init: [[1.0, 0.0], [1.0, 0.0]],
            blowup_bound: 1e6,
        }
    }
}

/// Solution of `ψ″ = αψ² + ρψ + s` tabulated by RK4, with Taylor expansion
/// from the nearest node for off-node values and derivatives.
#[derive(Debug, Clone)]
pub struct Profile {
    alpha: f64,
    rho: f64,
    s: f64,
    h: f64,
    k_min: i64,
    nodes: Vec<[f64; 2]>,
}

const PROFILE_STEP: f64 = 1e-3;
const PROFILE_TAYLOR_ORDER: usize = 14;

impl Profile {
    /// Integrate from `t = 0` over an interval covering `[lo, hi]`.
    pub fn new(alpha: f64, rho: f64, s: f64, init: [f64; 2], lo: f64, hi: f64, bound: f64) -> Result<Self> {
        let h = PROFILE_STEP;
        let pad = 4.0 * h;
        let k_min = ((lo.min(0.0) - pad) / h).floor() as i64;
        let k_max = ((hi.max(0.0) + pad) / h).ceil() as i64;
        let n = (k_max - k_min + 1) as usize;
        let mut nodes = vec![[0.0; 2]; n];
        let zero = (-k_min) as usize;
        nodes[zero] = init;
        let rhs = |y: [f64; 2]| [y[1], alpha * y[0] * y[0] + rho * y[0] + s];
        let step = |y: [f64; 2], dt: f64| {
            let k1 = rhs(y);
            let k2 = rhs([y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
            let k3 = rhs([y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
            let k4 = rhs([y[0] + dt * k3[0], y[1] + dt * k3[1]]);
            [
                y[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                y[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ]
        };
        let check = |y: [f64; 2], k: usize| -> Result<()> {
            if !(y[0].abs() <= bound && y[1].abs() <= bound) {
                Err(Error::OdeBlowUp { t: (k as i64 + k_min) as f64 * h, bound })
            } else {
                Ok(())
            }
        };
        for k in zero + 1..n {
            nodes[k] = step(nodes[k - 1], h);
            check(nodes[k], k)?;
        }
        for k in (0..zero).rev() {
            nodes[k] = step(nodes[k + 1], -h);
            check(nodes[k], k)?;
        }
        Ok(Profile { alpha, rho, s, h, k_min, nodes })
    }

    /// Taylor coefficients of the solution through `(ψ, ψ′) = y` up to `order`.
    fn taylor(&self, y: [f64; 2], order: usize) -> Vec<f64> {
        let mut c = vec![0.0; order.max(1) + 1];
        c[0] = y[0];
        c[1] = y[1];
        for n in 0..order.saturating_sub(1) {
            let sq: f64 = (0..=n).map(|m| c[m] * c[n - m]).sum();
            let forcing = if n == 0 { self.s } else { 0.0 };
            c[n + 2] = (self.alpha * sq + self.rho * c[n] + forcing) / ((n + 1) * (n + 2)) as f64;
        }
        c.truncate(order + 1);
        c
    }

    /// Derivatives `ψ, ψ′, …, ψ⁽ⁿ⁾` at `t`.
    pub fn derivs(&self, t: f64, n: usize) -> Result<Vec<f64>> {
        let k = (t / self.h).round() as i64;
        let idx = k - self.k_min;
        if idx < 0 || idx as usize >= self.nodes.len() {
            return Err(Error::OutOfDomain { r1: t, r2: f64::NAN });
        }
        let dt = t - k as f64 * self.h;
        let c = self.taylor(self.nodes[idx as usize], PROFILE_TAYLOR_ORDER);
        let mut val = 0.0;
        let mut der = 0.0;
        for (m, cm) in c.iter().enumerate().rev() {
            val = val * dt + cm;
            if m > 0 {
                der = der * dt + m as f64 * cm;
            }
        }
        let local = self.taylor([val, der], n);
        let mut fact = 1.0;
        Ok(local
            .iter()
            .enumerate()
            .map(|(m, cm)| {
                if m > 0 {
                    fact *= m as f64;
                }
                cm * fact
            })
            .collect())
    }
}

struct C0Model {
    params: C0Params,
    psi1: Profile,
    psi2: Profile,
}

impl PotentialModel for C0Model {
    fn jets(&self, r1: f64, r2: f64, order: usize) -> Result<FieldJets> {
        let d1 = self.psi1.derivs(r1, order + 2)?;
        let d2 = self.psi2.derivs(r2, order + 2)?;
        let psi1 = Jet::from_derivs1(&d1, order);
        let psi2 = Jet::from_derivs2(&d2, order);
        let psi1_pp = Jet::from_derivs1(&d1[2..], order);
        let psi2_pp = Jet::from_derivs2(&d2[2..], order);
        let [e0, e1, e2] = self.params.eps;
        let [rho1, rho2] = self.params.rho;
        let p = Jet::from_derivs1(&d1[1..], order);
        let q = -Jet::from_derivs2(&d2[1..], order);
        let v = e1 + &psi1 * e0 - &psi2 * &psi1_pp - psi1.powi(2) * (0.5 * rho2);
        let w = e2 + &psi2 * e0 - &psi1 * &psi2_pp - psi2.powi(2) * (0.5 * rho1);
        Ok(FieldJets { p, q, v, w })
    }
}

/// Profiles `ψ₁(R¹)`, `ψ₂(R²)` of a `c = 0` field, for operator assembly.
#[derive(Debug, Clone)]
pub struct C0Profiles {
    pub params: C0Params,
    pub psi1: Profile,
    pub psi2: Profile,
}

pub fn c0_profiles(params: &C0Params, domain: Rect) -> Result<C0Profiles> {
    let [[a1, b1], [a2, b2]] = params.init;
    let pad = 0.1;
    let psi1 = Profile::new(
        params.alpha,
        params.rho[0],
        params.s[0],
        [a1, b1],
        domain.r1.0 - pad,
        domain.r1.1 + pad,
        params.blowup_bound,
    )?;
    let psi2 = Profile::new(
        params.alpha,
        params.rho[1],
        params.s[1],
        [a2, b2],
        domain.r2.0 - pad,
        domain.r2.1 + pad,
        params.blowup_bound,
    )?;
    Ok(C0Profiles { params: params.clone(), psi1, psi2 })
}

/// Field with `p = ψ₁′(R¹)`, `q = −ψ₂′(R²)`, `ψᵢ″ = αψᵢ² + ρᵢψᵢ + sᵢ` and
/// `V = ε₁ + ε₀ψ₁ − ψ₂ψ₁″ − ½ρ₂ψ₁²`, `W = ε₂ + ε₀ψ₂ − ψ₁ψ₂″ − ½ρ₁ψ₂²`.
pub fn make_c0_family(params: &C0Params, domain: Rect) -> Result<PotentialField> {
    let prof = c0_profiles(params, domain)?;
    let model = C0Model { params: params.clone(), psi1: prof.psi1, psi2: prof.psi2 };
    Ok(PotentialField::new(model, domain, false, "c0"))
}

/// Parameters of the family with `∂₁∂₂ ln p = ∂₁∂₂ ln q = pq`. `f1`, `f2` are
/// polynomial coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct C1Params {
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    #[serde(default)]
    pub eps: [f64; 3],
}

impl C1Params {
    /// `f₁ = 4t³ + at² + bt + c`, `f₂ = −f₁`.
    pub fn monopole(a: f64, b: f64, c: f64, eps: [f64; 3]) -> Self {
        C1Params { f1: vec![c, b, a, 4.0], f2: vec![-c, -b, -a, -4.0], eps }
    }
}

/// Evaluate an ascending-coefficient polynomial on a jet.
pub fn poly_jet(coeffs: &[f64], t: &Jet) -> Jet {
    let mut out = Jet::constant(0.0, t.order());
    for c in coeffs.iter().rev() {
        out = out * t + *c;
    }
    out
}

pub fn poly_eval(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

struct C1Model {
    params: C1Params,
}

impl C1Model {
    /// Jets of `p, q` of the requested order.
    fn pq(&self, r1: f64, r2: f64, order: usize) -> (Jet, Jet) {
        let x = Jet::var1(r1, order);
        let y = Jet::var2(r2, order);
        let f1 = poly_jet(&self.params.f1, &x);
        let f2 = poly_jet(&self.params.f2, &y);
        let ratio = (&f2 / &f1).sqrt();
        let dinv = (&y - &x).recip();
        let p = &dinv * &ratio;
        let q = -&dinv * ratio.recip();
        (p, q)
    }
}

impl PotentialModel for C1Model {
    fn jets(&self, r1: f64, r2: f64, order: usize) -> Result<FieldJets> {
        let (p, q) = self.pq(r1, r2, order + 2);
        let x = Jet::var1(r1, order);
        let y = Jet::var2(r2, order);
        let [e0, e1, e2] = self.params.eps;
        let f1 = poly_jet(&self.params.f1, &x);
        let f2 = poly_jet(&self.params.f2, &y);
        let lq1 = q.ln().d1();
        let lp2 = p.ln().d2();
        let v = lq1.d1() + lq1.truncate(order).powi(2) * 0.5 - (e0 + &x * e1 + x.powi(2) * e2) / f1;
        let w = lp2.d2() + lp2.truncate(order).powi(2) * 0.5 + (e0 + &y * e1 + y.powi(2) * e2) / f2;
        Ok(FieldJets { p: p.truncate(order), q: q.truncate(order), v, w })
    }
}

fn check_c1_domain(params: &C1Params, domain: Rect) -> Result<()> {
    if domain.r2.0 <= domain.r1.1 {
        return Err(Error::DomainViolation(format!(
            "R² > R¹ fails: R² starts at {} but R¹ reaches {}",
            domain.r2.0, domain.r1.1
        )));
    }
    let n = 1000;
    for i in 0..=n {
        let s = i as f64 / n as f64;
        let t1 = domain.r1.0 + s * (domain.r1.1 - domain.r1.0);
        let t2 = domain.r2.0 + s * (domain.r2.1 - domain.r2.0);
        let (v1, v2) = (poly_eval(&params.f1, t1), poly_eval(&params.f2, t2));
        if !(v1 > 0.0) {
            return Err(Error::DomainViolation(format!("f1({t1}) = {v1} ≤ 0")));
        }
        if !(v2 > 0.0) {
            return Err(Error::DomainViolation(format!("f2({t2}) = {v2} ≤ 0")));
        }
    }
    Ok(())
}

/// Field with `p = √(f₂/f₁)/(R²−R¹)`, `q = √(f₁/f₂)/(R¹−R²)` (positive roots) and
/// `V = ∂₁² ln q + ½(∂₁q/q)² − (ε₀+ε₁R¹+ε₂(R¹)²)/f₁`,
/// `W = ∂₂² ln p + ½(∂₂p/p)² + (ε₀+ε₁R²+ε₂(R²)²)/f₂`.
pub fn make_c1_family(params: &C1Params, domain: Rect) -> Result<PotentialField> {
    check_c1_domain(params, domain)?;
    Ok(PotentialField::new(C1Model { params: params.clone() }, domain, false, "c1"))
}

/// Landau-level canal data: magnetic strength, energy, and wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanalParams {
    pub m: f64,
    pub lambda: f64,
    pub k: f64,
}

impl Default for CanalParams {
    fn default() -> Self {
        CanalParams { m: 1.0, lambda: 0.5, k: 1.0 }
    }
}

struct LandauModel {
    params: CanalParams,
}

impl PotentialModel for LandauModel {
    fn jets(&self, r1: f64, _r2: f64, order: usize) -> Result<FieldJets> {
        let CanalParams { m, lambda, k } = self.params;
        let y = Jet::var1(r1, order);
        Ok(FieldJets {
            p: &y * (2.0 * m),
            q: Jet::zero(order),
            v: y.powi(2) * (2.0 * m * m) + (2.0 * k * k - 4.0 * lambda),
            w: Jet::constant(-2.0 * k * k, order),
        })
    }
}

/// Canal field `p = 2MR¹`, `q = 0`, `V = 2M²(R¹)² + 2k² − 4λ`, `W = −2k²`,
/// with `R¹ = y`, `R² = x` for the Landau operator `½(i∂ₓ − My)² + ½(i∂_y)²`.
pub fn make_canal_landau(params: &CanalParams, domain: Rect) -> Result<PotentialField> {
    if !(params.m > 0.0) {
        return Err(Error::InvalidInput(format!("magnetic strength must be positive, got {}", params.m)));
    }
    Ok(PotentialField::new(LandauModel { params: *params }, domain, true, "landau"))
}

/// Family selector used by configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum FamilyParams {
    C0(C0Params),
    C1(C1Params),
    Canal(CanalParams),
}

impl FamilyParams {
    pub fn build(&self, domain: Rect) -> Result<PotentialField> {
        match self {
            FamilyParams::C0(p) => make_c0_family(p, domain),
            FamilyParams::C1(p) => make_c1_family(p, domain),
            FamilyParams::Canal(p) => make_canal_landau(p, domain),
        }
    }
}

/// Derivative grids computed by finite differences, interpolated to
/// off-node points with cubic Lagrange weights.
struct SampledModel {
    ax1: Axis,
    ax2: Axis,
    // derivs[c][(o1, o2)] for components p, q, V, W and o1 + o2 ≤ 3
    derivs: Vec<Vec<((usize, usize), Vec<Option<f64>>)>>,
}

const SAMPLED_ORDER: usize = 3;
const SAMPLED_MARGIN: usize = 3;

impl SampledModel {
    fn new(p: Grid2<f64>, q: Grid2<f64>, v: Grid2<f64>, w: Grid2<f64>) -> Result<Self> {
        let (ax1, ax2) = (p.ax1, p.ax2);
        for g in [&q, &v, &w] {
            if g.ax1 != ax1 || g.ax2 != ax2 {
                return Err(Error::InvalidInput("sampled potentials must share one grid".into()));
            }
        }
        if ax1.n < 2 * SAMPLED_MARGIN + 4 || ax2.n < 2 * SAMPLED_MARGIN + 4 {
            return Err(Error::InvalidInput("sampled grid too small for third derivatives".into()));
        }
        let mut derivs = Vec::new();
        for g in [&p, &q, &v, &w] {
            let mut per = Vec::new();
            for d in 0..=SAMPLED_ORDER {
                for o2 in 0..=d {
                    let o1 = d - o2;
                    let vals = (0..ax1.n)
                        .flat_map(|i| (0..ax2.n).map(move |j| (i, j)))
                        .map(|(i, j)| g.deriv(i, j, o1, o2).ok())
                        .collect();
                    per.push(((o1, o2), vals));
                }
            }
            derivs.push(per);
        }
        Ok(SampledModel { ax1, ax2, derivs })
    }

    /// Rectangle on which every interpolation stencil has valid derivative data.
    fn valid_rect(&self) -> Rect {
        let m = SAMPLED_MARGIN + 1;
        Rect::new(
            (self.ax1.at(m), self.ax1.at(self.ax1.n - 1 - m)),
            (self.ax2.at(m), self.ax2.at(self.ax2.n - 1 - m)),
        )
    }

    fn weights(ax: &Axis, t: f64) -> Option<(usize, Vec<f64>)> {
        let h = ax.step();
        let s = (t - ax.start) / h;
        let near = s.round();
        if (s - near).abs() < 1e-9 {
            let i = near as i64;
            if i < 0 || i as usize >= ax.n {
                return None;
            }
            return Some((i as usize, vec![1.0]));
        }
        let i0 = s.floor() as i64 - 1;
        if i0 < 0 || i0 as usize + 3 >= ax.n {
            return None;
        }
        let xs: Vec<f64> = (0..4).map(|m| (i0 + m) as f64).collect();
        let w = (0..4)
            .map(|a| {
                (0..4).filter(|&b| b != a).map(|b| (s - xs[b]) / (xs[a] - xs[b])).product::<f64>()
            })
            .collect();
        Some((i0 as usize, w))
    }
}

impl PotentialModel for SampledModel {
    fn jets(&self, r1: f64, r2: f64, order: usize) -> Result<FieldJets> {
        let n = order.min(SAMPLED_ORDER);
        let (i0, w1) = Self::weights(&self.ax1, r1).ok_or(Error::StencilOutOfDomain { r1, r2 })?;
        let (j0, w2) = Self::weights(&self.ax2, r2).ok_or(Error::StencilOutOfDomain { r1, r2 })?;
        let mut comps = Vec::with_capacity(4);
        for per in &self.derivs {
            let mut derivs = vec![vec![0.0; n + 1]; n + 1];
            for ((o1, o2), vals) in per {
                if o1 + o2 > n {
                    continue;
                }
                let mut acc = 0.0;
                for (a, wa) in w1.iter().enumerate() {
                    for (b, wb) in w2.iter().enumerate() {
                        let v = vals[(i0 + a) * self.ax2.n + j0 + b].ok_or(Error::StencilOutOfDomain { r1, r2 })?;
                        acc += wa * wb * v;
                    }
                }
                derivs[*o1][*o2] = acc;
            }
            comps.push(jet_from_partials(&derivs, n));
        }
        let w = comps.pop().unwrap();
        let v = comps.pop().unwrap();
        let q = comps.pop().unwrap();
        let p = comps.pop().unwrap();
        Ok(FieldJets { p, q, v, w })
    }
}

/// Jet from a table of partial derivatives `d[i][j] = ∂₁ⁱ∂₂ʲ f`.
pub fn jet_from_partials(d: &[Vec<f64>], order: usize) -> Jet {
    let x = Jet::var1(0.0, order);
    let y = Jet::var2(0.0, order);
    let mut out = Jet::zero(order);
    let mut fi = 1.0;
    for (i, row) in d.iter().enumerate().take(order + 1) {
        if i > 0 {
            fi *= i as f64;
        }
        let mut fj = 1.0;
        for (j, val) in row.iter().enumerate().take(order + 1 - i) {
            if j > 0 {
                fj *= j as f64;
            }
            out = out + x.powi(i as u32) * y.powi(j as u32) * (val / (fi * fj));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Rect {
        Rect::new((0.5, 1.5), (0.5, 1.5))
    }

    fn c0() -> PotentialField {
        make_c0_family(&C0Params::default(), unit()).unwrap()
    }

    #[test]
    fn constant_field_is_compatible_with_trivial_coefficients() {
        let f = PotentialField::constant(1.0, 1.0, 0.0, 0.0, unit());
        assert_eq!(gauss_codazzi_residual(&f, 1.0, 1.0).unwrap(), [0.0; 3]);
        let d = derived_coeffs(&f, 1.0, 1.0).unwrap();
        assert_eq!((d.k, d.l, d.a, d.b), (1.0, Some(1.0), 0.0, 0.0));
    }

    #[test]
    fn c0_family_is_compatible() {
        let f = c0();
        let worst = gc_max_residual(&f, unit(), 21).unwrap();
        assert!(worst < 1e-9, "residual {worst}");
        for r in lie_gc_residual(&f, 0.8, 1.2).unwrap() {
            assert!(r.abs() < 1e-9);
        }
    }

    #[test]
    fn c0_profile_matches_taylor_series_from_origin() {
        let p = C0Params::default();
        let prof = Profile::new(p.alpha, p.rho[0], p.s[0], p.init[0], 0.0, 0.2, 1e6).unwrap();
        // reference: high-order Taylor series directly from t = 0
        let c = prof.taylor(p.init[0], 30);
        let t: f64 = 0.15;
        let reference: f64 = c.iter().enumerate().map(|(m, cm)| cm * t.powi(m as i32)).sum();
        assert!((prof.derivs(t, 0).unwrap()[0] - reference).abs() < 1e-12);
        let d = prof.derivs(t, 2).unwrap();
        assert!((d[2] - (p.alpha * d[0] * d[0] + p.rho[0] * d[0] + p.s[0])).abs() < 1e-12);
    }

    #[test]
    fn c0_degenerate_parameters_give_linear_potentials() {
        let params = C0Params {
            alpha: 0.0,
            rho: [0.0, 0.0],
            s: [0.0, 0.0],
            init: [[0.0, 1.0], [0.0, 1.0]],
            ..C0Params::default()
        };
        let f = make_c0_family(&params, unit()).unwrap();
        let [e0, e1, e2] = params.eps;
        let (x, y) = (0.7, 1.3);
        let [p, q, v, w] = f.values(x, y).unwrap();
        assert!((p - 1.0).abs() < 1e-13 && (q + 1.0).abs() < 1e-13);
        assert!((v - (e1 + e0 * x)).abs() < 1e-12);
        assert!((w - (e2 + e0 * y)).abs() < 1e-12);
    }

    #[test]
    fn c0_potentials_are_affine_in_deformation_parameters() {
        let field = |eps: [f64; 3]| make_c0_family(&C0Params { eps, ..C0Params::default() }, unit()).unwrap();
        let (a, b) = ([0.1, 0.2, 0.3], [-0.4, 0.7, 0.05]);
        let sum = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
        let (fa, fb, f0, fs) = (field(a), field(b), field([0.0; 3]), field(sum));
        for (x, y) in [(0.6, 0.9), (1.4, 1.1)] {
            let [_, _, va, wa] = fa.values(x, y).unwrap();
            let [_, _, vb, wb] = fb.values(x, y).unwrap();
            let [_, _, v0, w0] = f0.values(x, y).unwrap();
            let [_, _, vs, ws] = fs.values(x, y).unwrap();
            assert!((va + vb - v0 - vs).abs() < 1e-12);
            assert!((wa + wb - w0 - ws).abs() < 1e-12);
        }
    }

    #[test]
    fn c0_blowup_is_reported() {
        let params = C0Params { alpha: 50.0, init: [[5.0, 5.0], [1.0, 0.0]], ..C0Params::default() };
        let r = make_c0_family(&params, Rect::new((0.5, 3.0), (0.5, 1.5)));
        assert!(matches!(r, Err(Error::OdeBlowUp { .. })));
    }

    #[test]
    fn perturbed_field_breaks_compatibility() {
        let f = c0().perturb_v(|_, y| y * 0.1);
        let r = gauss_codazzi_residual(&f, 1.0, 1.0).unwrap();
        // third equation picks up ∂₂(0.1 R²) = 0.1
        assert!((r[2] - 0.1).abs() < 1e-9);
        assert!(r[0].abs() < 1e-9 && r[1].abs() < 1e-9);
    }

    #[test]
    fn c1_constraint_holds() {
        let params = C1Params { f1: vec![1.0], f2: vec![1.0], eps: [0.0; 3] };
        let dom = Rect::new((-0.8, -0.2), (0.2, 0.8));
        let f = make_c1_family(&params, dom).unwrap();
        let j = f.jets(-0.5, 0.4, 2).unwrap();
        let pq = j.p.value() * j.q.value();
        assert!((j.p.ln().d(1, 1) - pq).abs() < 1e-12);
        assert!((j.q.ln().d(1, 1) - pq).abs() < 1e-12);
        assert!((j.p.value() - 1.0 / 0.9).abs() < 1e-14);
        assert!((j.p.value() + j.q.value()).abs() < 1e-14);
        assert!(gc_max_residual(&f, dom, 11).unwrap() < 1e-9);
    }

    #[test]
    fn c1_monopole_field_is_accepted_and_compatible() {
        let params = C1Params::monopole(0.0, -4.0, 0.0, [0.2, -0.3, 0.1]);
        let dom = Rect::new((-0.8, -0.2), (0.2, 0.8));
        let f = make_c1_family(&params, dom).unwrap();
        assert!(gc_max_residual(&f, dom, 11).unwrap() < 1e-8);
    }

    #[test]
    fn c1_rejects_bad_domains() {
        let params = C1Params::monopole(0.0, -4.0, 0.0, [0.0; 3]);
        assert!(matches!(
            make_c1_family(&params, Rect::new((-0.8, 0.3), (0.2, 0.8))),
            Err(Error::DomainViolation(_))
        ));
        assert!(matches!(
            make_c1_family(&params, Rect::new((0.2, 0.4), (0.5, 0.8))),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn landau_field_values_and_compatibility() {
        let f = make_canal_landau(&CanalParams::default(), unit()).unwrap();
        let [p, q, v, w] = f.values(0.8, 0.6).unwrap();
        assert_eq!((p, q, w), (1.6, 0.0, -2.0));
        assert!((v - 2.0 * 0.64).abs() < 1e-15);
        assert!(gc_max_residual(&f, unit(), 5).unwrap() < 1e-12);
        let d = derived_coeffs(&f, 0.8, 0.6).unwrap();
        assert_eq!(d.k, 0.0);
        assert_eq!(d.b, v);
        assert_eq!(d.l, None);
    }

    #[test]
    fn schwarzian_examples() {
        assert_eq!(schwarzian(|t| t.clone(), 0.3).unwrap(), 0.0);
        assert!((schwarzian(|t| t.exp(), 0.3).unwrap() + 0.5).abs() < 1e-14);
        let m = schwarzian(|t| (t * 2.0 + 1.0) / (t + 3.0), 0.4).unwrap();
        assert!(m.abs() < 1e-13);
        assert!(matches!(schwarzian(|t| t.powi(2), 0.0), Err(Error::DegenerateJet { .. })));
    }

    #[test]
    fn gauge_scaling_of_constant_field() {
        let f = PotentialField::constant(1.0, 1.0, 0.0, 0.0, unit());
        let g = GaugeMap { f: GaugeFn::Affine { a: 2.0, b: 0.0 }, g: GaugeFn::Identity };
        let h = apply_gauge(&f, &g).unwrap();
        assert_eq!(h.domain(), Rect::new((1.0, 3.0), (0.5, 1.5)));
        let [p, q, v, w] = h.values(2.0, 1.0).unwrap();
        assert!((p - 0.25).abs() < 1e-15 && (q - 2.0).abs() < 1e-15);
        assert!(v.abs() < 1e-15 && w.abs() < 1e-15);
    }

    #[test]
    fn gauge_preserves_compatibility() {
        let f = c0();
        let map = GaugeMap {
            f: GaugeFn::Mobius { a: 2.0, b: 1.0, c: 1.0, d: 3.0 },
            g: GaugeFn::Exp,
        };
        let h = apply_gauge(&f, &map).unwrap();
        let worst = gc_max_residual(&h, h.domain(), 9).unwrap();
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn gauge_composition_matches_sequential_application() {
        let f = c0();
        let g1 = GaugeMap { f: GaugeFn::Exp, g: GaugeFn::Affine { a: 0.5, b: 1.0 } };
        let g2 = GaugeMap { f: GaugeFn::Affine { a: 3.0, b: -1.0 }, g: GaugeFn::Mobius { a: 1.0, b: 0.0, c: 0.2, d: 1.0 } };
        let twice = apply_gauge(&apply_gauge(&f, &g1).unwrap(), &g2).unwrap();
        let composed = GaugeMap {
            f: GaugeFn::Compose { outer: Box::new(g2.f.clone()), inner: Box::new(g1.f.clone()) },
            g: GaugeFn::Compose { outer: Box::new(g2.g.clone()), inner: Box::new(g1.g.clone()) },
        };
        let once = apply_gauge(&f, &composed).unwrap();
        let (s1, s2) = (composed.f.value(1.1), composed.g.value(0.9));
        let a = twice.values(s1, s2).unwrap();
        let b = once.values(s1, s2).unwrap();
        for k in 0..4 {
            assert!((a[k] - b[k]).abs() < 1e-12 * (1.0 + a[k].abs()));
        }
    }

    #[test]
    fn invariant_metric_is_gauge_invariant() {
        let f = c0();
        let map = GaugeMap { f: GaugeFn::Affine { a: 2.0, b: 0.0 }, g: GaugeFn::Exp };
        let h = apply_gauge(&f, &map).unwrap();
        let (x, y) = (0.9, 1.2);
        let dir = (0.3, -0.7);
        let pushed = (map.f.derivative(x) * dir.0, map.g.derivative(y) * dir.1);
        let (m0, c0) = invariant_forms(&f, x, y, dir).unwrap();
        let (m1, c1) = invariant_forms(&h, map.f.value(x), map.g.value(y), pushed).unwrap();
        assert!((m0 - m1).abs() < 1e-12);
        // p dR¹³ − q dR²³ scales by f′ g′
        let factor = map.f.derivative(x) * map.g.derivative(y);
        assert!((c1 - factor * c0).abs() < 1e-12);
        let (_, cubic) = invariant_forms(&f, x, y, (1.0, 0.0)).unwrap();
        assert_eq!(cubic, f.values(x, y).unwrap()[0]);
    }

    #[test]
    fn swapped_dual_canal_is_canal() {
        let land = make_canal_landau(&CanalParams::default(), unit()).unwrap();
        let dual = land.swapped(false);
        let [p, q, _, _] = dual.values(0.7, 0.9).unwrap();
        assert_eq!(p, 0.0);
        assert!((q + 1.8).abs() < 1e-15);
        assert!(gc_max_residual(&dual, dual.domain(), 5).unwrap() < 1e-12);
        let back = dual.swapped(true);
        assert!(back.is_canal());
        assert_eq!(back.values(0.9, 0.7).unwrap(), land.values(0.9, 0.7).unwrap());
    }

    #[test]
    fn swapping_preserves_compatibility() {
        let f = c0().swapped(false);
        assert!(gc_max_residual(&f, f.domain(), 9).unwrap() < 1e-9);
    }

    #[test]
    fn sampled_field_reproduces_analytic_residuals() {
        let f = c0();
        let ax = Axis::new(0.5, 1.5, 101);
        let comp = |k: usize| Grid2::from_fn(ax, ax, |x, y| f.values(x, y).unwrap()[k]);
        let s = PotentialField::sampled(comp(0), comp(1), comp(2), comp(3), false).unwrap();
        let worst = gc_max_residual(&s, s.domain(), 11).unwrap();
        assert!(worst < 1e-4, "{worst}");
        let a = derived_coeffs(&f, 1.0, 1.0).unwrap();
        let b = derived_coeffs(&s, 1.0, 1.0).unwrap();
        assert!((a.k - b.k).abs() < 1e-6 && (a.a - b.a).abs() < 1e-6);
        // off-node evaluation through interpolation
        let [p, ..] = s.values(1.0037, 0.9521).unwrap();
        assert!((p - f.values(1.0037, 0.9521).unwrap()[0]).abs() < 1e-8);
    }
}
