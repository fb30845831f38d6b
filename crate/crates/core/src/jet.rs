//! Truncated bivariate Taylor series ("jets") in the variables `(R¹, R²)`.
//!
//! A jet of order `n` stores `c[i][j] = ∂₁ⁱ∂₂ʲ f / (i! j!)` at an expansion
//! point for `i + j ≤ n`, packed by total degree. Arithmetic truncates to the
//! smaller order of its operands, which makes jets a forward-mode automatic
//! differentiation scheme for the closed-form fields in this crate.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    order: usize,
    c: Vec<f64>,
}

#[inline]
fn idx(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

fn len_for(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Jet {
    pub fn zero(order: usize) -> Self {
        Jet { order, c: vec![0.0; len_for(order)] }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut j = Self::zero(order);
        j.c[0] = value;
        j
    }

    /// The coordinate function `R¹` expanded at `x0`.
    pub fn var1(x0: f64, order: usize) -> Self {
        let mut j = Self::constant(x0, order);
        if order > 0 {
            j.c[idx(1, 0)] = 1.0;
        }
        j
    }

    /// The coordinate function `R²` expanded at `y0`.
    pub fn var2(y0: f64, order: usize) -> Self {
        let mut j = Self::constant(y0, order);
        if order > 0 {
            j.c[idx(0, 1)] = 1.0;
        }
        j
    }

    /// Jet of a function of `R¹` alone from its derivatives `f, f', f'', …`.
    pub fn from_derivs1(derivs: &[f64], order: usize) -> Self {
        let mut j = Self::zero(order);
        for (i, d) in derivs.iter().enumerate().take(order + 1) {
            j.c[idx(i, 0)] = d / factorial(i);
        }
        j
    }

    /// Jet of a function of `R²` alone from its derivatives.
    pub fn from_derivs2(derivs: &[f64], order: usize) -> Self {
        let mut j = Self::zero(order);
        for (i, d) in derivs.iter().enumerate().take(order + 1) {
            j.c[idx(0, i)] = d / factorial(i);
        }
        j
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Taylor coefficient of `(R¹−x0)ⁱ (R²−y0)ʲ`.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            panic!("jet of order {} has no coefficient ({i}, {j})", self.order);
        }
        self.c[idx(i, j)]
    }

    /// Partial derivative `∂₁ⁱ∂₂ʲ f` at the expansion point.
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.coeff(i, j) * factorial(i) * factorial(j)
    }

    /// `∂₁` as a jet of one lower order.
    pub fn d1(&self) -> Jet {
        assert!(self.order > 0, "cannot differentiate a jet of order 0");
        let n = self.order - 1;
        let mut out = Jet::zero(n);
        for d in 0..=n {
            for j in 0..=d {
                let i = d - j;
                out.c[idx(i, j)] = (i + 1) as f64 * self.c[idx(i + 1, j)];
            }
        }
        out
    }

    /// `∂₂` as a jet of one lower order.
    pub fn d2(&self) -> Jet {
        assert!(self.order > 0, "cannot differentiate a jet of order 0");
        let n = self.order - 1;
        let mut out = Jet::zero(n);
        for d in 0..=n {
            for j in 0..=d {
                let i = d - j;
                out.c[idx(i, j)] = (j + 1) as f64 * self.c[idx(i, j + 1)];
            }
        }
        out
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet { order, c: self.c[..len_for(order)].to_vec() }
    }

    /// Swap the roles of `R¹` and `R²`.
    pub fn transpose(&self) -> Jet {
        let mut out = Jet::zero(self.order);
        for d in 0..=self.order {
            for j in 0..=d {
                out.c[idx(j, d - j)] = self.c[idx(d - j, j)];
            }
        }
        out
    }

    /// Evaluate the truncated polynomial at the offset `(dx, dy)`.
    pub fn eval_offset(&self, dx: f64, dy: f64) -> f64 {
        let mut s = 0.0;
        for d in (0..=self.order).rev() {
            for j in 0..=d {
                s += self.c[idx(d - j, j)] * dx.powi((d - j) as i32) * dy.powi(j as i32);
            }
        }
        s
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { order: self.order, c: self.c.iter().map(|x| x * s).collect() }
    }

    fn mul_jet(&self, other: &Jet) -> Jet {
        let n = self.order.min(other.order);
        let mut out = Jet::zero(n);
        for d1 in 0..=n {
            for j1 in 0..=d1 {
                let a = self.c[idx(d1 - j1, j1)];
                if a == 0.0 {
                    continue;
                }
                for d2 in 0..=(n - d1) {
                    for j2 in 0..=d2 {
                        out.c[idx(d1 - j1 + d2 - j2, j1 + j2)] += a * other.c[idx(d2 - j2, j2)];
                    }
                }
            }
        }
        out
    }

    /// `Σ tₖ hᵏ` where `h = self − self(0)` and `t` are Taylor coefficients of
    /// an outer function at `self(0)`.
    pub fn compose(&self, taylor: &[f64]) -> Jet {
        let n = self.order;
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut out = Jet::constant(taylor[0], n);
        let mut pow = Jet::constant(1.0, n);
        for t in taylor.iter().take(n + 1).skip(1) {
            pow = pow.mul_jet(&h);
            if *t != 0.0 {
                for (o, p) in out.c.iter_mut().zip(&pow.c) {
                    *o += t * p;
                }
            }
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let x = self.value();
        let mut t = Vec::with_capacity(self.order + 1);
        let mut v = 1.0 / x;
        for _ in 0..=self.order {
            t.push(v);
            v *= -1.0 / x;
        }
        self.compose(&t)
    }

    /// `self^α` for real `α`; requires a positive value unless `α` is an integer.
    pub fn powf(&self, alpha: f64) -> Jet {
        let x = self.value();
        let mut t = Vec::with_capacity(self.order + 1);
        let mut coef = 1.0;
        for k in 0..=self.order {
            t.push(coef * x.powf(alpha - k as f64));
            coef *= (alpha - k as f64) / (k + 1) as f64;
        }
        self.compose(&t)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn powi(&self, k: u32) -> Jet {
        let mut out = Jet::constant(1.0, self.order);
        for _ in 0..k {
            out = out.mul_jet(self);
        }
        out
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let t: Vec<f64> = (0..=self.order).map(|k| e / factorial(k)).collect();
        self.compose(&t)
    }

    /// `ln |self|`.
    pub fn ln(&self) -> Jet {
        let x = self.value();
        let mut t = vec![x.abs().ln()];
        for k in 1..=self.order {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            t.push(sign / (k as f64 * x.powi(k as i32)));
        }
        self.compose(&t)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let t: Vec<f64> = (0..=self.order).map(|k| cycle[k % 4] / factorial(k)).collect();
        self.compose(&t)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let t: Vec<f64> = (0..=self.order).map(|k| cycle[k % 4] / factorial(k)).collect();
        self.compose(&t)
    }

    /// Substitute jets `x(s¹, s²)`, `y(s¹, s²)` for `R¹ − x0`, `R² − y0`:
    /// the result is `f(x, y)` expanded in the new variables. The constant parts of
    /// `x` and `y` must be the expansion point of `self`.
    pub fn substitute(&self, x: &Jet, y: &Jet) -> Jet {
        let n = self.order.min(x.order).min(y.order);
        let mut hx = x.truncate(n);
        hx.c[0] = 0.0;
        let mut hy = y.truncate(n);
        hy.c[0] = 0.0;
        let mut px = vec![Jet::constant(1.0, n)];
        let mut py = vec![Jet::constant(1.0, n)];
        for k in 1..=n {
            px.push(px[k - 1].mul_jet(&hx));
            py.push(py[k - 1].mul_jet(&hy));
        }
        let mut out = Jet::zero(n);
        for d in 0..=n {
            for j in 0..=d {
                let c = self.c[idx(d - j, j)];
                if c == 0.0 {
                    continue;
                }
                let term = px[d - j].mul_jet(&py[j]);
                for (o, t) in out.c.iter_mut().zip(&term.c) {
                    *o += c * t;
                }
            }
        }
        out
    }
}

macro_rules! jet_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
        impl $tr<f64> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: f64) -> Jet {
                self.$m(&Jet::constant(rhs, self.order))
            }
        }
        impl $tr<f64> for Jet {
            type Output = Jet;
            fn $m(self, rhs: f64) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl $tr<&Jet> for f64 {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                Jet::constant(self, rhs.order).$m(rhs)
            }
        }
        impl $tr<Jet> for f64 {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                Jet::constant(self, rhs.order).$m(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| {
    let n = a.order.min(b.order);
    Jet { order: n, c: a.c.iter().zip(&b.c).take(len_for(n)).map(|(x, y)| x + y).collect() }
});
jet_binop!(Sub, sub, |a, b| {
    let n = a.order.min(b.order);
    Jet { order: n, c: a.c.iter().zip(&b.c).take(len_for(n)).map(|(x, y)| x - y).collect() }
});
jet_binop!(Mul, mul, |a, b| a.mul_jet(b));
jet_binop!(Div, div, |a, b| a.mul_jet(&b.recip()));

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
