//! Rectangular domains, uniform grids, and fourth-order central differences.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values that finite-difference stencils can combine.
pub trait Sample: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}

impl<T> Sample for T where T: Copy + Default + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

/// Axis-aligned rectangle `[r1.0, r1.1] × [r2.0, r2.1]` in the `(R¹, R²)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub r1: (f64, f64),
    pub r2: (f64, f64),
}

impl Rect {
    pub fn new(r1: (f64, f64), r2: (f64, f64)) -> Self {
        Rect { r1, r2 }
    }

    pub fn contains(&self, r1: f64, r2: f64) -> bool {
        let slack = 1e-12 * (1.0 + self.r1.1.abs().max(self.r2.1.abs()));
        r1 >= self.r1.0 - slack && r1 <= self.r1.1 + slack && r2 >= self.r2.0 - slack && r2 <= self.r2.1 + slack
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.contains(other.r1.0, other.r2.0) && self.contains(other.r1.1, other.r2.1)
    }

    pub fn check(&self, r1: f64, r2: f64) -> Result<()> {
        if self.contains(r1, r2) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { r1, r2 })
        }
    }
}

/// Uniform axis with `n` nodes from `start` to `end` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(start: f64, end: f64, n: usize) -> Self {
        assert!(n >= 2, "an axis needs at least two nodes");
        Axis { start, end, n }
    }

    /// Axis of spacing `h` starting at `start` with `n` nodes.
    pub fn with_step(start: f64, h: f64, n: usize) -> Self {
        Axis::new(start, start + h * (n - 1) as f64, n)
    }

    pub fn step(&self) -> f64 {
        (self.end - self.start) / (self.n - 1) as f64
    }

    pub fn at(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.end
        } else {
            self.start + self.step() * i as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.at(i)).collect()
    }

    /// The axis with `m` nodes removed from each end.
    pub fn shrink(&self, m: usize) -> Axis {
        Axis::new(self.at(m), self.at(self.n - 1 - m), self.n - 2 * m)
    }
}

/// Samples on the tensor grid `ax1 × ax2`, stored with the `R²` index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2<T> {
    pub ax1: Axis,
    pub ax2: Axis,
    pub data: Vec<T>,
}

/// One-dimensional fourth-order central stencil: offsets `-m..=m` and weights
/// for a unit step.
fn stencil(order: usize) -> (i64, &'static [f64]) {
    match order {
        0 => (0, &[1.0]),
        1 => (2, &[1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0]),
        2 => (2, &[-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0]),
        3 => (3, &[1.0 / 8.0, -1.0, 13.0 / 8.0, 0.0, -13.0 / 8.0, 1.0, -1.0 / 8.0]),
        _ => panic!("no stencil for derivative order {order}"),
    }
}

/// Half-width of the stencil for a derivative of the given order.
pub fn stencil_margin(order: usize) -> usize {
    stencil(order).0 as usize
}

impl<T: Sample> Grid2<T> {
    pub fn from_fn(ax1: Axis, ax2: Axis, mut f: impl FnMut(f64, f64) -> T) -> Self {
        let mut data = Vec::with_capacity(ax1.n * ax2.n);
        for i in 0..ax1.n {
            for j in 0..ax2.n {
                data.push(f(ax1.at(i), ax2.at(j)));
            }
        }
        Grid2 { ax1, ax2, data }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.ax1.n, self.ax2.n)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.ax2.n + j]
    }

    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.ax1.at(i), self.ax2.at(j))
    }

    pub fn map<U: Sample>(&self, f: impl Fn(T) -> U) -> Grid2<U> {
        Grid2 { ax1: self.ax1, ax2: self.ax2, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    /// Fourth-order approximation of `∂₁^{o1} ∂₂^{o2}` at node `(i, j)`, orders up to 3.
    pub fn deriv(&self, i: usize, j: usize, o1: usize, o2: usize) -> Result<T> {
        let (m1, w1) = stencil(o1);
        let (m2, w2) = stencil(o2);
        let (n1, n2) = self.shape();
        if (i as i64) < m1 || (j as i64) < m2 || i as i64 + m1 >= n1 as i64 || j as i64 + m2 >= n2 as i64 {
            let (r1, r2) = self.point(i, j);
            return Err(Error::StencilOutOfDomain { r1, r2 });
        }
        let scale = self.ax1.step().powi(o1 as i32) * self.ax2.step().powi(o2 as i32);
        let mut acc = T::default();
        for (a, wa) in w1.iter().enumerate() {
            if *wa == 0.0 {
                continue;
            }
            let ii = (i as i64 + a as i64 - m1) as usize;
            for (b, wb) in w2.iter().enumerate() {
                if *wb == 0.0 {
                    continue;
                }
                let jj = (j as i64 + b as i64 - m2) as usize;
                acc = acc + self.get(ii, jj) * (wa * wb);
            }
        }
        Ok(acc * (1.0 / scale))
    }

    /// Restriction to the nodes at least `m` away from every edge.
    pub fn shrink(&self, m: usize) -> Grid2<T> {
        let (a1, a2) = (self.ax1.shrink(m), self.ax2.shrink(m));
        let data = (m..self.ax1.n - m).flat_map(|i| (m..self.ax2.n - m).map(move |j| self.get(i, j))).collect();
        Grid2 { ax1: a1, ax2: a2, data }
    }

    /// Index range of nodes at least `margin` away from every edge.
    pub fn interior(&self, margin: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (n1, n2) = self.shape();
        (margin..n1.saturating_sub(margin)).flat_map(move |i| (margin..n2.saturating_sub(margin)).map(move |j| (i, j)))
    }
}

/// Fourth-order central derivative of order `o ≤ 3` of a function of one variable.
pub fn central_diff<T: Sample>(f: impl Fn(f64) -> T, x: f64, h: f64, o: usize) -> T {
    let (m, w) = stencil(o);
    let mut acc = T::default();
    for (a, wa) in w.iter().enumerate() {
        if *wa != 0.0 {
            acc = acc + f(x + (a as i64 - m) as f64 * h) * *wa;
        }
    }
    acc * (1.0 / h.powi(o as i32))
}
