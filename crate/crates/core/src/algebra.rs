//! Pseudo-Hermitian linear algebra on C⁴ and Λ²(C⁴).
//!
//! Storage order is frozen: a twistor vector is `(a⁰, a¹, a², a³)` and a
//! bivector is stored in hexaspherical order `(y⁰, …, y⁵)`. The form on C⁴ is
//!
//! ```text
//! (a, b) = −a⁰ b̄³ + a¹ b̄² + a² b̄¹ − a³ b̄⁰          signature (2, 2)
//! ```
//!
//! and the wedge map sends `a ∧ b` to
//!
//! ```text
//! y⁰ = (p₀₂ − p₃₁)/2    y¹ = (p₀₂ + p₃₁)/2    y² = (p₀₃ + p₁₂)/2
//! y³ = (p₀₃ − p₁₂)/2i   y⁴ = (p₀₁ − p₂₃)/2i   y⁵ = (p₀₁ + p₂₃)/2i
//! ```
//!
//! with `pᵢⱼ = aⁱbʲ − aʲbⁱ`. In these coordinates both induced forms on Λ²
//! are diagonal with signs `(−, +, +, +, +, −)`.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

/// Absolute tolerance on imaginary parts for a bivector to count as real.
pub const EPS_REAL: f64 = 1e-10;

/// Diagonal signs of the (4, 2) forms on Λ²(C⁴) in hexaspherical order.
pub const HEX_SIGNS: [f64; 6] = [-1.0, 1.0, 1.0, 1.0, 1.0, -1.0];

const I: C64 = C64::new(0.0, 1.0);

/// Element of C⁴.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TwistorVector(pub [C64; 4]);

impl TwistorVector {
    pub const ZERO: TwistorVector = TwistorVector([C64::new(0.0, 0.0); 4]);

    pub fn new(a0: C64, a1: C64, a2: C64, a3: C64) -> Self {
        TwistorVector([a0, a1, a2, a3])
    }

    /// Standard basis vector `eᵢ`.
    pub fn basis(i: usize) -> Self {
        let mut v = Self::ZERO;
        v.0[i] = C64::new(1.0, 0.0);
        v
    }

    pub fn from_real(a: [f64; 4]) -> Self {
        TwistorVector(a.map(|x| C64::new(x, 0.0)))
    }

    pub fn conj(&self) -> Self {
        TwistorVector(self.0.map(|z| z.conj()))
    }

    pub fn norm_max(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Index<usize> for TwistorVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl Add for TwistorVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        TwistorVector(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl Sub for TwistorVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        TwistorVector(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl Neg for TwistorVector {
    type Output = Self;
    fn neg(self) -> Self {
        TwistorVector(self.0.map(|z| -z))
    }
}

impl Mul<C64> for TwistorVector {
    type Output = Self;
    fn mul(self, s: C64) -> Self {
        TwistorVector(self.0.map(|z| z * s))
    }
}

impl Mul<f64> for TwistorVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        TwistorVector(self.0.map(|z| z * s))
    }
}

/// Element of Λ²(C⁴) in hexaspherical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Bivector6(pub [C64; 6]);

impl Bivector6 {
    pub const ZERO: Bivector6 = Bivector6([C64::new(0.0, 0.0); 6]);

    pub fn from_real(y: [f64; 6]) -> Self {
        Bivector6(y.map(|x| C64::new(x, 0.0)))
    }

    /// Componentwise conjugation of the hexaspherical coordinates.
    pub fn conj(&self) -> Self {
        Bivector6(self.0.map(|z| z.conj()))
    }

    pub fn real_part(&self) -> [f64; 6] {
        self.0.map(|z| z.re)
    }

    pub fn max_imag(&self) -> f64 {
        self.0.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// True when every imaginary part is below [`EPS_REAL`].
    pub fn is_real(&self) -> bool {
        self.max_imag() <= EPS_REAL
    }

    pub fn norm_max(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Index<usize> for Bivector6 {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl Add for Bivector6 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Bivector6(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl AddAssign for Bivector6 {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Sub for Bivector6 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Bivector6(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl Neg for Bivector6 {
    type Output = Self;
    fn neg(self) -> Self {
        Bivector6(self.0.map(|z| -z))
    }
}

impl Mul<C64> for Bivector6 {
    type Output = Self;
    fn mul(self, s: C64) -> Self {
        Bivector6(self.0.map(|z| z * s))
    }
}

impl Mul<f64> for Bivector6 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Bivector6(self.0.map(|z| z * s))
    }
}

/// Pseudo-Hermitian product of signature (2, 2) on C⁴, antilinear in `b`.
pub fn herm_product4(a: &TwistorVector, b: &TwistorVector) -> C64 {
    -a[0] * b[3].conj() + a[1] * b[2].conj() + a[2] * b[1].conj() - a[3] * b[0].conj()
}

/// Determinant of the 4×4 matrix with rows `a, b, c, d`.
pub fn det4(a: &TwistorVector, b: &TwistorVector, c: &TwistorVector, d: &TwistorVector) -> C64 {
    let m = Matrix4::from_fn(|i, j| [a, b, c, d][i].0[j]);
    m.determinant()
}

/// Hexaspherical coordinates of `a ∧ b`.
pub fn wedge_to_hex(a: &TwistorVector, b: &TwistorVector) -> Bivector6 {
    let p = |i: usize, j: usize| a[i] * b[j] - a[j] * b[i];
    let (p01, p02, p03) = (p(0, 1), p(0, 2), p(0, 3));
    let (p12, p23, p31) = (p(1, 2), p(2, 3), p(3, 1));
    let two_i = I * 2.0;
    Bivector6([
        (p02 - p31) * 0.5,
        (p02 + p31) * 0.5,
        (p03 + p12) * 0.5,
        (p03 - p12) / two_i,
        (p01 - p23) / two_i,
        (p01 + p23) / two_i,
    ])
}

/// Pseudo-Hermitian product of signature (4, 2) on Λ²(C⁴).
pub fn herm_product6(x: &Bivector6, y: &Bivector6) -> C64 {
    (0..6).map(|i| x[i] * y[i].conj() * HEX_SIGNS[i]).sum()
}

/// Complex bilinear product on Λ²(C⁴); for decomposables it is half the 4×4 determinant.
pub fn complex_product6(x: &Bivector6, y: &Bivector6) -> C64 {
    (0..6).map(|i| x[i] * y[i] * HEX_SIGNS[i]).sum()
}

/// Real (4, 2) form `−y₀z₀ + y₁z₁ + y₂z₂ + y₃z₃ + y₄z₄ − y₅z₅` on real hexaspherical vectors.
pub fn lie_product(y: &[f64; 6], z: &[f64; 6]) -> f64 {
    (0..6).map(|i| y[i] * z[i] * HEX_SIGNS[i]).sum()
}

/// Gram matrix `G[i][j] = (vᵢ, vⱼ)` of four twistor vectors.
pub fn gram4(v: &[TwistorVector; 4]) -> Matrix4<C64> {
    Matrix4::from_fn(|i, j| herm_product4(&v[i], &v[j]))
}

/// Gram matrix of the pseudo-Hermitian form in the standard basis; also the
/// target Gram matrix of a normalized null tetrad `(ψ, ψ₁, ψ₂, η)`.
pub fn null_tetrad_gram() -> Matrix4<C64> {
    let mut j = Matrix4::zeros();
    j[(0, 3)] = C64::new(-1.0, 0.0);
    j[(3, 0)] = C64::new(-1.0, 0.0);
    j[(1, 2)] = C64::new(1.0, 0.0);
    j[(2, 1)] = C64::new(1.0, 0.0);
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(rng: &mut ChaCha8Rng) -> TwistorVector {
        TwistorVector(std::array::from_fn(|_| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        }))
    }

    // Leibniz sum over all 24 permutations.
    fn det_leibniz(rows: [&TwistorVector; 4]) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        let mut perm = [0usize, 1, 2, 3];
        fn sign(p: &[usize; 4]) -> f64 {
            let mut s = 1.0;
            for i in 0..4 {
                for j in i + 1..4 {
                    if p[i] > p[j] {
                        s = -s;
                    }
                }
            }
            s
        }
        fn rec(k: usize, perm: &mut [usize; 4], rows: &[&TwistorVector; 4], acc: &mut C64) {
            if k == 4 {
                let mut prod = C64::new(sign(perm), 0.0);
                for (i, &j) in perm.iter().enumerate() {
                    prod *= rows[i][j];
                }
                *acc += prod;
                return;
            }
            for i in k..4 {
                perm.swap(k, i);
                rec(k + 1, perm, rows, acc);
                perm.swap(k, i);
            }
        }
        rec(0, &mut perm, &rows, &mut total);
        total
    }

    #[test]
    fn herm4_basis_values() {
        let e: Vec<_> = (0..4).map(TwistorVector::basis).collect();
        assert_eq!(herm_product4(&e[0], &e[3]), C64::new(-1.0, 0.0));
        assert_eq!(herm_product4(&e[1], &e[2]), C64::new(1.0, 0.0));
        assert_eq!(herm_product4(&e[0], &e[0]), C64::new(0.0, 0.0));
    }

    #[test]
    fn herm4_matches_matrix_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let j = null_tetrad_gram();
        for _ in 0..100 {
            let (a, b) = (rand_vec(&mut rng), rand_vec(&mut rng));
            let va = nalgebra::RowVector4::from_fn(|_, k| a[k]);
            let vb = nalgebra::Vector4::from_fn(|k, _| b[k].conj());
            let oracle = (va * j * vb)[(0, 0)];
            assert!((herm_product4(&a, &b) - oracle).norm() < 1e-14);
            assert!((herm_product4(&a, &b) - herm_product4(&b, &a).conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn herm4_signature_is_2_2() {
        let j = null_tetrad_gram().map(|z| z.re);
        let mut ev: Vec<f64> = j.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [-1.0, -1.0, 1.0, 1.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn det4_identity_and_alternation() {
        let e: Vec<_> = (0..4).map(TwistorVector::basis).collect();
        assert!((det4(&e[0], &e[1], &e[2], &e[3]) - 1.0).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, b, c) = (rand_vec(&mut rng), rand_vec(&mut rng), rand_vec(&mut rng));
        assert!(det4(&a, &b, &a, &c).norm() < 1e-14);
        assert!(det4(&a, &b, &c, &c).norm() < 1e-14);
    }

    #[test]
    fn det4_matches_leibniz() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let v: Vec<_> = (0..4).map(|_| rand_vec(&mut rng)).collect();
            let d = det4(&v[0], &v[1], &v[2], &v[3]);
            let oracle = det_leibniz([&v[0], &v[1], &v[2], &v[3]]);
            assert!((d - oracle).norm() <= 1e-13 * oracle.norm().max(1.0));
        }
    }

    #[test]
    fn wedge_of_e0_e1() {
        let w = wedge_to_hex(&TwistorVector::basis(0), &TwistorVector::basis(1));
        let expected = [0.0, 0.0, 0.0, 0.0, -0.5, -0.5];
        for k in 0..6 {
            assert!(w[k].re.abs() < 1e-16);
            assert!((w[k].im - expected[k]).abs() < 1e-16);
        }
    }

    #[test]
    fn wedge_self_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = rand_vec(&mut rng);
        assert_eq!(wedge_to_hex(&a, &a).norm_max(), 0.0);
    }

    #[test]
    fn decomposables_lie_on_the_quadric() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let (a, b) = (rand_vec(&mut rng), rand_vec(&mut rng));
            let w = wedge_to_hex(&a, &b);
            // {a∧b, a∧b} is half the determinant with repeated rows
            assert!(complex_product6(&w, &w).norm() < 1e-13);
            assert!(det4(&a, &b, &a, &b).norm() < 1e-13);
        }
    }

    #[test]
    fn herm6_matches_pairing_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let v: Vec<_> = (0..4).map(|_| rand_vec(&mut rng)).collect();
            let (a, b, aa, bb) = (&v[0], &v[1], &v[2], &v[3]);
            let lhs = herm_product6(&wedge_to_hex(a, b), &wedge_to_hex(aa, bb));
            let rhs = (herm_product4(a, bb) * herm_product4(b, aa)
                - herm_product4(a, aa) * herm_product4(b, bb))
                * 0.5;
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn complex6_matches_half_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let v: Vec<_> = (0..4).map(|_| rand_vec(&mut rng)).collect();
            let lhs = complex_product6(&wedge_to_hex(&v[0], &v[1]), &wedge_to_hex(&v[2], &v[3]));
            let rhs = det_leibniz([&v[0], &v[1], &v[2], &v[3]]) * 0.5;
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn unit_sphere_is_null() {
        let y = Bivector6::from_real([0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(herm_product6(&y, &y), C64::new(0.0, 0.0));
    }

    #[test]
    fn conjugation_preserves_decomposability() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..50 {
            let w = wedge_to_hex(&rand_vec(&mut rng), &rand_vec(&mut rng)).conj();
            assert!(complex_product6(&w, &w).norm() < 1e-13);
            assert_eq!(w.conj().conj(), w);
        }
    }

    #[test]
    fn real_flag() {
        let mut y = Bivector6::from_real([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!(y.is_real());
        y.0[3].im = 1e-9;
        assert!(!y.is_real());
    }
}
