//! Fixed-capacity small tensors for `d ∈ {1, 2, 3}`.
//!
//! Storage is padded to the 3-dimensional size so that values stay `Copy`
//! and the hot assembly loops never touch the heap.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

const S: usize = 3;

/// A `d × d` real matrix (deformation gradients, strains, stresses).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    d: usize,
    a: [f64; 9],
}

impl Mat {
    pub fn zeros(d: usize) -> Self {
        assert!((1..=3).contains(&d), "dimension must be 1, 2 or 3");
        Self { d, a: [0.0; 9] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row-major entries; `rows.len()` must be `d*d`.
    pub fn from_rows(d: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), d * d);
        Self::from_fn(d, |i, j| rows[i * d + j])
    }

    pub fn diag(values: &[f64]) -> Self {
        let d = values.len();
        Self::from_fn(d, |i, j| if i == j { values[i] } else { 0.0 })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.d, |i, j| self[(j, i)])
    }

    pub fn sym(&self) -> Self {
        Self::from_fn(self.d, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    pub fn skew(&self) -> Self {
        Self::from_fn(self.d, |i, j| 0.5 * (self[(i, j)] - self[(j, i)]))
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius inner product `A : B`.
    pub fn ddot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.d, other.d);
        self.a.iter().zip(other.a.iter()).map(|(x, y)| x * y).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        m.a.iter_mut().for_each(|x| *x *= s);
        m
    }

    pub fn det(&self) -> f64 {
        match self.d {
            1 => self[(0, 0)],
            2 => self[(0, 0)] * self[(1, 1)] - self[(0, 1)] * self[(1, 0)],
            _ => {
                let m = |i, j| self[(i, j)];
                m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                    - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                    + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
            }
        }
    }

    /// Cofactor matrix `det(F) F^{-T}`, defined for singular `F` as well.
    pub fn cofactor(&self) -> Self {
        match self.d {
            1 => Self::identity(1),
            2 => Self::from_rows(2, &[self[(1, 1)], -self[(1, 0)], -self[(0, 1)], self[(0, 0)]]),
            _ => Self::from_fn(3, |i, j| {
                let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
                let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                self[(i1, j1)] * self[(i2, j2)] - self[(i1, j2)] * self[(i2, j1)]
            }),
        }
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(self.cofactor().transpose().scale(1.0 / det))
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.d, |i, j| self[(i, j)])
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    /// Canonical basis matrix `E_{kl}`.
    pub fn unit(d: usize, k: usize, l: usize) -> Self {
        let mut m = Self::zeros(d);
        m[(k, l)] = 1.0;
        m
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.a[i * S + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.a[i * S + j]
    }
}

impl Add for Mat {
    type Output = Mat;
    fn add(mut self, rhs: Mat) -> Mat {
        self += rhs;
        self
    }
}

impl AddAssign for Mat {
    fn add_assign(&mut self, rhs: Mat) {
        self.a.iter_mut().zip(rhs.a.iter()).for_each(|(x, y)| *x += y);
    }
}

impl Sub for Mat {
    type Output = Mat;
    fn sub(mut self, rhs: Mat) -> Mat {
        self -= rhs;
        self
    }
}

impl SubAssign for Mat {
    fn sub_assign(&mut self, rhs: Mat) {
        self.a.iter_mut().zip(rhs.a.iter()).for_each(|(x, y)| *x -= y);
    }
}

impl Neg for Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self.scale(-1.0)
    }
}

impl Mul for Mat {
    type Output = Mat;
    fn mul(self, rhs: Mat) -> Mat {
        debug_assert_eq!(self.d, rhs.d);
        let d = self.d;
        let mut m = Mat::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let aik = self[(i, k)];
                for j in 0..d {
                    m[(i, j)] += aik * rhs[(k, j)];
                }
            }
        }
        m
    }
}

impl Mul<f64> for Mat {
    type Output = Mat;
    fn mul(self, s: f64) -> Mat {
        self.scale(s)
    }
}

/// A `d × d × d` real array, the placeholder for second gradients `∇²y`.
///
/// Index `(i, j, k)` is `∂_j ∂_k y_i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor3 {
    d: usize,
    a: [f64; 27],
}

impl Tensor3 {
    pub fn zeros(d: usize) -> Self {
        assert!((1..=3).contains(&d));
        Self { d, a: [0.0; 27] }
    }

    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    t[(i, j, k)] = f(i, j, k);
                }
            }
        }
        t
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.a.iter().zip(other.a.iter()).map(|(x, y)| x * y).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut t = *self;
        t.a.iter_mut().for_each(|x| *x *= s);
        t
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|x| x.is_finite())
    }
}

impl Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.a[(i * S + j) * S + k]
    }
}

impl IndexMut<(usize, usize, usize)> for Tensor3 {
    #[inline]
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        &mut self.a[(i * S + j) * S + k]
    }
}

impl Add for Tensor3 {
    type Output = Tensor3;
    fn add(mut self, rhs: Tensor3) -> Tensor3 {
        self.a.iter_mut().zip(rhs.a.iter()).for_each(|(x, y)| *x += y);
        self
    }
}

impl Sub for Tensor3 {
    type Output = Tensor3;
    fn sub(mut self, rhs: Tensor3) -> Tensor3 {
        self.a.iter_mut().zip(rhs.a.iter()).for_each(|(x, y)| *x -= y);
        self
    }
}

/// A fourth-order tensor acting on `d × d` matrices: `(T H)_{ij} = Σ T_{ijkl} H_{kl}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor4 {
    d: usize,
    a: [f64; 81],
}

impl Tensor4 {
    pub fn zeros(d: usize) -> Self {
        assert!((1..=3).contains(&d));
        Self { d, a: [0.0; 81] }
    }

    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        t[(i, j, k, l)] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    /// Builds the tensor column by column from a linear map on matrices.
    pub fn from_linear_map(d: usize, map: impl Fn(&Mat) -> Mat) -> Self {
        let mut t = Self::zeros(d);
        for k in 0..d {
            for l in 0..d {
                let col = map(&Mat::unit(d, k, l));
                for i in 0..d {
                    for j in 0..d {
                        t[(i, j, k, l)] = col[(i, j)];
                    }
                }
            }
        }
        t
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn apply(&self, h: &Mat) -> Mat {
        let d = self.d;
        Mat::from_fn(d, |i, j| {
            let mut s = 0.0;
            for k in 0..d {
                for l in 0..d {
                    s += self[(i, j, k, l)] * h[(k, l)];
                }
            }
            s
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

impl Index<(usize, usize, usize, usize)> for Tensor4 {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j, k, l): (usize, usize, usize, usize)) -> &f64 {
        &self.a[((i * S + j) * S + k) * S + l]
    }
}

impl IndexMut<(usize, usize, usize, usize)> for Tensor4 {
    #[inline]
    fn index_mut(&mut self, (i, j, k, l): (usize, usize, usize, usize)) -> &mut f64 {
        &mut self.a[((i * S + j) * S + k) * S + l]
    }
}

impl Add for Tensor4 {
    type Output = Tensor4;
    fn add(mut self, rhs: Tensor4) -> Tensor4 {
        self.a.iter_mut().zip(rhs.a.iter()).for_each(|(x, y)| *x += y);
        self
    }
}
