//! Thin wrapper over `nalgebra-sparse` for assembled symmetric matrices.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use crate::error::{Error, Result};

/// Triplet accumulator; duplicate entries are summed on conversion.
#[derive(Clone, Debug)]
pub struct Assembler {
    coo: CooMatrix<f64>,
}

impl Assembler {
    pub fn new(n: usize) -> Self {
        Self {
            coo: CooMatrix::new(n, n),
        }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            self.coo.push(i, j, v);
        }
    }

    pub fn finish(self) -> SymMatrix {
        SymMatrix {
            csc: CscMatrix::from(&self.coo),
        }
    }
}

/// A symmetric sparse matrix in compressed-column form.
#[derive(Clone, Debug)]
pub struct SymMatrix {
    csc: CscMatrix<f64>,
}

impl SymMatrix {
    pub fn dim(&self) -> usize {
        self.csc.nrows()
    }

    pub fn csc(&self) -> &CscMatrix<f64> {
        &self.csc
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim());
        let mut y = vec![0.0; self.dim()];
        for (j, col) in self.csc.col_iter().enumerate() {
            let xj = x[j];
            for (&i, &v) in col.row_indices().iter().zip(col.values()) {
                y[i] += v * xj;
            }
        }
        y
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    /// Returns `A + shift·I`, materializing missing diagonal entries.
    pub fn shifted(&self, shift: f64) -> SymMatrix {
        let n = self.dim();
        let mut coo = CooMatrix::new(n, n);
        for (i, j, &v) in self.csc.triplet_iter() {
            coo.push(i, j, v);
        }
        for i in 0..n {
            coo.push(i, i, shift);
        }
        SymMatrix {
            csc: CscMatrix::from(&coo),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from(&self.csc)
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        CscCholesky::factor(&self.csc)
            .map(|f| Cholesky { f })
            .map_err(|e| Error::Singular(format!("{e:?}")))
    }

    pub fn max_abs_diag(&self) -> f64 {
        self.csc
            .triplet_iter()
            .filter(|(i, j, _)| i == j)
            .fold(0.0_f64, |m, (_, _, v)| m.max(v.abs()))
    }
}

/// Sparse Cholesky factorization `A = L Lᵀ`.
pub struct Cholesky {
    f: CscCholesky<f64>,
}

impl Cholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = DVector::from_column_slice(b);
        self.f.solve(&rhs).column(0).iter().copied().collect()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
