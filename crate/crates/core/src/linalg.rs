//! Small dense complex linear algebra used throughout the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// ⟨v|m|v⟩, real part only.
pub fn expectation(m: &CMatrix, v: &CVector) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}

/// Eigen-decomposition of the Hermitian part of `m`. Eigenvalues ascending.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = hermitian_part(m);
    let eig = h.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(k));
    }
    (vals, vecs)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    eigh(m).0.first().copied().unwrap_or(0.0)
}

/// Rebuild V diag(vals) V†.
pub fn from_eigen(vals: &[f64], vecs: &CMatrix) -> CMatrix {
    let n = vals.len();
    let mut out = CMatrix::zeros(n, n);
    for (k, &l) in vals.iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        let col = vecs.column(k);
        out += col * col.adjoint() * c(l, 0.0);
    }
    out
}

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues set to zero).
pub fn psd_projection(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(m);
    let clipped: Vec<f64> = vals.iter().map(|&v| v.max(0.0)).collect();
    from_eigen(&clipped, &vecs)
}

/// Euclidean projection of a real vector onto the probability simplex scaled to `total`.
pub fn simplex_projection(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - total) / (k as f64 + 1.0);
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Nearest density matrix (PSD, unit trace) in Frobenius norm.
pub fn density_projection(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(m);
    let p = simplex_projection(&vals, 1.0);
    from_eigen(&p, &vecs)
}

/// Moore-Penrose pseudo-inverse.
pub fn pinv(m: &CMatrix) -> Result<CMatrix> {
    let svd = m.clone().svd(true, true);
    svd.pseudo_inverse(1e-12).map_err(|e| Error::Solver {
        message: format!("pseudo-inverse: {e}"),
        residual: f64::NAN,
    })
}

/// Column-stacking vectorization.
pub fn vec_of(m: &CMatrix) -> CVector {
    CVector::from_iterator(m.len(), m.iter().copied())
}

pub fn unvec(v: &CVector, rows: usize) -> CMatrix {
    CMatrix::from_iterator(rows, v.len() / rows, v.iter().copied())
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs(&(m.adjoint() * m - identity(m.nrows()))) <= tol
}

/// Plain serializable form of a complex matrix: row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let entries = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .map(|j| [m[(i, j)].re, m[(i, j)].im])
                    .collect()
            })
            .collect();
        MatrixJson {
            dim: m.nrows(),
            entries,
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.entries.len() != self.dim {
            return Err(Error::Parse {
                location: "entries".into(),
                message: format!("expected {} rows, found {}", self.dim, self.entries.len()),
            });
        }
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (i, row) in self.entries.iter().enumerate() {
            if row.len() != self.dim {
                return Err(Error::Parse {
                    location: format!("entries[{i}]"),
                    message: format!("expected {} columns, found {}", self.dim, row.len()),
                });
            }
            for (j, z) in row.iter().enumerate() {
                if !z[0].is_finite() || !z[1].is_finite() {
                    return Err(Error::Parse {
                        location: format!("entries[{i}][{j}]"),
                        message: "non-finite value".into(),
                    });
                }
                m[(i, j)] = c(z[0], z[1]);
            }
        }
        Ok(m)
    }
}
