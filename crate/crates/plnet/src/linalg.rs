//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Cholesky factor of a symmetric matrix, or a "not PD" error.
pub(crate) fn cholesky(m: &DMatrix<f64>, context: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or_else(|| Error::NotPositiveDefinite(context.to_string()))
}

/// log det of an SPD matrix via its Cholesky factor.
pub(crate) fn logdet(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// Sum of |m_jk| over j != k, both triangles.
pub(crate) fn offdiag_l1(m: &DMatrix<f64>) -> f64 {
    let p = m.nrows();
    let mut acc = 0.0;
    for j in 0..p {
        for k in 0..p {
            if j != k {
                acc += m[(j, k)].abs();
            }
        }
    }
    acc
}

/// Largest |m_jk| over j != k; 0 when p < 2.
pub(crate) fn offdiag_max_abs(m: &DMatrix<f64>) -> f64 {
    let p = m.nrows();
    let mut acc = 0.0_f64;
    for j in 0..p {
        for k in 0..p {
            if j != k {
                acc = acc.max(m[(j, k)].abs());
            }
        }
    }
    acc
}

/// (m + m^T) / 2.
pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    let p = m.nrows();
    for j in 0..p {
        for k in (j + 1)..p {
            let v = 0.5 * (m[(j, k)] + m[(k, j)]);
            out[(j, k)] = v;
            out[(k, j)] = v;
        }
    }
    out
}

/// Smallest eigenvalue of a symmetric matrix.
pub(crate) fn min_eigenvalue_sym(m: &DMatrix<f64>) -> f64 {
    let eig = nalgebra::SymmetricEigen::new(symmetrize(m));
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// tr(a b) for symmetric a, b of equal size.
pub(crate) fn trace_product_sym(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}
