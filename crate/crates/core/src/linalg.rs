//! Small dense symmetric-matrix helpers shared by the filter.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{is_finite, lit, Real};

/// In-place symmetrization `(A + Aᵀ)/2`.
pub fn symmetrize<T: Real>(a: &mut DMatrix<T>) {
    let n = a.nrows();
    let half = lit::<T>(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)]) * half;
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive
/// *semi*definite matrix.
///
/// Pivots within `tol·max_diag` of zero are treated as exactly zero and
/// their columns zeroed, so rank-deficient covariances (and the all-zero
/// matrix) factor cleanly. A pivot below `−tol·max_diag` reports the
/// 1-based leading minor that failed.
pub fn cholesky_lower_psd<T: Real>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape {
            what: "cholesky input",
            expected: n,
            got: a.ncols(),
        });
    }
    let mut max_diag = T::zero();
    for i in 0..n {
        if !is_finite(a[(i, i)]) {
            return Err(Error::Covariance { minor: i + 1 });
        }
        max_diag = max_diag.max(a[(i, i)].abs());
    }
    let tol = lit::<T>(1e-10) * max_diag.max(T::one());

    let mut l = DMatrix::<T>::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot = pivot - l[(j, k)] * l[(j, k)];
        }
        if pivot < -tol {
            return Err(Error::Covariance { minor: j + 1 });
        }
        if pivot <= tol {
            // Semidefinite direction: leave the column zero.
            continue;
        }
        let diag = pivot.sqrt();
        l[(j, j)] = diag;
        for i in (j + 1)..n {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum = sum - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = sum / diag;
        }
    }
    Ok(l)
}

/// Eigendecomposition-based projection onto the PSD cone: negative
/// eigenvalues of the symmetrized input are clamped to zero.
pub fn clamp_psd<T: Real>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            if !is_finite(a[(i, j)]) {
                return Err(Error::Covariance { minor: i + 1 });
            }
        }
    }
    let mut sym = a.clone();
    symmetrize(&mut sym);
    let eigen = sym.symmetric_eigen();
    let clamped = DVector::from_iterator(
        n,
        eigen.eigenvalues.iter().map(|&v| v.max(T::zero())),
    );
    let mut out = &eigen.eigenvectors * DMatrix::from_diagonal(&clamped) * eigen.eigenvectors.transpose();
    symmetrize(&mut out);
    Ok(out)
}

/// Smallest eigenvalue of the symmetrized input.
pub fn min_symmetric_eigenvalue<T: Real>(a: &DMatrix<T>) -> T {
    let mut sym = a.clone();
    symmetrize(&mut sym);
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(T::max_value().unwrap(), |acc, v| acc.min(v))
}
