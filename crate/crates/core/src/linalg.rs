//! Small dense helpers over nalgebra shared by the projection and GLM code.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative pivot floor below which a Gram matrix is treated as singular.
const PIVOT_FLOOR: f64 = 1e-12;

pub(crate) fn is_symmetric(m: &DMatrix<f64>) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return false;
            }
        }
    }
    true
}

/// Cholesky factor of a symmetric positive-definite matrix.
pub(crate) fn spd_factor(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if !is_symmetric(m) || m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite)
}

/// Cholesky factor of a Gram matrix XᵀWX, reporting rank deficiency of the
/// design as [`Error::SingularDesign`].
pub(crate) fn gram_factor(gram: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let max_diag = gram.diagonal().amax();
    if !(max_diag > 0.0) || gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularDesign);
    }
    let chol = Cholesky::new(gram).ok_or(Error::SingularDesign)?;
    let l = chol.l_dirty();
    let min_pivot = (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    if min_pivot < PIVOT_FLOOR * max_diag {
        return Err(Error::SingularDesign);
    }
    Ok(chol)
}

/// Least-squares coefficients of `target` on the columns of `basis`, and the
/// relative residual norm of the fit.
pub(crate) fn least_squares(basis: &DMatrix<f64>, target: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let gram = basis.transpose() * basis;
    let chol = gram_factor(gram)?;
    let coef = chol.solve(&(basis.transpose() * target));
    let resid = target - basis * &coef;
    let scale = target.norm().max(1.0);
    Ok((coef, resid.norm() / scale))
}

/// Whether every column of `inner` lies in the column space of `outer`.
pub(crate) fn column_space_contains(outer: &DMatrix<f64>, inner: &DMatrix<f64>, tol: f64) -> Result<bool> {
    if outer.nrows() != inner.nrows() {
        return Err(Error::DimensionMismatch { expected: outer.nrows(), got: inner.nrows() });
    }
    for j in 0..inner.ncols() {
        let col = inner.column(j).into_owned();
        let (_, rel) = least_squares(outer, &col)?;
        if rel > tol {
            return Ok(false);
        }
    }
    Ok(true)
}
