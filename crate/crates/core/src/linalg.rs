//! Small dense helpers shared by the numerical modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// `(M + Mᵀ) / 2`
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `‖M − Mᵀ‖_F / ‖M‖_F`, zero for the zero matrix.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = frobenius(m);
    if n == 0.0 {
        0.0
    } else {
        frobenius(&(m - m.transpose())) / n
    }
}

/// Relative difference `‖a − b‖_F / max(‖a‖_F, ‖b‖_F)`.
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = frobenius(a).max(frobenius(b));
    if scale == 0.0 {
        0.0
    } else {
        frobenius(&(a - b)) / scale
    }
}

pub fn rel_diff_scalar(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
}

pub fn subvector(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

/// Row sums `M·1`.
pub fn row_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.nrows(), m.row_iter().map(|r| r.sum()))
}

pub fn cholesky(m: &DMatrix<f64>, ctx: &'static str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite(ctx))
}

/// `xᵀ M⁻¹ x` for symmetric positive definite `M`; zero for empty `x`.
pub fn spd_quadratic_form(m: &DMatrix<f64>, x: &DVector<f64>, ctx: &'static str) -> Result<f64> {
    if x.is_empty() {
        return Ok(0.0);
    }
    let chol = cholesky(m, ctx)?;
    let y = chol.solve(x);
    Ok(x.dot(&y))
}

/// Solves `M x = b` by LU with partial pivoting.
pub fn lu_solve(m: &DMatrix<f64>, b: &DMatrix<f64>, ctx: &'static str) -> Result<DMatrix<f64>> {
    let x = m.clone().lu().solve(b).ok_or(Error::Singular(ctx))?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Singular(ctx))
    }
}

pub fn lu_solve_vec(m: &DMatrix<f64>, b: &DVector<f64>, ctx: &'static str) -> Result<DVector<f64>> {
    let x = m.clone().lu().solve(b).ok_or(Error::Singular(ctx))?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Singular(ctx))
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    m.clone().symmetric_eigenvalues().min()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_form_of_empty_vector_is_zero() {
        let m = DMatrix::<f64>::zeros(0, 0);
        let x = DVector::<f64>::zeros(0);
        assert_eq!(spd_quadratic_form(&m, &x, "t").unwrap(), 0.0);
    }

    #[test]
    fn quadratic_form_matches_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let x = DVector::from_vec(vec![1.0, 2.0]);
        let inv = m.clone().try_inverse().unwrap();
        let expected = x.dot(&(inv * &x));
        assert!((spd_quadratic_form(&m, &x, "t").unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let x = DVector::from_vec(vec![1.0, 0.0]);
        assert!(matches!(
            spd_quadratic_form(&m, &x, "t"),
            Err(Error::NotPositiveDefinite("t"))
        ));
    }

    #[test]
    fn asymmetry_of_symmetric_matrix_is_zero() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        assert_eq!(asymmetry(&m), 0.0);
        let n = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 2.0]);
        assert!(asymmetry(&n) > 0.0);
    }
}
