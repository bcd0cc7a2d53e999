//! Small complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{DoaError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigen-decomposition of a Hermitian matrix with eigenpairs ordered by
/// descending eigenvalue.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn hermitian_eigen(m: &CMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(DoaError::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), 1e-14, 10_000).ok_or_else(|| {
        DoaError::Numerical("Hermitian eigendecomposition did not converge".into())
    })?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(DoaError::Numerical("non-finite eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps solver order among equal eigenvalues.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Minimum-norm least-squares solution of `a * x = b` through a
/// truncated SVD. Singular values below `rcond * s_max` are discarded.
pub fn lstsq(a: &CMatrix, b: &CVector, rcond: f64) -> Result<CVector> {
    if a.nrows() != b.len() {
        return Err(DoaError::Dimension(format!(
            "least squares: matrix has {} rows, rhs has {}",
            a.nrows(),
            b.len()
        )));
    }
    if a.ncols() == 0 {
        return Ok(CVector::zeros(0));
    }
    let svd = a.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    if s_max == 0.0 {
        return Ok(CVector::zeros(a.ncols()));
    }
    svd.solve(b, rcond * s_max)
        .map_err(|e| DoaError::Numerical(e.to_string()))
}

/// Matrix version of [`lstsq`].
pub fn lstsq_matrix(a: &CMatrix, b: &CMatrix, rcond: f64) -> Result<CMatrix> {
    if a.nrows() != b.nrows() {
        return Err(DoaError::Dimension(format!(
            "least squares: matrix has {} rows, rhs has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let svd = a.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    if s_max == 0.0 {
        return Ok(CMatrix::zeros(a.ncols(), b.ncols()));
    }
    svd.solve(b, rcond * s_max)
        .map_err(|e| DoaError::Numerical(e.to_string()))
}

/// Numerical rank with threshold `rel_tol * s_max`.
pub fn numerical_rank(a: &CMatrix, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.singular_values();
    let s_max = sv.max();
    if s_max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * s_max).count()
}

/// Eigenvalues of a general square complex matrix via the complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(DoaError::Dimension(
            "eigenvalues need a square matrix".into(),
        ));
    }
    let schur = nalgebra::Schur::try_new(m.clone(), 1e-14, 10_000)
        .ok_or_else(|| DoaError::Numerical("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Largest absolute deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_is_descending() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(3.0, 0.0),
            Complex64::new(2.0, 0.0),
        ]));
        let e = hermitian_eigen(&m).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lstsq_handles_duplicate_columns() {
        let one = Complex64::new(1.0, 0.0);
        let a = CMatrix::from_element(3, 2, one);
        let b = CVector::from_element(3, Complex64::new(2.0, 0.0));
        let x = lstsq(&a, &b, 1e-12).unwrap();
        assert!((x[0] - one).norm() < 1e-12 && (x[1] - one).norm() < 1e-12);
    }

    #[test]
    fn schur_eigenvalues_of_triangular() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 1.0),
                Complex64::new(4.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.5),
            ],
        );
        let mut ev = eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - Complex64::new(-1.0, 0.5)).norm() < 1e-12);
        assert!((ev[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }
}
