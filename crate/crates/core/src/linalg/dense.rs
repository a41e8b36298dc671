use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Dense generalized symmetric eigenproblem `A v = λ B v` with `B`
/// symmetric positive definite.
///
/// Returns eigenvalues in ascending order and `B`-orthonormal
/// eigenvectors as columns.
pub fn generalized_symmetric_eig(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let chol = b.clone().cholesky().ok_or_else(|| {
        Error::InvalidArgument("mass matrix of the eigenproblem is not positive definite".into())
    })?;
    let l = chol.l();
    // C = L⁻¹ A L⁻ᵀ
    let linv_a = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::InvalidArgument("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or_else(|| Error::InvalidArgument("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut w = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        w.set_column(k, &eig.eigenvectors.column(i));
    }
    // v = L⁻ᵀ w
    let vectors = l
        .transpose()
        .solve_upper_triangular(&w)
        .ok_or_else(|| Error::InvalidArgument("singular Cholesky factor".into()))?;
    Ok((values, vectors))
}
