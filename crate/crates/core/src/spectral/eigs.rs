use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{DiscreteOperator, DENSE_LIMIT};
use crate::linalg::{generalized_symmetric_eig, pcg, CsrMatrix};
use crate::{Error, Result};

/// Eigenpairs of `T v = λ M̃ v`, ascending, with `M̃`-orthonormal vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// `‖T v − λ M̃ v‖ / ‖v‖` per pair.
    pub residuals: Vec<f64>,
}

/// Tolerance on `‖T v − λ M̃ v‖ / ‖v‖`.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

fn residual(t: &CsrMatrix, m: &CsrMatrix, lambda: f64, v: &[f64]) -> f64 {
    let tv = t.mul_vec(v);
    let mv = m.mul_vec(v);
    let r: f64 = tv
        .iter()
        .zip(&mv)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt();
    r / v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn require_symmetric(op: &DiscreteOperator) -> Result<()> {
    if op.is_symmetric() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(
            "eigenpairs need a symmetric stiffness; use the numerical range instead".into(),
        ))
    }
}

/// The `count` smallest eigenpairs of the pencil.
///
/// Dense up to [`DENSE_LIMIT`] dofs, shift-invert subspace iteration above.
pub fn generalized_eigs(op: &DiscreteOperator, count: usize) -> Result<Eigenpairs> {
    if op.n_dofs() <= DENSE_LIMIT {
        dense_eigs(op, count)
    } else {
        iterative_eigs(op, count, 0)
    }
}

/// All eigenpairs from a dense decomposition.
pub fn dense_eigs(op: &DiscreteOperator, count: usize) -> Result<Eigenpairs> {
    require_symmetric(op)?;
    let n = op.n_dofs();
    if n > DENSE_LIMIT {
        return Err(Error::Size {
            n,
            limit: DENSE_LIMIT,
        });
    }
    if count > n {
        return Err(Error::InvalidArgument(format!(
            "requested {count} eigenpairs of a {n}-dof pencil"
        )));
    }
    let (values, vectors) = generalized_symmetric_eig(&op.t.to_dense(), &op.m_tilde.to_dense())?;
    finish(
        op,
        (0..count)
            .map(|k| (values[k], vectors.column(k).iter().copied().collect()))
            .collect(),
    )
}

fn finish(op: &DiscreteOperator, pairs: Vec<(f64, Vec<f64>)>) -> Result<Eigenpairs> {
    let scale = op.t.max_abs().max(op.m_tilde.max_abs());
    let mut out = Eigenpairs {
        values: Vec::new(),
        vectors: Vec::new(),
        residuals: Vec::new(),
    };
    for (lambda, v) in pairs {
        let res = residual(&op.t, &op.m_tilde, lambda, &v);
        // relative to the matrix scale so that tiny pencils are not penalized
        if res > EIGEN_RESIDUAL_TOL * scale.max(1.0) {
            return Err(Error::Eigen { residual: res });
        }
        out.values.push(lambda);
        out.vectors.push(v);
        out.residuals.push(res);
    }
    Ok(out)
}

/// Shift-invert subspace iteration with Rayleigh-Ritz on
/// `(T + M̃)⁻¹ M̃`, deterministic for a given `seed`.
pub fn iterative_eigs(op: &DiscreteOperator, count: usize, seed: u64) -> Result<Eigenpairs> {
    require_symmetric(op)?;
    let n = op.n_dofs();
    if count == 0 || count > n {
        return Err(Error::InvalidArgument(format!(
            "requested {count} eigenpairs of a {n}-dof pencil"
        )));
    }
    let block = (count + 8).min(n);
    let shifted = op.t.linear_combination(1.0, &op.m_tilde, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let scale = op.t.max_abs().max(op.m_tilde.max_abs()).max(1.0);
    let mut worst = f64::INFINITY;
    for _ in 0..500 {
        for v in basis.iter_mut() {
            let rhs = op.m_tilde.mul_vec(v);
            *v = pcg(&shifted, &rhs, None, 1e-13, 20 * n + 100)?.x;
        }
        // Rayleigh-Ritz on the span of the iterates
        let tm = DMatrix::from_fn(block, block, |i, j| op.t.bilinear(&basis[i], &basis[j]));
        let mm = DMatrix::from_fn(block, block, |i, j| {
            op.m_tilde.bilinear(&basis[i], &basis[j])
        });
        let (theta, y) = generalized_symmetric_eig(&tm, &mm)?;
        basis = (0..block)
            .map(|k| {
                let mut v = vec![0.0; n];
                for (i, b) in basis.iter().enumerate() {
                    let c = y[(i, k)];
                    v.iter_mut().zip(b).for_each(|(vi, bi)| *vi += c * bi);
                }
                v
            })
            .collect();
        worst = (0..count)
            .map(|k| residual(&op.t, &op.m_tilde, theta[k], &basis[k]))
            .fold(0.0, f64::max);
        if worst <= 0.1 * EIGEN_RESIDUAL_TOL * scale {
            let values: DVector<f64> = theta;
            return finish(
                op,
                (0..count).map(|k| (values[k], basis[k].clone())).collect(),
            );
        }
    }
    Err(Error::Eigen { residual: worst })
}
