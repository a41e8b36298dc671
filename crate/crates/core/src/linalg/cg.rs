use super::csr::{dot, CsrMatrix};
use crate::{Error, Result};

/// Result of a converged conjugate-gradient solve.
#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final residual norm relative to `‖b‖`.
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive
/// definite `a`. Stops when `‖b - A x‖ ≤ tol · ‖b‖`.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<CgSolution> {
    let n = b.len();
    let diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let b_norm = dot(b, b).sqrt();
    let mut x = x0.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    if b_norm == 0.0 {
        return Ok(CgSolution {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let ax = a.mul_vec(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = dot(&r, &r).sqrt() / b_norm;
    let mut iterations = 0;
    while res > tol {
        if iterations >= max_iter {
            return Err(Error::Solver {
                iterations,
                residual: res,
            });
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::Solver {
                iterations,
                residual: res,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        res = dot(&r, &r).sqrt() / b_norm;
        for i in 0..n {
            z[i] = r[i] * diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(CgSolution {
        x,
        iterations,
        relative_residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::csr::TripletBuilder;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, 2.0);
            if i > 0 {
                b.push(i, i - 1, -1.0);
            }
            if i + 1 < n {
                b.push(i, i + 1, -1.0);
            }
        }
        b.build()
    }

    #[test]
    fn solves_1d_laplacian() {
        let a = laplacian_1d(50);
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&xs);
        let sol = pcg(&a, &b, None, 1e-12, 500).unwrap();
        assert!(sol.relative_residual <= 1e-12);
        for (x, e) in sol.x.iter().zip(&xs) {
            assert!((x - e).abs() < 1e-9);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let a = laplacian_1d(100);
        let b = vec![1.0; 100];
        match pcg(&a, &b, None, 1e-14, 3) {
            Err(Error::Solver {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-14);
            }
            other => panic!("expected solver error, got {other:?}"),
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = laplacian_1d(4);
        let sol = pcg(&a, &[0.0; 4], None, 1e-12, 10).unwrap();
        assert_eq!(sol.x, vec![0.0; 4]);
        assert_eq!(sol.iterations, 0);
    }
}
