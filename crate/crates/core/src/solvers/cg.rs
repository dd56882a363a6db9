//! Preconditioned conjugate gradients for symmetric positive definite
//! operators given as matrix-vector closures.

use super::SolverError;

#[derive(Debug, Clone)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual ||Ax - b|| / ||b||.
    pub relative_residual: f64,
}

/// Solve A x = b for SPD A with a diagonal (Jacobi) preconditioner.
///
/// `matvec` applies the operator, `precond` holds the diagonal of A (entries
/// <= 0 fall back to 1). The iteration starts from `x0` when given, which is
/// how warm starts enter the QP solver.
pub fn cg_solve(
    matvec: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    precond: Option<&[f64]>,
    x0: Option<&[f64]>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgResult, SolverError> {
    let n = b.len();
    let norm_b = norm(b);
    if norm_b == 0.0 {
        return Ok(CgResult {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = match precond {
        Some(d) => {
            if d.len() != n {
                return Err(SolverError::Dimension(format!(
                    "preconditioner length {} != system size {n}",
                    d.len()
                )));
            }
            d.iter().map(|&v| if v > 0.0 { 1.0 / v } else { 1.0 }).collect()
        }
        None => vec![1.0; n],
    };

    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut r: Vec<f64> = if x0.is_some() {
        let ax = matvec(&x);
        b.iter().zip(ax).map(|(bi, axi)| bi - axi).collect()
    } else {
        b.to_vec()
    };
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = norm(&r) / norm_b;
    if res <= rel_tol {
        return Ok(CgResult {
            x,
            iterations: 0,
            relative_residual: res,
        });
    }

    for it in 1..=max_iter {
        let ap = matvec(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // Indefinite direction: caller's operator violates the SPD
            // contract; report as a stall with the current residual.
            return Err(SolverError::CgStalled {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm(&r) / norm_b;
        if res <= rel_tol {
            return Ok(CgResult {
                x,
                iterations: it,
                relative_residual: res,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::CgStalled {
        iterations: max_iter,
        residual: res,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_converges_in_one_iteration() {
        let b = vec![3.0, -1.0, 2.5];
        let r = cg_solve(&mut |x| x.to_vec(), &b, None, None, 1e-12, 10).unwrap();
        assert_eq!(r.iterations, 1);
        for (xi, bi) in r.x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_with_jacobi_converges_fast() {
        let n = 40;
        let d: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let b = vec![1.0; n];
        let dd = d.clone();
        let r = cg_solve(
            &mut |x| x.iter().zip(&dd).map(|(xi, di)| xi * di).collect(),
            &b,
            Some(&d),
            None,
            1e-12,
            n,
        )
        .unwrap();
        assert!(r.iterations <= n);
        for (i, xi) in r.x.iter().enumerate() {
            assert!((xi - 1.0 / (i as f64 + 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn laplacian_matches_direct_elimination() {
        // tridiag(-1, 2, -1), b = e1; oracle by forward/back substitution.
        let n = 25;
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        let tridiag = |x: &[f64]| -> Vec<f64> {
            let mut y = vec![0.0; n];
            for i in 0..n {
                y[i] = 2.0 * x[i];
                if i > 0 {
                    y[i] -= x[i - 1];
                }
                if i + 1 < n {
                    y[i] -= x[i + 1];
                }
            }
            y
        };
        // Thomas algorithm oracle.
        let mut c = vec![0.0; n];
        let mut dvec = vec![0.0; n];
        c[0] = -1.0 / 2.0;
        dvec[0] = b[0] / 2.0;
        for i in 1..n {
            let m = 2.0 - (-1.0) * c[i - 1];
            c[i] = -1.0 / m;
            dvec[i] = (b[i] - (-1.0) * dvec[i - 1]) / m;
        }
        let mut oracle = vec![0.0; n];
        oracle[n - 1] = dvec[n - 1];
        for i in (0..n - 1).rev() {
            oracle[i] = dvec[i] - c[i] * oracle[i + 1];
        }

        let r = cg_solve(&mut |x| tridiag(x), &b, None, None, 1e-12, 10 * n).unwrap();
        for (xi, oi) in r.x.iter().zip(&oracle) {
            assert!((xi - oi).abs() < 1e-10, "cg {xi} vs direct {oi}");
        }
    }

    #[test]
    fn max_iter_exceeded_is_an_error() {
        let n = 50;
        let tridiag = |x: &[f64]| -> Vec<f64> {
            let mut y = vec![0.0; n];
            for i in 0..n {
                y[i] = 2.0 * x[i];
                if i > 0 {
                    y[i] -= x[i - 1];
                }
                if i + 1 < n {
                    y[i] -= x[i + 1];
                }
            }
            y
        };
        let b = vec![1.0; n];
        let err = cg_solve(&mut |x| tridiag(x), &b, None, None, 1e-14, 3);
        assert!(matches!(err, Err(SolverError::CgStalled { .. })));
    }
}
