//! Convex quadratic programming by operator splitting (ADMM), with an
//! active-set polish step for small problems.
//!
//! Solves `min 0.5 x'Ax + q'x  s.t.  Gx <= g` for symmetric positive
//! definite A. The x-update system `(A + sigma I + rho G'G) x = rhs` is
//! solved matrix-free by conjugate gradients, so no factorization of G is
//! needed and many inequality rows are cheap.

use super::{cg_solve, CsrMatrix, SolverError, Tolerances};

#[derive(Debug, Clone)]
pub struct QpProblem {
    /// Symmetric positive definite quadratic term.
    pub quadratic: CsrMatrix,
    pub linear: Vec<f64>,
    /// Inequality rows G with `Gx <= bound`.
    pub ineq: CsrMatrix,
    pub ineq_rhs: Vec<f64>,
}

impl QpProblem {
    pub fn unconstrained(quadratic: CsrMatrix, linear: Vec<f64>) -> Self {
        let n = linear.len();
        Self {
            quadratic,
            linear,
            ineq: CsrMatrix::from_triplets(0, n, Vec::new()),
            ineq_rhs: Vec::new(),
        }
    }

    fn validate(&self) -> Result<(), SolverError> {
        let n = self.linear.len();
        if self.quadratic.nrows() != n || self.quadratic.ncols() != n {
            return Err(SolverError::Dimension(format!(
                "quadratic term is {}x{}, expected {n}x{n}",
                self.quadratic.nrows(),
                self.quadratic.ncols()
            )));
        }
        if self.ineq.nrows() != self.ineq_rhs.len() {
            return Err(SolverError::Dimension(format!(
                "{} inequality rows but {} bounds",
                self.ineq.nrows(),
                self.ineq_rhs.len()
            )));
        }
        if self.ineq.nrows() > 0 && self.ineq.ncols() != n {
            return Err(SolverError::Dimension(format!(
                "inequality matrix has {} columns, expected {n}",
                self.ineq.ncols()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct QpReport {
    pub stationarity: f64,
    pub primal_infeasibility: f64,
    pub complementarity: f64,
    pub min_multiplier: f64,
    pub iterations: usize,
    pub polished: bool,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// Inequality multipliers, one per row.
    pub multipliers: Vec<f64>,
    /// Rows active (tight) at the solution.
    pub active_set: Vec<usize>,
    pub report: QpReport,
}

const SIGMA: f64 = 1e-6;
const RELAXATION: f64 = 1.6;
const RHO_UPDATE_PERIOD: usize = 50;
const POLISH_DENSE_LIMIT: usize = 400;

/// Solve with explicit tolerance and iteration cap; `warm_start` seeds the
/// primal iterate.
pub fn qp_solve(
    p: &QpProblem,
    tol: f64,
    max_iter: usize,
    warm_start: Option<&[f64]>,
) -> Result<QpSolution, SolverError> {
    p.validate()?;
    let n = p.linear.len();
    let m = p.ineq.nrows();
    let tols = Tolerances::default();

    let neg_q: Vec<f64> = p.linear.iter().map(|v| -v).collect();
    let diag_a = p.quadratic.diagonal();

    if m == 0 {
        // Pure SPD solve.
        let r = cg_solve(
            &mut |v| p.quadratic.mul_vec(v),
            &neg_q,
            Some(&diag_a),
            warm_start,
            (tol * 1e-2).max(1e-14),
            tols.cg_max_iter,
        )?;
        let ax = p.quadratic.mul_vec(&r.x);
        let stat = ax
            .iter()
            .zip(&p.linear)
            .map(|(a, q)| (a + q).abs())
            .fold(0.0_f64, f64::max);
        return Ok(QpSolution {
            x: r.x,
            multipliers: Vec::new(),
            active_set: Vec::new(),
            report: QpReport {
                stationarity: stat,
                primal_infeasibility: 0.0,
                complementarity: 0.0,
                min_multiplier: 0.0,
                iterations: r.iterations,
                polished: false,
            },
        });
    }

    let gt_diag = p.ineq.column_sq_norms();
    let mut rho: f64 = 0.1;
    let mut x = warm_start.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut z = p.ineq.mul_vec(&x);
    for (zi, gi) in z.iter_mut().zip(&p.ineq_rhs) {
        *zi = zi.min(*gi);
    }
    let mut y = vec![0.0; m];
    let mut history: Vec<(usize, f64, f64)> = Vec::new();

    let mut buf_n = vec![0.0; n];
    let mut last = (f64::INFINITY, f64::INFINITY);

    for it in 1..=max_iter {
        // x-update: (A + sigma I + rho G'G) x~ = sigma x - q + G'(rho z - y)
        let mut rhs = neg_q.clone();
        for (r, xi) in rhs.iter_mut().zip(&x) {
            *r += SIGMA * xi;
        }
        let gterm: Vec<f64> = z.iter().zip(&y).map(|(zi, yi)| rho * zi - yi).collect();
        let gt = p.ineq.mul_transpose_vec(&gterm);
        for (r, g) in rhs.iter_mut().zip(&gt) {
            *r += g;
        }
        let precond: Vec<f64> = diag_a
            .iter()
            .zip(&gt_diag)
            .map(|(a, g)| a + SIGMA + rho * g)
            .collect();
        let inner_tol = (0.05 * last.0.min(last.1)).clamp(1e-12, 1e-4);
        let sol = cg_solve(
            &mut |v| {
                p.quadratic.mul_vec_into(v, &mut buf_n);
                let gv = p.ineq.mul_vec(v);
                let gtgv = p.ineq.mul_transpose_vec(&gv);
                buf_n
                    .iter()
                    .zip(v)
                    .zip(&gtgv)
                    .map(|((av, vi), gg)| av + SIGMA * vi + rho * gg)
                    .collect()
            },
            &rhs,
            Some(&precond),
            Some(&x),
            inner_tol,
            tols.cg_max_iter,
        )?;
        let x_tilde = sol.x;
        let gx_tilde = p.ineq.mul_vec(&x_tilde);

        // Relaxed z/y updates with projection onto (-inf, g].
        for i in 0..n {
            x[i] = RELAXATION * x_tilde[i] + (1.0 - RELAXATION) * x[i];
        }
        let mut z_new = vec![0.0; m];
        for i in 0..m {
            let zr = RELAXATION * gx_tilde[i] + (1.0 - RELAXATION) * z[i];
            z_new[i] = (zr + y[i] / rho).min(p.ineq_rhs[i]);
            y[i] += rho * (zr - z_new[i]);
        }
        z = z_new;

        // Residuals on the actual iterate.
        let gx = p.ineq.mul_vec(&x);
        let r_prim = gx
            .iter()
            .zip(&z)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        let ax = p.quadratic.mul_vec(&x);
        let gty = p.ineq.mul_transpose_vec(&y);
        let r_dual = ax
            .iter()
            .zip(&p.linear)
            .zip(&gty)
            .map(|((a, q), g)| (a + q + g).abs())
            .fold(0.0_f64, f64::max);
        last = (r_prim, r_dual);

        if it % 500 == 0 {
            history.push((it, r_prim, r_dual));
        }

        if r_prim <= tol * 0.5 && r_dual <= tol * 0.5 {
            let mut out = finalize(p, x, y, it, false);
            if n + m <= 4 * POLISH_DENSE_LIMIT {
                if let Some(pol) = polish(p, &out, tol) {
                    out = pol;
                    out.report.iterations = it;
                }
            }
            if kkt_ok(&out.report, tol) {
                return Ok(out);
            }
            // Spec-level KKT not met (e.g. complementarity); keep iterating.
            x = out.x;
            y = out.multipliers;
        }

        if it % RHO_UPDATE_PERIOD == 0 && r_dual > 0.0 && r_prim > 0.0 {
            let ratio = (r_prim / r_dual).sqrt();
            if !(0.2..=5.0).contains(&ratio) {
                rho = (rho * ratio).clamp(1e-6, 1e6);
            }
        }
    }

    // One last polish attempt before giving up.
    let out = finalize(p, x, y, max_iter, false);
    if n + m <= 4 * POLISH_DENSE_LIMIT {
        if let Some(pol) = polish(p, &out, tol) {
            if kkt_ok(&pol.report, tol) {
                return Ok(pol);
            }
        }
    }
    Err(SolverError::QpStalled {
        iterations: max_iter,
        tol,
        primal: last.0,
        dual: last.1,
        history,
    })
}

fn kkt_ok(rep: &QpReport, tol: f64) -> bool {
    rep.stationarity <= tol
        && rep.primal_infeasibility <= tol
        && rep.complementarity <= tol
        && rep.min_multiplier >= -tol
}

fn finalize(p: &QpProblem, x: Vec<f64>, y: Vec<f64>, iterations: usize, polished: bool) -> QpSolution {
    let m = p.ineq.nrows();
    let gx = p.ineq.mul_vec(&x);
    let ax = p.quadratic.mul_vec(&x);
    let gty = p.ineq.mul_transpose_vec(&y);
    let stationarity = ax
        .iter()
        .zip(&p.linear)
        .zip(&gty)
        .map(|((a, q), g)| (a + q + g).abs())
        .fold(0.0_f64, f64::max);
    let primal = gx
        .iter()
        .zip(&p.ineq_rhs)
        .map(|(v, g)| (v - g).max(0.0))
        .fold(0.0_f64, f64::max);
    let comp: f64 = gx
        .iter()
        .zip(&p.ineq_rhs)
        .zip(&y)
        .map(|((v, g), yi)| yi * (v - g))
        .sum::<f64>()
        .abs();
    let min_mult = y.iter().copied().fold(0.0_f64, f64::min);
    let scale = estimate_row_scale(p);
    let active_set: Vec<usize> = (0..m)
        .filter(|&i| gx[i] - p.ineq_rhs[i] >= -1e-6 * scale.max(1.0) || y[i] > 1e-8)
        .collect();
    QpSolution {
        x,
        multipliers: y,
        active_set,
        report: QpReport {
            stationarity,
            primal_infeasibility: primal,
            complementarity: comp,
            min_multiplier: min_mult,
            iterations,
            polished,
        },
    }
}

fn estimate_row_scale(p: &QpProblem) -> f64 {
    (0..p.ineq.nrows()).fold(0.0_f64, |m, r| m.max(p.ineq.row_max_abs(r)))
}

/// Equality-constrained KKT solve on the detected active set; returns an
/// improved solution when the dense system is solvable and the result
/// satisfies the sign conditions better than the input.
fn polish(p: &QpProblem, sol: &QpSolution, tol: f64) -> Option<QpSolution> {
    let n = p.linear.len();
    let active: Vec<usize> = sol
        .active_set
        .iter()
        .copied()
        .filter(|&i| sol.multipliers[i] > tol.max(1e-10))
        .collect();
    let k = active.len();
    if n + k > POLISH_DENSE_LIMIT {
        return None;
    }
    let mut kkt = nalgebra::DMatrix::zeros(n + k, n + k);
    for r in 0..n {
        for (c, v) in p.quadratic.row(r) {
            kkt[(r, c)] += v;
        }
    }
    for (j, &row) in active.iter().enumerate() {
        for (c, v) in p.ineq.row(row) {
            kkt[(n + j, c)] = v;
            kkt[(c, n + j)] = v;
        }
    }
    let mut rhs = nalgebra::DVector::zeros(n + k);
    for i in 0..n {
        rhs[i] = -p.linear[i];
    }
    for (j, &row) in active.iter().enumerate() {
        rhs[n + j] = p.ineq_rhs[row];
    }
    let lu = kkt.full_piv_lu();
    let sol_vec = lu.solve(&rhs)?;
    let x: Vec<f64> = (0..n).map(|i| sol_vec[i]).collect();
    let mut y = vec![0.0; p.ineq.nrows()];
    for (j, &row) in active.iter().enumerate() {
        y[row] = sol_vec[n + j];
    }
    let polished = finalize(p, x, y, sol.report.iterations, true);
    if polished.report.stationarity <= sol.report.stationarity.max(tol)
        && polished.report.primal_infeasibility <= tol
        && polished.report.min_multiplier >= -tol
    {
        Some(polished)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> CsrMatrix {
        CsrMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)))
    }

    #[test]
    fn unconstrained_identity() {
        let p = QpProblem::unconstrained(identity(2), vec![1.0, 0.0]);
        let s = qp_solve(&p, 1e-8, 1000, None).unwrap();
        assert!((s.x[0] + 1.0).abs() < 1e-8);
        assert!(s.x[1].abs() < 1e-8);
    }

    #[test]
    fn single_active_constraint_by_hand() {
        // min 0.5|x|^2 + x_0  s.t. -x_0 <= 0.5  -> x = (-0.5, 0), multiplier 0.5
        let p = QpProblem {
            quadratic: identity(2),
            linear: vec![1.0, 0.0],
            ineq: CsrMatrix::from_triplets(1, 2, vec![(0, 0, -1.0)]),
            ineq_rhs: vec![0.5],
        };
        let s = qp_solve(&p, 1e-8, 20_000, None).unwrap();
        assert!((s.x[0] + 0.5).abs() < 1e-7, "x = {:?}", s.x);
        assert!(s.x[1].abs() < 1e-7);
        assert!((s.multipliers[0] - 0.5).abs() < 1e-6);
        assert_eq!(s.active_set, vec![0]);
    }

    #[test]
    fn inactive_constraints_do_not_move_optimum() {
        let p = QpProblem {
            quadratic: identity(2),
            linear: vec![1.0, 0.0],
            ineq: CsrMatrix::from_triplets(1, 2, vec![(0, 0, 1.0)]),
            ineq_rhs: vec![5.0],
        };
        let s = qp_solve(&p, 1e-8, 20_000, None).unwrap();
        assert!((s.x[0] + 1.0).abs() < 1e-7);
        assert!(s.multipliers[0].abs() < 1e-8);
    }
}
