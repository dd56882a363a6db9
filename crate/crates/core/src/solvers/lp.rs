//! Dense two-phase simplex for small linear programs.
//!
//! The LPs solved here are tiny (node-patch certification, `m_z <= ~20`
//! multipliers) or moderate (the gradient-jump correction LP), so a dense
//! tableau is the right tool. Pivoting uses Dantzig's rule and switches to
//! Bland's rule after a streak of degenerate pivots, which guarantees
//! termination.

use super::{SolverError, Tolerances};
use nalgebra::DMatrix;

/// Hard cap on tableau columns; the dense representation is not meant for
/// larger problems.
pub const LP_MAX_DENSE_COLS: usize = 8192;

const EPS_PIVOT: f64 = 1e-11;
const EPS_REDUCED: f64 = 1e-10;
/// Degenerate-pivot streak after which Bland's anti-cycling rule takes over.
const BLAND_TRIGGER: usize = 48;

/// min cost.x  s.t.  ineq_coeffs x <= ineq_rhs,  eq_coeffs x = eq_rhs,
/// x_i >= lower_bounds[i] where set (free otherwise).
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub ineq_coeffs: DMatrix<f64>,
    pub ineq_rhs: Vec<f64>,
    pub eq_coeffs: DMatrix<f64>,
    pub eq_rhs: Vec<f64>,
    pub lower_bounds: Vec<Option<f64>>,
}

impl LpProblem {
    /// Problem with no constraints beyond per-variable lower bounds.
    pub fn new(cost: Vec<f64>) -> Self {
        let n = cost.len();
        Self {
            cost,
            ineq_coeffs: DMatrix::zeros(0, n),
            ineq_rhs: Vec::new(),
            eq_coeffs: DMatrix::zeros(0, n),
            eq_rhs: Vec::new(),
            lower_bounds: vec![None; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    fn validate(&self) -> Result<(), SolverError> {
        let n = self.num_vars();
        if self.ineq_coeffs.ncols() != n && self.ineq_coeffs.nrows() > 0 {
            return Err(SolverError::Dimension(format!(
                "inequality matrix has {} columns, expected {n}",
                self.ineq_coeffs.ncols()
            )));
        }
        if self.ineq_coeffs.nrows() != self.ineq_rhs.len() {
            return Err(SolverError::Dimension(format!(
                "{} inequality rows but {} bounds",
                self.ineq_coeffs.nrows(),
                self.ineq_rhs.len()
            )));
        }
        if self.eq_coeffs.ncols() != n && self.eq_coeffs.nrows() > 0 {
            return Err(SolverError::Dimension(format!(
                "equality matrix has {} columns, expected {n}",
                self.eq_coeffs.ncols()
            )));
        }
        if self.eq_coeffs.nrows() != self.eq_rhs.len() {
            return Err(SolverError::Dimension(format!(
                "{} equality rows but {} right-hand sides",
                self.eq_coeffs.nrows(),
                self.eq_rhs.len()
            )));
        }
        if self.lower_bounds.len() != n {
            return Err(SolverError::Dimension(format!(
                "{} lower bounds for {n} variables",
                self.lower_bounds.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Feasible { x: Vec<f64>, objective: f64 },
    /// Phase-1 optimum above tolerance. Carries the least-infeasible point
    /// found, which callers may use as a "most feasible" fallback.
    Infeasible { best_effort: Vec<f64> },
    Unbounded,
}

struct Tableau {
    /// Original constraint rows (immutable), each num_cols + 1 long with the
    /// right-hand side last. Source of truth for tableau refreshes.
    orig: Vec<Vec<f64>>,
    rows: Vec<Vec<f64>>, // each length num_cols + 1, last entry = rhs
    cost: Vec<f64>,      // length num_cols + 1, last entry = -objective
    /// Structural objective of the current phase (phase 1: artificials).
    phase_cost: Vec<f64>,
    basis: Vec<usize>,
    num_cols: usize,
    artificial_start: usize,
    degenerate_streak: usize,
    pivots: usize,
    pivot_cap: usize,
    pivots_since_refresh: usize,
    /// Once set, every further pivot uses Bland's rule; guards against
    /// numerical cycling that slips past the degeneracy counter.
    forced_bland: bool,
    bland_after: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

/// Pivots between full tableau refreshes from the original data.
const REFRESH_PERIOD: usize = 1500;

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c];
        let inv = 1.0 / piv;
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (v, p) in self.cost.iter_mut().zip(&prow) {
                *v -= f * p;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
        self.pivots_since_refresh += 1;
    }

    /// Set the phase objective and derive reduced costs for the current
    /// basis from scratch.
    fn set_phase_cost(&mut self, cost: Vec<f64>) {
        self.phase_cost = cost;
        self.rebuild_cost_row();
    }

    fn rebuild_cost_row(&mut self) {
        let mut row = vec![0.0; self.num_cols + 1];
        row[..self.num_cols].copy_from_slice(&self.phase_cost);
        for r in 0..self.rows.len() {
            let cb = self.phase_cost[self.basis[r]];
            if cb != 0.0 {
                for (v, p) in row.iter_mut().zip(&self.rows[r]) {
                    *v -= cb * p;
                }
            }
        }
        self.cost = row;
    }

    /// Recompute the tableau as B^-1 * original for the current basis,
    /// wiping accumulated pivot roundoff.
    fn refresh(&mut self) -> Result<(), SolverError> {
        self.pivots_since_refresh = 0;
        let m = self.rows.len();
        if m == 0 {
            return Ok(());
        }
        let b = DMatrix::from_fn(m, m, |r, k| self.orig[r][self.basis[k]]);
        let lu = b.full_piv_lu();
        let rhs = DMatrix::from_fn(m, self.num_cols + 1, |r, c| self.orig[r][c]);
        let Some(fresh) = lu.solve(&rhs) else {
            return Err(SolverError::Inconsistent("singular basis".into()));
        };
        if fresh.amax() > 1e15 {
            return Err(SolverError::Inconsistent(
                "near-singular basis during refresh".into(),
            ));
        }
        for r in 0..m {
            for c in 0..=self.num_cols {
                self.rows[r][c] = fresh[(r, c)];
            }
        }
        self.rebuild_cost_row();
        Ok(())
    }

    fn run_phase(&mut self, allow_artificial: bool) -> Result<PhaseEnd, SolverError> {
        loop {
            if self.pivots > self.pivot_cap {
                return Err(SolverError::PivotLimit);
            }
            if self.pivots > self.bland_after {
                self.forced_bland = true;
            }
            if self.pivots_since_refresh >= REFRESH_PERIOD {
                self.refresh()?;
            }
            let bland = self.forced_bland || self.degenerate_streak >= BLAND_TRIGGER;
            let limit = if allow_artificial {
                self.num_cols
            } else {
                self.artificial_start
            };
            // Entering column: negative reduced cost AND a usable pivot row.
            // Columns whose positive entries are all below the pivot
            // threshold are numerical noise and get skipped; a column with
            // no positive entry at all is a genuine unbounded ray.
            let mut enter: Option<usize> = None;
            let mut best = -EPS_REDUCED;
            let mut unbounded_ray = false;
            for j in 0..limit {
                let cj = self.cost[j];
                if cj < -EPS_REDUCED {
                    let mut usable = false;
                    let mut any_positive = false;
                    for row in &self.rows {
                        if row[j] > EPS_PIVOT {
                            usable = true;
                            break;
                        }
                        if row[j] > 0.0 {
                            any_positive = true;
                        }
                    }
                    if usable {
                        if bland {
                            enter = Some(j);
                            break;
                        }
                        if cj < best {
                            best = cj;
                            enter = Some(j);
                        }
                    } else if !any_positive {
                        unbounded_ray = true;
                    }
                }
            }
            let Some(c) = enter else {
                // Confirm verdicts on a freshly recomputed tableau; pivot
                // drift can fake both optimality and unbounded rays.
                if self.pivots_since_refresh > 0 {
                    self.refresh()?;
                    continue;
                }
                return if unbounded_ray {
                    Ok(PhaseEnd::Unbounded)
                } else {
                    Ok(PhaseEnd::Optimal)
                };
            };
            // Ratio test; exact comparisons so Bland's rule stays sound. In
            // Bland mode exact ties break on the smallest basic index; in
            // Dantzig mode they break on the largest pivot magnitude, which
            // keeps degenerate pivots from amplifying roundoff.
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for r in 0..self.rows.len() {
                let a = self.rows[r][c];
                if a > EPS_PIVOT {
                    let ratio = (self.rows[r][self.num_cols] / a).max(0.0);
                    let better = ratio < best_ratio
                        || (ratio == best_ratio
                            && leave.is_some_and(|l| {
                                if bland {
                                    self.basis[r] < self.basis[l]
                                } else {
                                    a > self.rows[l][c]
                                }
                            }));
                    if better {
                        best_ratio = ratio;
                        leave = Some(r);
                    }
                }
            }
            let Some(r) = leave else {
                if self.pivots_since_refresh > 0 {
                    self.refresh()?;
                    continue;
                }
                return Ok(PhaseEnd::Unbounded);
            };
            if best_ratio.abs() <= 1e-12 {
                self.degenerate_streak += 1;
            } else {
                self.degenerate_streak = 0;
            }
            self.pivot(r, c);
        }
    }

    fn solution(&self, num_structural: usize) -> Vec<f64> {
        let mut x = vec![0.0; num_structural];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < num_structural {
                x[b] = self.rows[r][self.num_cols];
            }
        }
        x
    }
}

/// Solve with default tolerances.
pub fn lp_solve(p: &LpProblem) -> Result<LpOutcome, SolverError> {
    lp_solve_with(p, &Tolerances::default())
}

pub fn lp_solve_with(p: &LpProblem, tol: &Tolerances) -> Result<LpOutcome, SolverError> {
    p.validate()?;
    let n = p.num_vars();

    // Shifted/split variables: bounded ones become y = x - l >= 0, free ones
    // split into a difference of two nonnegative columns.
    let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(n); // (plus col, minus col)
    let mut shift = vec![0.0; n];
    let mut ncols_y = 0usize;
    for (i, lb) in p.lower_bounds.iter().enumerate() {
        match lb {
            Some(l) => {
                shift[i] = *l;
                col_of.push((ncols_y, None));
                ncols_y += 1;
            }
            None => {
                col_of.push((ncols_y, Some(ncols_y + 1)));
                ncols_y += 2;
            }
        }
    }

    let m_ineq = p.ineq_coeffs.nrows();
    let m_eq = p.eq_coeffs.nrows();
    let m = m_ineq + m_eq;
    let total_cols_estimate = ncols_y + m_ineq + m;
    if total_cols_estimate + 1 > LP_MAX_DENSE_COLS {
        return Err(SolverError::Dimension(format!(
            "problem needs ~{total_cols_estimate} dense columns, above the {LP_MAX_DENSE_COLS} limit"
        )));
    }

    // Row-major constraint data in y variables, rhs adjusted by the shift.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    let mut is_eq: Vec<bool> = Vec::with_capacity(m);
    for (mat, b, eq) in [
        (&p.ineq_coeffs, &p.ineq_rhs, false),
        (&p.eq_coeffs, &p.eq_rhs, true),
    ] {
        for r in 0..mat.nrows() {
            let mut row = vec![0.0; ncols_y];
            let mut adj = 0.0;
            for i in 0..n {
                let a = mat[(r, i)];
                if a == 0.0 {
                    continue;
                }
                adj += a * shift[i];
                let (cp, cm) = col_of[i];
                row[cp] += a;
                if let Some(cm) = cm {
                    row[cm] -= a;
                }
            }
            rows.push(row);
            rhs.push(b[r] - adj);
            is_eq.push(eq);
        }
    }

    // Slacks for inequality rows, then sign-fix, then artificials.
    let slack_start = ncols_y;
    let num_slacks = m_ineq;
    let art_start = slack_start + num_slacks;
    let mut num_arts = 0usize;
    let mut art_col: Vec<Option<usize>> = vec![None; m];
    let mut full_rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    for r in 0..m {
        let mut sign = 1.0;
        if rhs[r] < 0.0 {
            sign = -1.0;
        }
        let mut row = vec![0.0; art_start];
        for (j, v) in rows[r].iter().enumerate() {
            row[j] = sign * v;
        }
        if !is_eq[r] {
            row[slack_start + r] = sign;
        }
        // A row needs an artificial unless its slack enters with +1.
        if is_eq[r] || sign < 0.0 {
            art_col[r] = Some(art_start + num_arts);
            num_arts += 1;
        }
        row.push(sign * rhs[r]);
        full_rows.push(row);
    }
    let num_cols = art_start + num_arts;
    let mut basis = vec![usize::MAX; m];
    for (r, row) in full_rows.iter_mut().enumerate() {
        let rhs_v = row.pop().unwrap();
        row.resize(num_cols, 0.0);
        row.push(rhs_v);
        match art_col[r] {
            Some(a) => {
                row[a] = 1.0;
                basis[r] = a;
            }
            None => basis[r] = slack_start + r,
        }
    }

    // Phase 1: minimize the sum of artificials.
    let mut phase1_cost = vec![0.0; num_cols];
    for a in 0..num_arts {
        phase1_cost[art_start + a] = 1.0;
    }

    let mut tab = Tableau {
        orig: full_rows.clone(),
        rows: full_rows,
        cost: Vec::new(),
        phase_cost: Vec::new(),
        basis,
        num_cols,
        artificial_start: art_start,
        degenerate_streak: 0,
        pivots: 0,
        pivot_cap: 400_000,
        pivots_since_refresh: 0,
        forced_bland: false,
        bland_after: 200 + 30 * (m + num_cols),
    };
    tab.set_phase_cost(phase1_cost);

    if num_arts > 0 {
        match tab.run_phase(true)? {
            PhaseEnd::Optimal => {}
            // Bounded below by zero, so this only happens when roundoff has
            // corrupted the tableau.
            PhaseEnd::Unbounded => return Err(SolverError::PivotLimit),
        }
        let phase1_obj = -tab.cost[num_cols];
        if phase1_obj > tol.lp_feasibility {
            let y = tab.solution(ncols_y);
            return Ok(LpOutcome::Infeasible {
                best_effort: assemble_x(&y, &col_of, &shift),
            });
        }
        // Drive leftover basic artificials out, or drop redundant rows.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= art_start {
                let mut pivoted = false;
                for j in 0..art_start {
                    if tab.rows[r][j].abs() > 1e-9 {
                        tab.pivot(r, j);
                        pivoted = true;
                        break;
                    }
                }
                if !pivoted {
                    tab.rows.remove(r);
                    tab.orig.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
            r += 1;
        }
    }

    // Phase 2: reduced original costs over the y columns.
    let mut cost2 = vec![0.0; num_cols];
    for i in 0..n {
        let (cp, cm) = col_of[i];
        cost2[cp] += p.cost[i];
        if let Some(cm) = cm {
            cost2[cm] -= p.cost[i];
        }
    }
    tab.set_phase_cost(cost2);
    tab.degenerate_streak = 0;

    match tab.run_phase(false)? {
        PhaseEnd::Unbounded => Ok(LpOutcome::Unbounded),
        PhaseEnd::Optimal => {
            let y = tab.solution(ncols_y);
            let x = assemble_x(&y, &col_of, &shift);
            verify_solution(p, &x)?;
            let objective = p.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
            Ok(LpOutcome::Feasible { x, objective })
        }
    }
}

/// Residual check of a claimed-feasible point; converts silent numerical
/// corruption into an explicit error.
fn verify_solution(p: &LpProblem, x: &[f64]) -> Result<(), SolverError> {
    let scale = 1.0 + x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-7 * scale;
    for r in 0..p.ineq_coeffs.nrows() {
        let ax: f64 = (0..x.len()).map(|i| p.ineq_coeffs[(r, i)] * x[i]).sum();
        if ax > p.ineq_rhs[r] + tol {
            return Err(SolverError::Inconsistent(format!(
                "inequality row {r} violated by {:.3e}",
                ax - p.ineq_rhs[r]
            )));
        }
    }
    for r in 0..p.eq_coeffs.nrows() {
        let ax: f64 = (0..x.len()).map(|i| p.eq_coeffs[(r, i)] * x[i]).sum();
        if (ax - p.eq_rhs[r]).abs() > tol {
            return Err(SolverError::Inconsistent(format!(
                "equality row {r} off by {:.3e}",
                (ax - p.eq_rhs[r]).abs()
            )));
        }
    }
    for (i, lb) in p.lower_bounds.iter().enumerate() {
        if let Some(l) = lb {
            if x[i] < l - tol {
                return Err(SolverError::Inconsistent(format!(
                    "lower bound on variable {i} violated by {:.3e}",
                    l - x[i]
                )));
            }
        }
    }
    Ok(())
}

fn assemble_x(y: &[f64], col_of: &[(usize, Option<usize>)], shift: &[f64]) -> Vec<f64> {
    col_of
        .iter()
        .zip(shift)
        .map(|(&(cp, cm), s)| match cm {
            Some(cm) => y[cp] - y[cm],
            None => y[cp] + s,
        })
        .collect()
}
