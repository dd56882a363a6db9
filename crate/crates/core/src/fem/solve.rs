//! State and adjoint solves plus objective evaluation.

use super::assemble::{assemble, element_geometry, TET_QUADRATURE};
use super::{Equation, FemError, StateProblem};
use crate::mesh::TetMesh;
use crate::solvers::{cg_solve, CsrMatrix, Tolerances};
use crate::Vec3;

/// A nodal coefficient field together with solver diagnostics.
#[derive(Debug, Clone)]
pub struct FemField {
    pub values: Vec<f64>,
    pub relative_residual: f64,
    pub cg_iterations: usize,
}

/// Solve the state equation with homogeneous boundary data.
pub fn solve_state(
    mesh: &TetMesh,
    problem: &StateProblem,
    tols: &Tolerances,
) -> Result<FemField, FemError> {
    solve_state_with_dirichlet(mesh, problem, None, tols)
}

/// Solve the state equation; for the Dirichlet problem an optional boundary
/// value function replaces the default u = 0 (used by manufactured-solution
/// tests).
pub fn solve_state_with_dirichlet(
    mesh: &TetMesh,
    problem: &StateProblem,
    dirichlet: Option<&dyn Fn(&Vec3) -> f64>,
    tols: &Tolerances,
) -> Result<FemField, FemError> {
    let sys = assemble(mesh, problem)?;
    match problem.equation {
        Equation::ReactionNeumann => {
            let n = mesh.num_vertices();
            let diag: Vec<f64> = sys
                .stiffness
                .diagonal()
                .iter()
                .zip(sys.mass.diagonal())
                .map(|(k, m)| k + m)
                .collect();
            let mut buf = vec![0.0; n];
            let r = cg_solve(
                &mut |x| {
                    sys.stiffness.mul_vec_into(x, &mut buf);
                    let mv = sys.mass.mul_vec(x);
                    buf.iter().zip(mv).map(|(a, b)| a + b).collect()
                },
                &sys.load,
                Some(&diag),
                None,
                tols.cg_relative,
                tols.cg_max_iter,
            )?;
            Ok(FemField {
                values: r.x,
                relative_residual: r.relative_residual,
                cg_iterations: r.iterations,
            })
        }
        Equation::PoissonDirichlet => {
            solve_dirichlet(mesh, &sys.stiffness, &sys.load, dirichlet, tols)
        }
    }
}

/// Solve K u = b restricted to interior vertices, with boundary values from
/// `dirichlet` (zero when absent).
fn solve_dirichlet(
    mesh: &TetMesh,
    stiffness: &CsrMatrix,
    load: &[f64],
    dirichlet: Option<&dyn Fn(&Vec3) -> f64>,
    tols: &Tolerances,
) -> Result<FemField, FemError> {
    let n = mesh.num_vertices();
    let boundary = mesh.boundary_vertices();
    let mut is_boundary = vec![false; n];
    for &b in &boundary {
        is_boundary[b] = true;
    }
    let interior: Vec<usize> = (0..n).filter(|&v| !is_boundary[v]).collect();
    let mut interior_index = vec![usize::MAX; n];
    for (k, &v) in interior.iter().enumerate() {
        interior_index[v] = k;
    }

    let mut values = vec![0.0; n];
    if let Some(g) = dirichlet {
        for &b in &boundary {
            values[b] = g(&mesh.vertices()[b]);
        }
    }

    // Restrict rows/columns; push boundary columns to the right-hand side.
    let ni = interior.len();
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; ni];
    for (k, &v) in interior.iter().enumerate() {
        rhs[k] = load[v];
        for (c, a) in stiffness.row(v) {
            if is_boundary[c] {
                rhs[k] -= a * values[c];
            } else {
                trip.push((k, interior_index[c], a));
            }
        }
    }
    let kii = CsrMatrix::from_triplets(ni, ni, trip);
    let diag = kii.diagonal();
    let r = cg_solve(
        &mut |x| kii.mul_vec(x),
        &rhs,
        Some(&diag),
        None,
        tols.cg_relative,
        tols.cg_max_iter,
    )?;
    for (k, &v) in interior.iter().enumerate() {
        values[v] = r.x[k];
    }
    Ok(FemField {
        values,
        relative_residual: r.relative_residual,
        cg_iterations: r.iterations,
    })
}

/// Solve the adjoint problem a(p, w) = -int (j_u w + j_v . grad w) for all w
/// in the same space as the state (the problems here are self-adjoint).
pub fn solve_adjoint(
    mesh: &TetMesh,
    problem: &StateProblem,
    u: &[f64],
    tols: &Tolerances,
) -> Result<FemField, FemError> {
    let n = mesh.num_vertices();
    assert_eq!(u.len(), n, "state vector must cover all vertices");
    // Right-hand side by the same quadrature as the objective terms.
    let mut rhs = vec![0.0; n];
    for t in 0..mesh.num_tets() {
        let geo = element_geometry(mesh, t)?;
        let tet = mesh.tets()[t];
        let grad_u: Vec3 = (0..4).map(|i| u[tet[i]] * geo.grads[i]).sum();
        let w = geo.volume / 4.0;
        for q in 0..4 {
            let x = geo.quad_point(q);
            let uq: f64 = (0..4).map(|i| u[tet[i]] * TET_QUADRATURE[q][i]).sum();
            let ju = problem.objective.j_u(&x, uq, &grad_u);
            let jv = problem.objective.j_v(&x, uq, &grad_u);
            for i in 0..4 {
                rhs[tet[i]] -= w * (ju * TET_QUADRATURE[q][i] + jv.dot(&geo.grads[i]));
            }
        }
    }

    let sys = assemble(mesh, problem)?;
    match problem.equation {
        Equation::ReactionNeumann => {
            let diag: Vec<f64> = sys
                .stiffness
                .diagonal()
                .iter()
                .zip(sys.mass.diagonal())
                .map(|(k, m)| k + m)
                .collect();
            let mut buf = vec![0.0; n];
            let r = cg_solve(
                &mut |x| {
                    sys.stiffness.mul_vec_into(x, &mut buf);
                    let mv = sys.mass.mul_vec(x);
                    buf.iter().zip(mv).map(|(a, b)| a + b).collect()
                },
                &rhs,
                Some(&diag),
                None,
                tols.cg_relative,
                tols.cg_max_iter,
            )?;
            Ok(FemField {
                values: r.x,
                relative_residual: r.relative_residual,
                cg_iterations: r.iterations,
            })
        }
        Equation::PoissonDirichlet => solve_dirichlet(mesh, &sys.stiffness, &rhs, None, tols),
    }
}

/// Evaluate J = int j(x, u_h, grad u_h) with element-wise 4-point quadrature.
pub fn objective(mesh: &TetMesh, problem: &StateProblem, u: &[f64]) -> Result<f64, FemError> {
    let mut total = 0.0;
    for t in 0..mesh.num_tets() {
        let geo = element_geometry(mesh, t)?;
        let tet = mesh.tets()[t];
        let grad_u: Vec3 = (0..4).map(|i| u[tet[i]] * geo.grads[i]).sum();
        let w = geo.volume / 4.0;
        for q in 0..4 {
            let x = geo.quad_point(q);
            let uq: f64 = (0..4).map(|i| u[tet[i]] * TET_QUADRATURE[q][i]).sum();
            total += w * problem.objective.j(&x, uq, &grad_u);
        }
    }
    Ok(total)
}
