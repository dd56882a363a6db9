//! Convex interpolation of graph functions by piecewise quadratics: the
//! Lagrange interpolant plus a gradient-jump correction (a P1 function with
//! unit jumps found by linear programming) and a paraboloid correction, with
//! certification of the Hessian and jump conditions.

use super::trimesh2::{signed_area, TriMesh2};
use super::IsoError;
use crate::solvers::{lp_solve_with, LpOutcome, LpProblem, Tolerances};
use crate::Vec2;
use nalgebra::{DMatrix, Matrix2, Vector2};

/// A piecewise quadratic scalar function in Lagrange form (vertex and
/// edge-midpoint values), with the correction data that produced it.
#[derive(Debug, Clone)]
pub struct GraphFunctionMesh {
    pub mesh: TriMesh2,
    pub node_values: Vec<f64>,
    /// Midpoint values indexed by mesh edge id.
    pub edge_values: Vec<f64>,
    /// P1 jump-correction coefficients.
    pub psi: Vec<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub certification: GraphCertification,
}

/// Certification sweep of the two convexity conditions.
#[derive(Debug, Clone, Copy)]
pub struct GraphCertification {
    /// min over triangles of the smallest Hessian eigenvalue.
    pub min_hessian_eig: f64,
    /// min over interior edges and both endpoints of the normal-gradient
    /// jump.
    pub min_jump: f64,
    pub passed: bool,
}

pub const CERT_TOL: f64 = 1e-10;
/// Roundoff band below which condition defects are not corrected.
const SNAP_TOL: f64 = 1e-12;

impl GraphFunctionMesh {
    /// Evaluate at a point inside triangle `t` given by barycentric
    /// coordinates (l2, l3) toward vertices 1 and 2.
    pub fn eval_on(&self, t: usize, l2: f64, l3: f64) -> f64 {
        let tri = self.mesh.triangles()[t];
        let te = self.mesh.triangle_edge_ids(t);
        let l1 = 1.0 - l2 - l3;
        let v = [
            self.node_values[tri[0]],
            self.node_values[tri[1]],
            self.node_values[tri[2]],
        ];
        // Edge ids per local side (v0,v1), (v1,v2), (v2,v0).
        let e = [
            self.edge_values[te[0]],
            self.edge_values[te[1]],
            self.edge_values[te[2]],
        ];
        v[0] * l1 * (2.0 * l1 - 1.0)
            + v[1] * l2 * (2.0 * l2 - 1.0)
            + v[2] * l3 * (2.0 * l3 - 1.0)
            + 4.0 * e[0] * l1 * l2
            + 4.0 * e[1] * l2 * l3
            + 4.0 * e[2] * l3 * l1
    }

    /// Physical gradient on triangle `t` at barycentric (l2, l3).
    pub fn gradient_on(&self, t: usize, l2: f64, l3: f64) -> Vec2 {
        let tri = self.mesh.triangles()[t];
        let te = self.mesh.triangle_edge_ids(t);
        let l1 = 1.0 - l2 - l3;
        let v = [
            self.node_values[tri[0]],
            self.node_values[tri[1]],
            self.node_values[tri[2]],
        ];
        let e = [
            self.edge_values[te[0]],
            self.edge_values[te[1]],
            self.edge_values[te[2]],
        ];
        // Reference gradient: d/d(l2, l3) with l1 = 1 - l2 - l3.
        let d_l2 = -v[0] * (4.0 * l1 - 1.0)
            + v[1] * (4.0 * l2 - 1.0)
            + 4.0 * e[0] * (l1 - l2)
            + 4.0 * e[1] * l3
            - 4.0 * e[2] * l3;
        let d_l3 = -v[0] * (4.0 * l1 - 1.0)
            + v[2] * (4.0 * l3 - 1.0)
            - 4.0 * e[0] * l2
            + 4.0 * e[1] * l2
            + 4.0 * e[2] * (l1 - l3);
        let b = self.jacobian(t);
        let binv_t = b
            .try_inverse()
            .expect("triangulation guarantees nondegenerate triangles")
            .transpose();
        binv_t * Vector2::new(d_l2, d_l3)
    }

    /// Constant physical Hessian on triangle `t`.
    pub fn hessian_on(&self, t: usize) -> Matrix2<f64> {
        let tri = self.mesh.triangles()[t];
        let te = self.mesh.triangle_edge_ids(t);
        let v = [
            self.node_values[tri[0]],
            self.node_values[tri[1]],
            self.node_values[tri[2]],
        ];
        let e = [
            self.edge_values[te[0]],
            self.edge_values[te[1]],
            self.edge_values[te[2]],
        ];
        // Reference Hessian in (l2, l3): quadratic coefficients.
        // q = sum v_i phi_i + sum e_k psi_k with the P2 Lagrange basis.
        let h22 = 4.0 * (v[0] + v[1]) - 8.0 * e[0];
        let h33 = 4.0 * (v[0] + v[2]) - 8.0 * e[2];
        let h23 = 4.0 * v[0] + 4.0 * e[1] - 4.0 * e[0] - 4.0 * e[2];
        let href = Matrix2::new(h22, h23, h23, h33);
        let binv = self
            .jacobian(t)
            .try_inverse()
            .expect("triangulation guarantees nondegenerate triangles");
        binv.transpose() * href * binv
    }

    fn jacobian(&self, t: usize) -> Matrix2<f64> {
        let tri = self.mesh.triangles()[t];
        let p = [
            self.mesh.vertices()[tri[0]],
            self.mesh.vertices()[tri[1]],
            self.mesh.vertices()[tri[2]],
        ];
        Matrix2::from_columns(&[p[1] - p[0], p[2] - p[0]])
    }

    /// H1(omega) distance to an analytic function, by a degree-4 rule.
    pub fn h1_error(&self, u: &dyn Fn(Vec2) -> f64, grad_u: &dyn Fn(Vec2) -> Vec2) -> f64 {
        // 6-point degree-4 triangle rule.
        const W1: f64 = 0.223_381_589_678_011;
        const W2: f64 = 0.109_951_743_655_322;
        const A1: f64 = 0.445_948_490_915_965;
        const A2: f64 = 0.091_576_213_509_771;
        let pts = [
            (A1, A1, W1),
            (1.0 - 2.0 * A1, A1, W1),
            (A1, 1.0 - 2.0 * A1, W1),
            (A2, A2, W2),
            (1.0 - 2.0 * A2, A2, W2),
            (A2, 1.0 - 2.0 * A2, W2),
        ];
        let mut total = 0.0;
        for t in 0..self.mesh.triangles().len() {
            let tri = self.mesh.triangles()[t];
            let p = [
                self.mesh.vertices()[tri[0]],
                self.mesh.vertices()[tri[1]],
                self.mesh.vertices()[tri[2]],
            ];
            let area = signed_area(&p[0], &p[1], &p[2]);
            for (l2, l3, w) in pts {
                let x = (1.0 - l2 - l3) * p[0] + l2 * p[1] + l3 * p[2];
                let du = self.eval_on(t, l2, l3) - u(x);
                let dg = self.gradient_on(t, l2, l3) - grad_u(x);
                total += 2.0 * area * w * (du * du + dg.norm_squared());
            }
        }
        total.sqrt()
    }
}

/// Jump of the normal gradient of a P1 function across an interior edge, as
/// a linear form over the vertex coefficients. The normal points into the
/// left triangle, so convex functions have nonnegative jumps.
fn p1_jump_row(mesh: &TriMesh2, edge: usize) -> Option<Vec<(usize, f64)>> {
    let e = mesh.edges()[edge];
    let right = e.right?;
    let n = {
        let d = mesh.vertices()[e.b] - mesh.vertices()[e.a];
        Vec2::new(-d.y, d.x).normalize()
    };
    let mut row: Vec<(usize, f64)> = Vec::new();
    let mut add = |tri: usize, sign: f64| {
        let t = mesh.triangles()[tri];
        let p = [
            mesh.vertices()[t[0]],
            mesh.vertices()[t[1]],
            mesh.vertices()[t[2]],
        ];
        let b = Matrix2::from_columns(&[p[1] - p[0], p[2] - p[0]]);
        let binv_t = b.try_inverse().unwrap().transpose();
        // Gradients of the three hat functions.
        let g2 = binv_t * Vector2::new(1.0, 0.0);
        let g3 = binv_t * Vector2::new(0.0, 1.0);
        let g1 = -(g2 + g3);
        for (v, g) in [(t[0], g1), (t[1], g2), (t[2], g3)] {
            row.push((v, sign * g.dot(&n)));
        }
    };
    add(e.left, 1.0);
    add(right, -1.0);
    Some(row)
}

/// Jump of the normal gradient of the piecewise quadratic at a point on an
/// interior edge, given by the barycentric position s in [0, 1] from a to b.
fn p2_jump_at(g: &GraphFunctionMesh, edge: usize, s: f64) -> Option<f64> {
    let e = g.mesh.edges()[edge];
    let right = e.right?;
    let n = {
        let d = g.mesh.vertices()[e.b] - g.mesh.vertices()[e.a];
        Vec2::new(-d.y, d.x).normalize()
    };
    let x = (1.0 - s) * g.mesh.vertices()[e.a] + s * g.mesh.vertices()[e.b];
    let bary = |tri: usize| -> (f64, f64) {
        let t = g.mesh.triangles()[tri];
        let p = [
            g.mesh.vertices()[t[0]],
            g.mesh.vertices()[t[1]],
            g.mesh.vertices()[t[2]],
        ];
        let b = Matrix2::from_columns(&[p[1] - p[0], p[2] - p[0]]);
        let l = b.try_inverse().unwrap() * (x - p[0]);
        (l.x, l.y)
    };
    let (l2, l3) = bary(e.left);
    let (r2, r3) = bary(right);
    Some((g.gradient_on(e.left, l2, l3) - g.gradient_on(right, r2, r3)).dot(&n))
}

/// Build the convex piecewise-quadratic interpolant of `u` on `mesh`:
/// I2(u) + gamma1 h psi + gamma2 h phi with phi = |x|^2 / 2. The correction
/// psi is the minimum-infinity-norm P1 function with unit normal-gradient
/// jumps, found by LP; gamma1 and gamma2 are the smallest multipliers that
/// push all jumps and Hessians to be nonnegative.
pub fn convex_interpolate_graph(
    u: &dyn Fn(Vec2) -> f64,
    mesh: &TriMesh2,
    tols: &Tolerances,
) -> Result<GraphFunctionMesh, IsoError> {
    let h = mesh.h();
    let nv = mesh.vertices().len();
    let ne = mesh.edges().len();

    let node_values: Vec<f64> = mesh.vertices().iter().map(|&p| u(p)).collect();
    let edge_values: Vec<f64> = (0..ne).map(|e| u(mesh.edge_midpoint(e))).collect();

    // psi by LP: minimize t subject to jump_e(psi) >= 1 on interior edges
    // and -t <= psi_i <= t.
    let interior: Vec<usize> = (0..ne).filter(|&e| mesh.is_interior_edge(e)).collect();
    let psi = if interior.is_empty() {
        vec![0.0; nv]
    } else {
        let nrows = interior.len() + 2 * nv;
        let mut coeffs = DMatrix::zeros(nrows, nv + 1);
        let mut rhs = vec![0.0; nrows];
        for (r, &e) in interior.iter().enumerate() {
            // -jump(psi) <= -1, equilibrated to unit row norm
            let row = p1_jump_row(mesh, e).unwrap();
            let scale = row.iter().fold(0.0_f64, |m, (_, c)| m.max(c.abs())).max(1e-300);
            for (v, c) in row {
                coeffs[(r, v)] += -c / scale;
            }
            rhs[r] = -1.0 / scale;
        }
        for i in 0..nv {
            let r0 = interior.len() + 2 * i;
            coeffs[(r0, i)] = 1.0;
            coeffs[(r0, nv)] = -1.0;
            coeffs[(r0 + 1, i)] = -1.0;
            coeffs[(r0 + 1, nv)] = -1.0;
        }
        let mut cost = vec![0.0; nv + 1];
        cost[nv] = 1.0;
        let mut lower = vec![None; nv + 1];
        lower[nv] = Some(0.0);
        let lp = LpProblem {
            cost,
            ineq_coeffs: coeffs,
            ineq_rhs: rhs,
            eq_coeffs: DMatrix::zeros(0, nv + 1),
            eq_rhs: vec![],
            lower_bounds: lower,
        };
        match lp_solve_with(&lp, tols)? {
            LpOutcome::Feasible { x, .. } => x[..nv].to_vec(),
            LpOutcome::Infeasible { .. } | LpOutcome::Unbounded => {
                return Err(IsoError::MeshAssumption(
                    "no P1 correction with unit gradient jumps exists on this mesh".into(),
                ))
            }
        }
    };

    // gamma1 from the most negative interpolant jump (endpoints suffice:
    // the jump of a piecewise quadratic is affine along each edge).
    let probe = |node_values: &[f64], edge_values: &[f64]| GraphFunctionMesh {
        mesh: mesh.clone(),
        node_values: node_values.to_vec(),
        edge_values: edge_values.to_vec(),
        psi: vec![],
        gamma1: 0.0,
        gamma2: 0.0,
        certification: GraphCertification {
            min_hessian_eig: 0.0,
            min_jump: 0.0,
            passed: false,
        },
    };
    let i2 = probe(&node_values, &edge_values);
    let mut min_jump = f64::INFINITY;
    for &e in &interior {
        for s in [0.0, 1.0] {
            min_jump = min_jump.min(p2_jump_at(&i2, e, s).unwrap());
        }
    }
    if interior.is_empty() {
        min_jump = 0.0;
    }
    // The LP guarantees psi jumps >= 1 only up to solver slack; measure the
    // actual worst jump and scale the correction so the final bound holds by
    // construction. Violations at roundoff level are not corrected, so exact
    // reproduction of quadratics yields gamma1 = gamma2 = 0.
    let psi_fun = probe(
        &psi,
        &(0..ne)
            .map(|eid| {
                let e = mesh.edges()[eid];
                (psi[e.a] + psi[e.b]) / 2.0
            })
            .collect::<Vec<f64>>(),
    );
    let mut psi_min_jump = f64::INFINITY;
    for &e in &interior {
        psi_min_jump = psi_min_jump.min(p2_jump_at(&psi_fun, e, 0.5).unwrap());
    }
    let gamma1 = if min_jump + SNAP_TOL >= 0.0 {
        0.0
    } else if psi_min_jump > 0.0 {
        -(min_jump + SNAP_TOL) / (h * psi_min_jump)
    } else {
        return Err(IsoError::Solver(crate::solvers::SolverError::Dimension(
            format!("correction LP returned an inconsistent solution (worst psi jump {psi_min_jump:.3e})"),
        )));
    };

    // Apply gamma1 h psi (P1: midpoint value is the endpoint average).
    let mut nodes1 = node_values.clone();
    let mut edges1 = edge_values.clone();
    for (v, val) in nodes1.iter_mut().enumerate() {
        *val += gamma1 * h * psi[v];
    }
    for (eid, val) in edges1.iter_mut().enumerate() {
        let e = mesh.edges()[eid];
        *val += gamma1 * h * (psi[e.a] + psi[e.b]) / 2.0;
    }

    // gamma2 from the most negative Hessian eigenvalue.
    let u1 = probe(&nodes1, &edges1);
    let mut min_eig = f64::INFINITY;
    for t in 0..mesh.triangles().len() {
        let hm = u1.hessian_on(t);
        min_eig = min_eig.min(sym_min_eig(&hm));
    }
    let gamma2 = (-(min_eig + SNAP_TOL)).max(0.0) / h;

    // Apply gamma2 h phi exactly through its Lagrange values.
    let phi = |p: Vec2| p.norm_squared() / 2.0;
    let mut nodes2 = nodes1;
    let mut edges2 = edges1;
    for (v, val) in nodes2.iter_mut().enumerate() {
        *val += gamma2 * h * phi(mesh.vertices()[v]);
    }
    for (eid, val) in edges2.iter_mut().enumerate() {
        *val += gamma2 * h * phi(mesh.edge_midpoint(eid));
    }

    let mut out = GraphFunctionMesh {
        mesh: mesh.clone(),
        node_values: nodes2,
        edge_values: edges2,
        psi,
        gamma1,
        gamma2,
        certification: GraphCertification {
            min_hessian_eig: 0.0,
            min_jump: 0.0,
            passed: false,
        },
    };
    out.certification = certify(&out);
    Ok(out)
}

/// Certification sweep of the final function: per-triangle Hessian
/// eigenvalues and per-interior-edge jumps at both endpoints.
pub fn certify(g: &GraphFunctionMesh) -> GraphCertification {
    let mut min_eig = f64::INFINITY;
    for t in 0..g.mesh.triangles().len() {
        min_eig = min_eig.min(sym_min_eig(&g.hessian_on(t)));
    }
    let mut min_jump = f64::INFINITY;
    for e in 0..g.mesh.edges().len() {
        if g.mesh.is_interior_edge(e) {
            for s in [0.0, 1.0] {
                min_jump = min_jump.min(p2_jump_at(g, e, s).unwrap());
            }
        }
    }
    if !min_jump.is_finite() {
        min_jump = 0.0;
    }
    if !min_eig.is_finite() {
        min_eig = 0.0;
    }
    GraphCertification {
        min_hessian_eig: min_eig,
        min_jump,
        passed: min_eig >= -CERT_TOL && min_jump >= -CERT_TOL,
    }
}

fn sym_min_eig(m: &Matrix2<f64>) -> f64 {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    tr / 2.0 - (tr * tr / 4.0 - det).max(0.0).sqrt()
}
