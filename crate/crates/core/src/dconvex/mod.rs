//! Discrete convexity machinery: normal cones and Farkas-type support-plane
//! certification per boundary node patch, constraint values and gradients
//! for the optimization loop, convex hulls, global checks and hull-projection
//! post-processing.

mod hull;
pub mod oracle;

pub use hull::{convex_hull, orientation, ConvexHull, HULL_DISTANCE_TOL};

use crate::mesh::{BoundaryNodePatch, MeshError, TetMesh};
use crate::solvers::{lp_solve_with, LpOutcome, LpProblem, SolverError, Tolerances};
use crate::Vec3;
use nalgebra::DMatrix;
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DconvexError {
    #[error("degenerate hull input: {0}")]
    DegenerateHullInput(String),
    #[error("hull construction left point {point} outside (distance {distance:.3e})")]
    HullInconsistent { point: usize, distance: f64 },
    #[error("post-processing could not repair inverted elements near vertex {0}")]
    PostProcessInversion(usize),
    #[error("post-processing left the mesh globally non-convex")]
    PostProcessIncomplete,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Default interior-cone margin for the certification LP.
pub const DEFAULT_EPSILON: f64 = 1e-3;
/// Default number of margin halvings before declaring a patch uncertified.
pub const DEFAULT_K_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CertStatus {
    Certified,
    Uncertified,
}

/// Outcome of support-plane certification for one node patch: multipliers
/// over the incident facet normals and the combined support normal.
#[derive(Debug, Clone)]
pub struct SupportCertificate {
    /// Center vertex id of the patch.
    pub vertex: usize,
    /// Multipliers, one per ring facet; nonnegative, summing to one. For an
    /// uncertified patch these are the most-feasible multipliers from the
    /// last relaxation level.
    pub lambda: Vec<f64>,
    /// v_z = sum_j lambda_j n_{F_j}.
    pub normal: Vec3,
    /// Relaxation level at which the LP became feasible (or the last tried).
    pub k_used: usize,
    pub status: CertStatus,
}

/// M_{i,j} = (z_i - z) . n_{F_j} with n_{F_j} = (z - z_j) x (z - z_{j+1}).
pub fn cone_matrix(patch: &BoundaryNodePatch) -> DMatrix<f64> {
    let m = patch.ring_len();
    let normals = patch.facet_normals();
    let mut mat = DMatrix::zeros(m, m);
    for i in 0..m {
        let d = patch.ring_pos[i] - patch.center_pos;
        for j in 0..m {
            mat[(i, j)] = d.dot(&normals[j]);
        }
    }
    mat
}

/// Find a support-plane certificate by the relaxation loop: for
/// k = 0..=k_max solve min 1'M lambda s.t. M lambda <= 0, sum lambda = 1,
/// lambda >= 0.5^k epsilon, and accept the first feasible level.
pub fn certify_patch(
    patch: &BoundaryNodePatch,
    epsilon: f64,
    k_max: usize,
    tols: &Tolerances,
) -> Result<SupportCertificate, DconvexError> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let m = patch.ring_len();
    let mat = cone_matrix(patch);
    let normals = patch.facet_normals();

    // min 1'M lambda = (column sums of M) . lambda
    let cost: Vec<f64> = (0..m).map(|j| mat.column(j).sum()).collect();
    let mut last_best: Option<Vec<f64>> = None;
    let mut k_last = 0;
    for k in 0..=k_max {
        let bound = 0.5_f64.powi(k as i32) * epsilon;
        let lp = LpProblem {
            cost: cost.clone(),
            ineq_coeffs: mat.clone(),
            ineq_rhs: vec![0.0; m],
            eq_coeffs: DMatrix::from_element(1, m, 1.0),
            eq_rhs: vec![1.0],
            lower_bounds: vec![Some(bound); m],
        };
        match lp_solve_with(&lp, tols)? {
            LpOutcome::Feasible { x, .. } => {
                let normal = combine_normal(&x, &normals);
                return Ok(SupportCertificate {
                    vertex: patch.center,
                    lambda: x,
                    normal,
                    k_used: k,
                    status: CertStatus::Certified,
                });
            }
            LpOutcome::Infeasible { best_effort } => {
                last_best = Some(best_effort);
                k_last = k;
            }
            LpOutcome::Unbounded => unreachable!("feasibility objective bounded on the simplex"),
        }
    }
    let lambda = last_best.unwrap_or_else(|| vec![1.0 / m as f64; m]);
    let normal = combine_normal(&lambda, &normals);
    Ok(SupportCertificate {
        vertex: patch.center,
        lambda,
        normal,
        k_used: k_last,
        status: CertStatus::Uncertified,
    })
}

fn combine_normal(lambda: &[f64], normals: &[Vec3]) -> Vec3 {
    lambda
        .iter()
        .zip(normals)
        .map(|(l, n)| *l * n)
        .sum()
}

/// C^z_i = sum_j lambda_j (z_i - z) . [(z - z_j) x (z - z_{j+1})].
pub fn constraint_values(patch: &BoundaryNodePatch, lambda: &[f64]) -> Vec<f64> {
    let m = patch.ring_len();
    assert_eq!(lambda.len(), m);
    let normal = combine_normal(lambda, &patch.facet_normals());
    (0..m)
        .map(|i| (patch.ring_pos[i] - patch.center_pos).dot(&normal))
        .collect()
}

/// Exact derivative of each C^z_i with respect to the coordinates of the
/// participating vertices, with the multipliers frozen. Rows are sparse maps
/// from vertex id to the 3-gradient.
pub fn constraint_gradient(
    patch: &BoundaryNodePatch,
    lambda: &[f64],
) -> Vec<HashMap<usize, Vec3>> {
    let m = patch.ring_len();
    assert_eq!(lambda.len(), m);
    let z = patch.center_pos;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let mut row: HashMap<usize, Vec3> = HashMap::new();
        let di = patch.ring_pos[i] - z;
        for j in 0..m {
            let lj = lambda[j];
            if lj == 0.0 {
                continue;
            }
            let jn = (j + 1) % m;
            let u = z - patch.ring_pos[j];
            let w = z - patch.ring_pos[jn];
            // T = det[d_i; u; w]; dT/d(d_i) = u x w, dT/du = w x d_i,
            // dT/dw = d_i x u; chain through d_i = z_i - z, u = z - z_j,
            // w = z - z_{j+1}.
            let g_di = u.cross(&w);
            let g_u = w.cross(&di);
            let g_w = di.cross(&u);
            *row.entry(patch.ring[i]).or_insert_with(Vec3::zeros) += lj * g_di;
            *row.entry(patch.center).or_insert_with(Vec3::zeros) += lj * (g_u + g_w - g_di);
            *row.entry(patch.ring[j]).or_insert_with(Vec3::zeros) -= lj * g_u;
            *row.entry(patch.ring[jn]).or_insert_with(Vec3::zeros) -= lj * g_w;
        }
        rows.push(row);
    }
    rows
}

/// Per-vertex result of the global convexity check.
#[derive(Debug, Clone)]
pub struct VertexCheck {
    pub vertex: usize,
    pub status: CertStatus,
    /// max_i C^z_i at the certificate multipliers.
    pub max_constraint: f64,
    /// Depth inside the hull of the boundary vertex set (~0 on the hull).
    pub hull_distance: f64,
    pub globally_supported: bool,
}

/// Global convexity report: local certificates plus hull-based support.
#[derive(Debug, Clone)]
pub struct ConvexityReport {
    pub per_vertex: Vec<VertexCheck>,
    /// max over boundary vertices of max_i C^z_i.
    pub max_local_violation: f64,
    /// True when every boundary vertex lies on the hull of the boundary
    /// vertex set.
    pub global: bool,
    pub violating: Vec<usize>,
    pub epsilon: f64,
    pub k_max: usize,
}

impl ConvexityReport {
    /// CSV rows: vertex id, status, max C^z_i, hull distance.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("vertex,status,max_c,hull_distance\n");
        for v in &self.per_vertex {
            let _ = writeln!(
                s,
                "{},{},{:.17e},{:.17e}",
                v.vertex,
                match v.status {
                    CertStatus::Certified => "certified",
                    CertStatus::Uncertified => "uncertified",
                },
                v.max_constraint,
                v.hull_distance
            );
        }
        s
    }
}

/// Check local certificates for all boundary patches and global support
/// against the hull of the boundary vertex set. The two can disagree (a
/// locally supported vertex may still be inside the hull), which the report
/// exposes per vertex.
pub fn check_global(
    mesh: &TetMesh,
    epsilon: f64,
    k_max: usize,
    tols: &Tolerances,
) -> Result<ConvexityReport, DconvexError> {
    let boundary = mesh.boundary_vertices();
    let positions: Vec<Vec3> = boundary.iter().map(|&v| mesh.vertices()[v]).collect();
    let hull = convex_hull(&positions)?;
    let scale = mesh.h().max(1e-300);
    let tol = HULL_DISTANCE_TOL * scale.max(1.0);

    let mut per_vertex = Vec::with_capacity(boundary.len());
    let mut max_local = f64::NEG_INFINITY;
    let mut violating = Vec::new();
    for (bi, &z) in boundary.iter().enumerate() {
        let patch = mesh.boundary_node_patch(z)?;
        let cert = certify_patch(&patch, epsilon, k_max, tols)?;
        let max_c = constraint_values(&patch, &cert.lambda)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        max_local = max_local.max(max_c);
        let depth = -hull.signed_distance(&positions[bi]);
        let supported = depth <= tol;
        if !supported {
            violating.push(z);
        }
        per_vertex.push(VertexCheck {
            vertex: z,
            status: cert.status,
            max_constraint: max_c,
            hull_distance: depth,
            globally_supported: supported,
        });
    }
    Ok(ConvexityReport {
        per_vertex,
        max_local_violation: max_local,
        global: violating.is_empty(),
        violating,
        epsilon,
        k_max,
    })
}

/// Volume of conv(boundary vertices) minus the mesh volume.
pub fn hull_distance_defect(mesh: &TetMesh) -> Result<f64, DconvexError> {
    let boundary = mesh.boundary_vertices();
    let positions: Vec<Vec3> = boundary.iter().map(|&v| mesh.vertices()[v]).collect();
    let hull = convex_hull(&positions)?;
    Ok(hull.volume() - mesh.volume())
}

/// Project every globally violating boundary vertex onto the hull of the
/// boundary vertex set along its averaged outward facet normal. Interior
/// vertices move only if needed to undo an element inversion (local
/// Laplacian smoothing).
pub fn post_process(
    mesh: &TetMesh,
    report: &ConvexityReport,
    tols: &Tolerances,
) -> Result<TetMesh, DconvexError> {
    if report.violating.is_empty() {
        return Ok(mesh.clone());
    }
    let boundary = mesh.boundary_vertices();
    let positions: Vec<Vec3> = boundary.iter().map(|&v| mesh.vertices()[v]).collect();
    let hull = convex_hull(&positions)?;

    let mut vertices = mesh.vertices().to_vec();
    for &z in &report.violating {
        let patch = mesh.boundary_node_patch(z)?;
        let dir: Vec3 = patch.facet_normals().iter().sum();
        let n = dir.norm();
        if n == 0.0 {
            continue;
        }
        let dir = dir / n;
        if let Some(t) = hull.ray_exit(&vertices[z], &dir) {
            vertices[z] += t * dir;
        }
    }

    let repaired = match mesh.with_vertices(vertices.clone()) {
        Ok(m) => m,
        Err(MeshError::Inverted { .. }) => smooth_out_inversions(mesh, vertices)?,
        Err(e) => return Err(e.into()),
    };
    // The hull is unchanged by moving interior-of-hull vertices onto it, so
    // one pass must restore global support.
    let recheck = check_global(&repaired, report.epsilon, report.k_max, tols)?;
    if !recheck.global {
        return Err(DconvexError::PostProcessIncomplete);
    }
    Ok(repaired)
}

/// Laplacian smoothing of interior vertices adjacent to inverted elements.
fn smooth_out_inversions(mesh: &TetMesh, mut vertices: Vec<Vec3>) -> Result<TetMesh, DconvexError> {
    let boundary = mesh.boundary_vertices();
    let mut is_boundary = vec![false; mesh.num_vertices()];
    for &b in &boundary {
        is_boundary[b] = true;
    }
    // Vertex -> neighbor set.
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); mesh.num_vertices()];
    for t in mesh.tets() {
        for &a in t {
            for &b in t {
                if a != b && !neighbors[a].contains(&b) {
                    neighbors[a].push(b);
                }
            }
        }
    }
    for _sweep in 0..20 {
        let mut bad_vertices: Vec<usize> = Vec::new();
        for tet in mesh.tets() {
            let vol = super::mesh::signed_volume(
                &vertices[tet[0]],
                &vertices[tet[1]],
                &vertices[tet[2]],
                &vertices[tet[3]],
            );
            if vol <= 0.0 {
                bad_vertices.extend(tet.iter().copied());
            }
        }
        if bad_vertices.is_empty() {
            return Ok(mesh.with_vertices(vertices)?);
        }
        bad_vertices.sort_unstable();
        bad_vertices.dedup();
        let mut moved = false;
        for v in bad_vertices {
            if is_boundary[v] || neighbors[v].is_empty() {
                continue;
            }
            let avg: Vec3 =
                neighbors[v].iter().map(|&u| vertices[u]).sum::<Vec3>() / neighbors[v].len() as f64;
            vertices[v] = avg;
            moved = true;
        }
        if !moved {
            break;
        }
    }
    // Final attempt; report the first stuck vertex if still inverted.
    match mesh.with_vertices(vertices) {
        Ok(m) => Ok(m),
        Err(MeshError::Inverted { tet, .. }) => {
            Err(DconvexError::PostProcessInversion(mesh.tets()[tet][0]))
        }
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests;
