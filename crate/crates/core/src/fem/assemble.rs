//! Element-wise P1 assembly of stiffness, mass and load.

use super::{FemError, StateProblem};
use crate::mesh::TetMesh;
use crate::solvers::CsrMatrix;
use crate::Vec3;

/// Barycentric 4-point rule, exact for quadratics (weights sum to 1).
pub const TET_QUADRATURE: [[f64; 4]; 4] = {
    const A: f64 = 0.585_410_196_624_968_5;
    const B: f64 = 0.138_196_601_125_010_5;
    [
        [A, B, B, B],
        [B, A, B, B],
        [B, B, A, B],
        [B, B, B, A],
    ]
};

/// Per-element geometry used by every assembly in this crate: vertex
/// gradients of the barycentric basis and the element volume.
pub(crate) struct ElementGeometry {
    pub grads: [Vec3; 4],
    pub volume: f64,
    pub vertices: [Vec3; 4],
}

pub(crate) fn element_geometry(mesh: &TetMesh, t: usize) -> Result<ElementGeometry, FemError> {
    let tet = mesh.tets()[t];
    let p: [Vec3; 4] = [
        mesh.vertices()[tet[0]],
        mesh.vertices()[tet[1]],
        mesh.vertices()[tet[2]],
        mesh.vertices()[tet[3]],
    ];
    let e = nalgebra::Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]);
    let det = e.determinant();
    if det <= 0.0 || !det.is_finite() {
        return Err(FemError::DegenerateElement(t));
    }
    let inv = e.try_inverse().ok_or(FemError::DegenerateElement(t))?;
    // Rows of E^-1 are the gradients of barycentric coordinates 1..3.
    let g1 = Vec3::new(inv[(0, 0)], inv[(0, 1)], inv[(0, 2)]);
    let g2 = Vec3::new(inv[(1, 0)], inv[(1, 1)], inv[(1, 2)]);
    let g3 = Vec3::new(inv[(2, 0)], inv[(2, 1)], inv[(2, 2)]);
    let g0 = -(g1 + g2 + g3);
    Ok(ElementGeometry {
        grads: [g0, g1, g2, g3],
        volume: det / 6.0,
        vertices: p,
    })
}

impl ElementGeometry {
    pub fn quad_point(&self, q: usize) -> Vec3 {
        let l = TET_QUADRATURE[q];
        l[0] * self.vertices[0]
            + l[1] * self.vertices[1]
            + l[2] * self.vertices[2]
            + l[3] * self.vertices[3]
    }
}

/// The assembled linear algebra of a state problem.
pub struct AssembledSystem {
    /// Stiffness (grad, grad); symmetric positive semidefinite with the
    /// constants in its kernel.
    pub stiffness: CsrMatrix,
    /// Consistent P1 mass matrix; symmetric positive definite.
    pub mass: CsrMatrix,
    /// Load vector from 4-point quadrature of f against the basis.
    pub load: Vec<f64>,
}

/// Assemble K, M, b for the given problem.
pub fn assemble(mesh: &TetMesh, problem: &StateProblem) -> Result<AssembledSystem, FemError> {
    let n = mesh.num_vertices();
    let nt = mesh.num_tets();
    let mut k_trip = Vec::with_capacity(16 * nt);
    let mut m_trip = Vec::with_capacity(16 * nt);
    let mut load = vec![0.0; n];
    for t in 0..nt {
        let geo = element_geometry(mesh, t)?;
        let tet = mesh.tets()[t];
        let vol = geo.volume;
        for i in 0..4 {
            for j in 0..4 {
                k_trip.push((tet[i], tet[j], vol * geo.grads[i].dot(&geo.grads[j])));
                let mij = if i == j { vol / 10.0 } else { vol / 20.0 };
                m_trip.push((tet[i], tet[j], mij));
            }
        }
        for q in 0..4 {
            let x = geo.quad_point(q);
            let f = problem.forcing.eval(&x);
            let w = vol / 4.0;
            for i in 0..4 {
                load[tet[i]] += w * f * TET_QUADRATURE[q][i];
            }
        }
    }
    Ok(AssembledSystem {
        stiffness: CsrMatrix::from_triplets(n, n, k_trip),
        mass: CsrMatrix::from_triplets(n, n, m_trip),
        load,
    })
}
