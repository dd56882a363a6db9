//! Tetrahedral mesh data model: construction with invariant checks, boundary
//! extraction, node patches, deformation and quality reports.
//!
//! Meshes are immutable after construction. Every operation either borrows
//! the mesh or returns a new one, so values can be shared freely.

mod generate;
mod io;
mod patch;
mod quality;

pub use generate::{generate_box_mesh, generate_ellipsoid_mesh, EllipsoidSpec, MAX_REFINEMENT};
pub use io::{parse_ele_str, parse_node_str, read_mesh, write_node_ele, write_vtk, MeshIoError, VtkField};
pub use patch::BoundaryNodePatch;
pub use quality::{mesh_quality, MeshQuality};

use crate::Vec3;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("tet {tet} references vertex {vertex} but the mesh has {num_vertices} vertices")]
    IndexOutOfRange {
        tet: usize,
        vertex: usize,
        num_vertices: usize,
    },
    #[error("tet {0} is degenerate (zero signed volume)")]
    DegenerateTet(usize),
    #[error("facet {0:?} is shared by more than two tets")]
    OverSharedFacet([usize; 3]),
    #[error("boundary edge ({0}, {1}) is incident to {2} boundary facets; boundary is not a closed 2-manifold")]
    NonManifoldBoundaryEdge(usize, usize, usize),
    #[error("deformation inverts element {tet} (signed volume {volume:.3e})")]
    Inverted { tet: usize, volume: f64 },
    #[error("vertex {0} is not a boundary vertex")]
    NotABoundaryVertex(usize),
    #[error("boundary patch around vertex {0} is not a single closed ring")]
    DisconnectedPatch(usize),
    #[error("refinement level {requested} exceeds the supported maximum {max}")]
    Resource { requested: usize, max: usize },
    #[error("invalid ellipsoid spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] MeshIoError),
}

/// A conforming tetrahedral mesh with consistently oriented (positive
/// volume) elements and derived outward-oriented boundary facets.
#[derive(Debug, Clone)]
pub struct TetMesh {
    vertices: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    boundary_facets: Vec<[usize; 3]>,
    /// For each boundary facet, the owning tet's vertex opposite to it.
    boundary_opposite: Vec<usize>,
    h: f64,
}

/// Signed volume of the tetrahedron (a, b, c, d).
pub fn signed_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
}

impl TetMesh {
    /// Build a mesh, fixing element orientation to positive volume and
    /// deriving the boundary. Rejects degenerate elements and non-manifold
    /// boundaries.
    pub fn new(vertices: Vec<Vec3>, mut tets: Vec<[usize; 4]>) -> Result<Self, MeshError> {
        let nv = vertices.len();
        for (ti, tet) in tets.iter_mut().enumerate() {
            for &v in tet.iter() {
                if v >= nv {
                    return Err(MeshError::IndexOutOfRange {
                        tet: ti,
                        vertex: v,
                        num_vertices: nv,
                    });
                }
            }
            let vol = signed_volume(
                &vertices[tet[0]],
                &vertices[tet[1]],
                &vertices[tet[2]],
                &vertices[tet[3]],
            );
            if vol == 0.0 {
                return Err(MeshError::DegenerateTet(ti));
            }
            if vol < 0.0 {
                tet.swap(2, 3);
            }
        }
        let (boundary_facets, boundary_opposite) = derive_boundary(&tets)?;
        let h = max_diameter(&vertices, &tets);
        Ok(Self {
            vertices,
            tets,
            boundary_facets,
            boundary_opposite,
            h,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    /// Outward-oriented boundary facets.
    pub fn boundary_facets(&self) -> &[[usize; 3]] {
        &self.boundary_facets
    }

    /// For boundary facet `i`, the vertex of the owning tet opposite to it.
    pub fn boundary_opposite_vertex(&self, i: usize) -> usize {
        self.boundary_opposite[i]
    }

    /// Maximal element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Sorted list of boundary vertex indices.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .boundary_facets
            .iter()
            .flat_map(|f| f.iter().copied())
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tets[t];
        signed_volume(
            &self.vertices[a],
            &self.vertices[b],
            &self.vertices[c],
            &self.vertices[d],
        )
    }

    /// Total mesh volume.
    pub fn volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.tet_volume(t)).sum()
    }

    /// Volume-weighted centroid.
    pub fn centroid(&self) -> Vec3 {
        let mut c = Vec3::zeros();
        let mut vol = 0.0;
        for t in 0..self.tets.len() {
            let v = self.tet_volume(t);
            let [a, b, c3, d] = self.tets[t];
            c += v * (self.vertices[a] + self.vertices[b] + self.vertices[c3] + self.vertices[d])
                / 4.0;
            vol += v;
        }
        c / vol
    }

    /// Move every vertex by `t * field[v]`. Connectivity is unchanged and the
    /// input mesh is untouched. Fails if any element inverts, reporting the
    /// worst one.
    pub fn deform(&self, field: &[Vec3], t: f64) -> Result<TetMesh, MeshError> {
        assert_eq!(
            field.len(),
            self.vertices.len(),
            "deformation field must cover all vertices"
        );
        let vertices: Vec<Vec3> = self
            .vertices
            .iter()
            .zip(field)
            .map(|(x, v)| x + t * v)
            .collect();
        self.with_vertices(vertices)
    }

    /// Replace vertex positions keeping connectivity; fails on inversion with
    /// the worst element.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<TetMesh, MeshError> {
        assert_eq!(vertices.len(), self.vertices.len());
        let mut worst: Option<(usize, f64)> = None;
        for (ti, tet) in self.tets.iter().enumerate() {
            let vol = signed_volume(
                &vertices[tet[0]],
                &vertices[tet[1]],
                &vertices[tet[2]],
                &vertices[tet[3]],
            );
            if vol <= 0.0 && worst.is_none_or(|(_, w)| vol < w) {
                worst = Some((ti, vol));
            }
        }
        if let Some((tet, volume)) = worst {
            return Err(MeshError::Inverted { tet, volume });
        }
        let h = max_diameter(&vertices, &self.tets);
        Ok(TetMesh {
            vertices,
            tets: self.tets.clone(),
            boundary_facets: self.boundary_facets.clone(),
            boundary_opposite: self.boundary_opposite.clone(),
            h,
        })
    }

    /// Scan all structural invariants; used by tests and after generation.
    pub fn validate(&self) -> Result<(), MeshError> {
        for t in 0..self.tets.len() {
            if self.tet_volume(t) <= 0.0 {
                return Err(MeshError::DegenerateTet(t));
            }
        }
        derive_boundary(&self.tets)?;
        // Boundary facets must be oriented outward: the opposite tet vertex
        // lies strictly on the negative side.
        for (i, f) in self.boundary_facets.iter().enumerate() {
            let n = facet_normal(&self.vertices, f);
            let q = self.vertices[self.boundary_opposite[i]];
            if (q - self.vertices[f[0]]).dot(&n) >= 0.0 {
                return Err(MeshError::OverSharedFacet(*f));
            }
        }
        Ok(())
    }
}

/// Unnormalized outward normal of an oriented facet (twice its area vector).
pub fn facet_normal(vertices: &[Vec3], f: &[usize; 3]) -> Vec3 {
    (vertices[f[1]] - vertices[f[0]]).cross(&(vertices[f[2]] - vertices[f[0]]))
}

fn max_diameter(vertices: &[Vec3], tets: &[[usize; 4]]) -> f64 {
    let mut h: f64 = 0.0;
    for tet in tets {
        for i in 0..4 {
            for j in (i + 1)..4 {
                h = h.max((vertices[tet[i]] - vertices[tet[j]]).norm());
            }
        }
    }
    h
}

/// Outward-oriented faces of a positively oriented tet, each paired with the
/// opposite vertex.
fn outward_faces(t: &[usize; 4]) -> [([usize; 3], usize); 4] {
    let [v0, v1, v2, v3] = *t;
    [
        ([v1, v2, v3], v0),
        ([v0, v3, v2], v1),
        ([v0, v1, v3], v2),
        ([v0, v2, v1], v3),
    ]
}

fn derive_boundary(tets: &[[usize; 4]]) -> Result<(Vec<[usize; 3]>, Vec<usize>), MeshError> {
    let mut seen: HashMap<[usize; 3], ([usize; 3], usize, usize)> = HashMap::new();
    for tet in tets {
        for (face, opp) in outward_faces(tet) {
            let mut key = face;
            key.sort_unstable();
            match seen.entry(key) {
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert((face, opp, 1));
                }
                std::collections::hash_map::Entry::Occupied(mut e) => {
                    e.get_mut().2 += 1;
                    if e.get().2 > 2 {
                        return Err(MeshError::OverSharedFacet(key));
                    }
                }
            }
        }
    }
    let mut boundary: Vec<([usize; 3], usize)> = seen
        .into_values()
        .filter(|&(_, _, count)| count == 1)
        .map(|(face, opp, _)| (face, opp))
        .collect();
    boundary.sort_unstable_by_key(|(f, _)| *f);

    // Closed-2-manifold check: each boundary edge in exactly two facets.
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for (f, _) in &boundary {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            *edge_count.entry(key).or_insert(0) += 1;
        }
    }
    for ((a, b), c) in edge_count {
        if c != 2 {
            return Err(MeshError::NonManifoldBoundaryEdge(a, b, c));
        }
    }
    let opposite = boundary.iter().map(|&(_, o)| o).collect();
    let facets = boundary.into_iter().map(|(f, _)| f).collect();
    Ok((facets, opposite))
}

#[cfg(test)]
pub(crate) fn reference_tet() -> TetMesh {
    TetMesh::new(
        vec![
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ],
        vec![[0, 1, 2, 3]],
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_tet_has_four_boundary_facets() {
        let m = reference_tet();
        assert_eq!(m.boundary_facets().len(), 4);
        assert_eq!(m.boundary_vertices(), vec![0, 1, 2, 3]);
        assert!((m.volume() - 1.0 / 6.0).abs() < 1e-15);
        m.validate().unwrap();
    }

    #[test]
    fn two_glued_tets_expose_six_facets() {
        let m = TetMesh::new(
            vec![
                Vec3::zeros(),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
                Vec3::new(1.0, 1.0, 1.0),
            ],
            vec![[0, 1, 2, 3], [1, 2, 3, 4]],
        )
        .unwrap();
        assert_eq!(m.boundary_facets().len(), 6);
        m.validate().unwrap();
    }

    #[test]
    fn negative_orientation_is_fixed() {
        let m = TetMesh::new(
            vec![
                Vec3::zeros(),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 2, 1, 3]],
        )
        .unwrap();
        assert!(m.tet_volume(0) > 0.0);
    }

    #[test]
    fn degenerate_tet_is_rejected() {
        let r = TetMesh::new(
            vec![
                Vec3::zeros(),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2, 3]],
        );
        assert!(matches!(r, Err(MeshError::DegenerateTet(0))));
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let r = TetMesh::new(vec![Vec3::zeros()], vec![[0, 0, 0, 7]]);
        assert!(matches!(r, Err(MeshError::IndexOutOfRange { vertex: 7, .. })));
    }

    #[test]
    fn deform_zero_is_identity() {
        let m = reference_tet();
        let field = vec![Vec3::new(1.0, 2.0, 3.0); 4];
        let d = m.deform(&field, 0.0).unwrap();
        for (a, b) in m.vertices().iter().zip(d.vertices()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn deform_by_constant_translates() {
        let m = reference_tet();
        let c = Vec3::new(0.5, -1.0, 2.0);
        let field = vec![c; 4];
        let d = m.deform(&field, 2.0).unwrap();
        for (a, b) in m.vertices().iter().zip(d.vertices()) {
            assert!((b - a - 2.0 * c).norm() < 1e-15);
        }
        assert!((d.volume() - m.volume()).abs() < 1e-14);
    }

    #[test]
    fn radial_deform_scales_volume_eightfold() {
        let m = reference_tet();
        let field: Vec<Vec3> = m.vertices().to_vec();
        let d = m.deform(&field, 1.0).unwrap();
        assert!((d.volume() - 8.0 * m.volume()).abs() < 1e-12);
    }

    #[test]
    fn inverting_deform_reports_worst_element() {
        let m = reference_tet();
        let mut field = vec![Vec3::zeros(); 4];
        field[3] = Vec3::new(0.0, 0.0, -3.0);
        let err = m.deform(&field, 1.0).unwrap_err();
        assert!(matches!(err, MeshError::Inverted { tet: 0, .. }));
    }

    #[test]
    fn deform_is_linear_in_t() {
        let m = reference_tet();
        let field = vec![
            Vec3::new(0.1, 0.0, 0.0),
            Vec3::new(0.0, 0.2, 0.0),
            Vec3::new(0.0, 0.0, 0.1),
            Vec3::new(0.05, 0.05, 0.05),
        ];
        let a = m.deform(&field, 0.3).unwrap();
        let b = a.deform(&field, 0.2).unwrap();
        let c = m.deform(&field, 0.5).unwrap();
        for (x, y) in b.vertices().iter().zip(c.vertices()) {
            assert!((x - y).norm() < 1e-15);
        }
    }
}
