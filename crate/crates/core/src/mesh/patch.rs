//! Boundary node patches: a boundary vertex with its ring of outer vertices
//! ordered counterclockwise when viewed from outside the domain.

use super::{facet_normal, MeshError, TetMesh};
use crate::Vec3;
use std::collections::HashMap;

/// The triangular node patch around a boundary vertex z. Facet i of the
/// patch is conv(z_i, z_{i+1}, z) with cyclic indices, and its unnormalized
/// outward normal is (z - z_i) x (z - z_{i+1}).
#[derive(Debug, Clone)]
pub struct BoundaryNodePatch {
    /// Index of the center vertex z.
    pub center: usize,
    /// Ring vertex indices z_1..z_m, counterclockwise from outside.
    pub ring: Vec<usize>,
    /// Center position.
    pub center_pos: Vec3,
    /// Ring positions, same order as `ring`.
    pub ring_pos: Vec<Vec3>,
}

impl BoundaryNodePatch {
    pub fn ring_len(&self) -> usize {
        self.ring.len()
    }

    /// Unnormalized outward facet normals n_{F_i} = (z - z_i) x (z - z_{i+1}).
    pub fn facet_normals(&self) -> Vec<Vec3> {
        let m = self.ring.len();
        (0..m)
            .map(|i| {
                let zi = self.ring_pos[i];
                let zj = self.ring_pos[(i + 1) % m];
                (self.center_pos - zi).cross(&(self.center_pos - zj))
            })
            .collect()
    }

    /// Build a free-standing patch from positions (ring ordered
    /// counterclockwise seen from outside); used by tests and the oracle
    /// machinery.
    pub fn from_positions(center_pos: Vec3, ring_pos: Vec<Vec3>) -> Self {
        assert!(ring_pos.len() >= 3, "a patch ring needs at least 3 vertices");
        Self {
            center: 0,
            ring: (1..=ring_pos.len()).collect(),
            center_pos,
            ring_pos,
        }
    }
}

impl TetMesh {
    /// The node patch around boundary vertex `z`.
    pub fn boundary_node_patch(&self, z: usize) -> Result<BoundaryNodePatch, MeshError> {
        // successor[u] = v for each incident facet oriented (z, u, v)
        let mut successor: HashMap<usize, usize> = HashMap::new();
        let mut incident = 0usize;
        for f in self.boundary_facets() {
            if let Some(k) = f.iter().position(|&v| v == z) {
                let u = f[(k + 1) % 3];
                let v = f[(k + 2) % 3];
                if successor.insert(u, v).is_some() {
                    return Err(MeshError::DisconnectedPatch(z));
                }
                incident += 1;
            }
        }
        if incident == 0 {
            return Err(MeshError::NotABoundaryVertex(z));
        }
        if incident < 3 {
            return Err(MeshError::DisconnectedPatch(z));
        }
        // Chain successors into a single cycle. The outward facet orientation
        // (z, u, v) makes the resulting ring counterclockwise from outside.
        let start = *successor.keys().min().unwrap();
        let mut ring = vec![start];
        let mut cur = start;
        loop {
            let Some(&next) = successor.get(&cur) else {
                return Err(MeshError::DisconnectedPatch(z));
            };
            if next == start {
                break;
            }
            ring.push(next);
            cur = next;
            if ring.len() > successor.len() {
                return Err(MeshError::DisconnectedPatch(z));
            }
        }
        if ring.len() != incident {
            return Err(MeshError::DisconnectedPatch(z));
        }
        let ring_pos = ring.iter().map(|&v| self.vertices()[v]).collect();
        Ok(BoundaryNodePatch {
            center: z,
            ring,
            center_pos: self.vertices()[z],
            ring_pos,
        })
    }

    /// Node patches for every boundary vertex, in index order.
    pub fn boundary_patches(&self) -> Result<Vec<BoundaryNodePatch>, MeshError> {
        self.boundary_vertices()
            .into_iter()
            .map(|z| self.boundary_node_patch(z))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_box_mesh;

    /// Square pyramid: apex above a unit square ring, four side facets plus
    /// an interior vertex to close the solid.
    pub(crate) fn square_pyramid_mesh() -> TetMesh {
        let apex = Vec3::new(0.0, 0.0, 1.0);
        let ring = [
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(-1.0, 1.0, 0.0),
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
        ];
        let bottom = Vec3::new(0.0, 0.0, -0.2);
        let mut vertices = vec![apex];
        vertices.extend_from_slice(&ring);
        vertices.push(bottom);
        // Tets: apex, two adjacent ring vertices, bottom.
        let tets = vec![
            [0, 1, 2, 5],
            [0, 2, 3, 5],
            [0, 3, 4, 5],
            [0, 4, 1, 5],
        ];
        TetMesh::new(vertices, tets).unwrap()
    }

    #[test]
    fn pyramid_apex_patch_normals_match_hand_computation() {
        let m = square_pyramid_mesh();
        let p = m.boundary_node_patch(0).unwrap();
        assert_eq!(p.ring_len(), 4);
        let normals = p.facet_normals();
        // Reorder relative to the hand computation: ring starts at the
        // smallest incident index, i.e. vertex 1 = (1, 1, 0).
        assert_eq!(p.ring, vec![1, 2, 3, 4]);
        let expect = [
            Vec3::new(0.0, 2.0, 2.0),
            Vec3::new(-2.0, 0.0, 2.0),
            Vec3::new(0.0, -2.0, 2.0),
            Vec3::new(2.0, 0.0, 2.0),
        ];
        for (n, e) in normals.iter().zip(&expect) {
            assert!((n - e).norm() < 1e-14, "normal {n:?} expected {e:?}");
        }
    }

    #[test]
    fn interior_vertex_is_rejected() {
        let m = generate_box_mesh([2, 2, 2], Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)).unwrap();
        // Center vertex of the 2x2x2 grid is interior.
        let center = m
            .vertices()
            .iter()
            .position(|p| (p - Vec3::new(0.5, 0.5, 0.5)).norm() < 1e-14)
            .unwrap();
        assert!(matches!(
            m.boundary_node_patch(center),
            Err(MeshError::NotABoundaryVertex(_))
        ));
    }

    #[test]
    fn cube_corner_patch_normals_are_axis_aligned() {
        let m = generate_box_mesh([1, 1, 1], Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)).unwrap();
        // Corner at the origin; its patch facets lie in the three coordinate
        // planes, so normals are outward axis directions (negative axes).
        let corner = m
            .vertices()
            .iter()
            .position(|p| p.norm() < 1e-14)
            .unwrap();
        let patch = m.boundary_node_patch(corner).unwrap();
        for n in patch.facet_normals() {
            let n = n.normalize();
            let alignment = n.x.abs().max(n.y.abs()).max(n.z.abs());
            assert!(alignment > 1.0 - 1e-12, "normal {n:?} not axis aligned");
            assert!(n.x + n.y + n.z < 0.0, "corner normal must point outward");
        }
    }

    #[test]
    fn reversing_ring_flips_normals() {
        let m = square_pyramid_mesh();
        let p = m.boundary_node_patch(0).unwrap();
        let mut rev = p.clone();
        rev.ring.reverse();
        rev.ring_pos.reverse();
        let a = p.facet_normals();
        let mut b = rev.facet_normals();
        // Reversal re-pairs facets; compare as multisets via sorting on a key.
        let key = |v: &Vec3| (v.x * 1e6 + v.y * 1e3 + v.z).round() as i64;
        let mut a_neg: Vec<Vec3> = a.iter().map(|v| -v).collect();
        a_neg.sort_by_key(key);
        b.sort_by_key(key);
        for (x, y) in a_neg.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn ring_projects_to_positive_area_polygon() {
        let m = square_pyramid_mesh();
        for &z in &m.boundary_vertices() {
            let p = m.boundary_node_patch(z).unwrap();
            let normals = p.facet_normals();
            let avg: Vec3 = normals.iter().sum::<Vec3>().normalize();
            // Signed area of the ring polygon projected along avg.
            let mut area = 0.0;
            let mz = p.ring_len();
            for i in 0..mz {
                let a = p.ring_pos[i] - p.center_pos;
                let b = p.ring_pos[(i + 1) % mz] - p.center_pos;
                area += avg.dot(&a.cross(&b)) / 2.0;
            }
            assert!(area > 0.0, "vertex {z}: projected ring area {area} <= 0");
        }
    }

    #[test]
    fn patch_normals_agree_with_facet_orientation() {
        let m = square_pyramid_mesh();
        let p = m.boundary_node_patch(0).unwrap();
        let normals = p.facet_normals();
        let mz = p.ring_len();
        for i in 0..mz {
            let tri = [p.center, p.ring[i], p.ring[(i + 1) % mz]];
            // Find the matching boundary facet and compare normals.
            let mut key = tri;
            key.sort_unstable();
            let facet = m
                .boundary_facets()
                .iter()
                .find(|f| {
                    let mut k = **f;
                    k.sort_unstable();
                    k == key
                })
                .unwrap();
            let fnormal = facet_normal(m.vertices(), facet);
            assert!((fnormal - normals[i]).norm() < 1e-13);
        }
    }
}
