//! Conforming planar triangulations for graph-function interpolation.

use super::IsoError;
use crate::Vec2;
use std::collections::HashMap;

/// An edge of the triangulation with its incident triangles. For interior
/// edges, `left` is the triangle containing the directed edge a -> b and
/// `right` the one containing b -> a (a < b).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshEdge {
    pub a: usize,
    pub b: usize,
    pub left: usize,
    pub right: Option<usize>,
}

/// Counterclockwise conforming triangulation of a planar domain.
#[derive(Debug, Clone)]
pub struct TriMesh2 {
    vertices: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<MeshEdge>,
    /// Per-triangle edge ids for sides (v0,v1), (v1,v2), (v2,v0).
    triangle_edges: Vec<[usize; 3]>,
}

impl TriMesh2 {
    pub fn new(vertices: Vec<Vec2>, triangles: Vec<[usize; 3]>) -> Result<Self, IsoError> {
        for (ti, t) in triangles.iter().enumerate() {
            for &v in t {
                if v >= vertices.len() {
                    return Err(IsoError::BadTriangulation(format!(
                        "triangle {ti} references vertex {v} of {}",
                        vertices.len()
                    )));
                }
            }
            let area = signed_area(&vertices[t[0]], &vertices[t[1]], &vertices[t[2]]);
            if area <= 0.0 {
                return Err(IsoError::BadTriangulation(format!(
                    "triangle {ti} is not counterclockwise (signed area {area:.3e})"
                )));
            }
        }
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<MeshEdge> = Vec::new();
        let mut triangle_edges = vec![[usize::MAX; 3]; triangles.len()];
        for (ti, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (u, v) = (t[k], t[(k + 1) % 3]);
                let key = (u.min(v), u.max(v));
                let forward = u < v;
                match edge_ids.get(&key) {
                    None => {
                        let id = edges.len();
                        edge_ids.insert(key, id);
                        if forward {
                            edges.push(MeshEdge {
                                a: key.0,
                                b: key.1,
                                left: ti,
                                right: None,
                            });
                        } else {
                            // Seen first through the reversed direction.
                            edges.push(MeshEdge {
                                a: key.0,
                                b: key.1,
                                left: usize::MAX,
                                right: Some(ti),
                            });
                        }
                        triangle_edges[ti][k] = id;
                    }
                    Some(&id) => {
                        let e = &mut edges[id];
                        if forward {
                            if e.left != usize::MAX {
                                return Err(IsoError::BadTriangulation(format!(
                                    "edge ({}, {}) used twice in the same direction",
                                    key.0, key.1
                                )));
                            }
                            e.left = ti;
                        } else {
                            if e.right.is_some() {
                                return Err(IsoError::BadTriangulation(format!(
                                    "edge ({}, {}) used twice in the same direction",
                                    key.0, key.1
                                )));
                            }
                            e.right = Some(ti);
                        }
                        triangle_edges[ti][k] = id;
                    }
                }
            }
        }
        // Normalize boundary edges discovered through their reversed side.
        for e in &mut edges {
            if e.left == usize::MAX {
                match e.right.take() {
                    Some(t) => e.left = t,
                    None => unreachable!(),
                }
            }
        }
        Ok(Self {
            vertices,
            triangles,
            edges,
            triangle_edges,
        })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[MeshEdge] {
        &self.edges
    }

    pub fn triangle_edge_ids(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn edge_midpoint(&self, e: usize) -> Vec2 {
        (self.vertices[self.edges[e].a] + self.vertices[self.edges[e].b]) / 2.0
    }

    pub fn is_interior_edge(&self, e: usize) -> bool {
        self.edges[e].right.is_some()
    }

    /// Longest edge length.
    pub fn h(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| (self.vertices[e.a] - self.vertices[e.b]).norm())
            .fold(0.0, f64::max)
    }

    /// Equilateral-lattice triangulation of the regular hexagon inscribed in
    /// the circle of the given radius, `n` subdivisions per hexagon side.
    /// Every triangle is equilateral, so the mesh is uniformly acute.
    pub fn hexagon(radius: f64, n: usize) -> Self {
        assert!(n >= 1 && radius > 0.0);
        let s = radius / n as f64;
        let ni = n as i64;
        let in_hex = |i: i64, j: i64| i.abs() <= ni && j.abs() <= ni && (i + j).abs() <= ni;
        let mut ids: HashMap<(i64, i64), usize> = HashMap::new();
        let mut vertices = Vec::new();
        for i in -ni..=ni {
            for j in -ni..=ni {
                if in_hex(i, j) {
                    ids.insert((i, j), vertices.len());
                    vertices.push(Vec2::new(
                        s * (i as f64 + j as f64 / 2.0),
                        s * j as f64 * 3.0_f64.sqrt() / 2.0,
                    ));
                }
            }
        }
        let mut triangles = Vec::new();
        for i in -ni..=ni {
            for j in -ni..=ni {
                if in_hex(i, j) && in_hex(i + 1, j) && in_hex(i, j + 1) {
                    triangles.push([ids[&(i, j)], ids[&(i + 1, j)], ids[&(i, j + 1)]]);
                }
                if in_hex(i + 1, j) && in_hex(i + 1, j + 1) && in_hex(i, j + 1) {
                    triangles.push([ids[&(i + 1, j)], ids[&(i + 1, j + 1)], ids[&(i, j + 1)]]);
                }
            }
        }
        Self::new(vertices, triangles).expect("hexagon lattice is a valid triangulation")
    }
}

pub fn signed_area(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    ((b - a).x * (c - a).y - (b - a).y * (c - a).x) / 2.0
}
