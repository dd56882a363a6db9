//! Deterministic mesh generation: ellipsoids from a recursively refined
//! octahedron tetrahedralization of the unit ball, and structured box meshes
//! for tests and cube experiments.

use super::{MeshError, TetMesh};
use crate::Vec3;
use std::collections::HashMap;

/// Largest supported refinement level; one level multiplies the element
/// count by eight.
pub const MAX_REFINEMENT: usize = 7;

/// Ellipsoid with semi-axes (a, b, c) where c = 1/(a b), so the volume always
/// equals that of the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EllipsoidSpec {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub center: [f64; 3],
    /// Target mesh size h = 2^-refinement (up to the generator constant).
    pub refinement: usize,
    /// Restrict to the half domain x3 >= 0.
    #[serde(default)]
    pub half: bool,
}

impl EllipsoidSpec {
    pub fn unit_ball(refinement: usize) -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            center: [0.0; 3],
            refinement,
            half: false,
        }
    }

    /// Third semi-axis, fixed by the unit-ball volume requirement a b c = 1.
    pub fn c(&self) -> f64 {
        1.0 / (self.a * self.b)
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if !(self.a > 0.0 && self.a.is_finite()) || !(self.b > 0.0 && self.b.is_finite()) {
            return Err(MeshError::InvalidSpec(format!(
                "semi-axes must be positive and finite, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        if self.refinement > MAX_REFINEMENT {
            return Err(MeshError::Resource {
                requested: self.refinement,
                max: MAX_REFINEMENT,
            });
        }
        Ok(())
    }
}

/// Generate the ellipsoid mesh: refine the octahedron ball mesh, projecting
/// boundary vertices radially onto the unit sphere after every level, then
/// scale by diag(a, b, c) and translate.
pub fn generate_ellipsoid_mesh(spec: &EllipsoidSpec) -> Result<TetMesh, MeshError> {
    spec.validate()?;
    let (mut vertices, mut tets) = octahedron_ball();
    for _ in 0..spec.refinement {
        (vertices, tets) = bey_refine(&vertices, &tets);
        project_boundary_to_sphere(&mut vertices, &tets);
    }
    if spec.half {
        (vertices, tets) = keep_upper_half(vertices, tets);
    }
    let c = spec.c();
    let center = Vec3::new(spec.center[0], spec.center[1], spec.center[2]);
    for v in &mut vertices {
        *v = Vec3::new(spec.a * v.x, spec.b * v.y, c * v.z) + center;
    }
    TetMesh::new(vertices, tets)
}

/// Unit octahedron split into 8 tets around the origin.
fn octahedron_ball() -> (Vec<Vec3>, Vec<[usize; 4]>) {
    let vertices = vec![
        Vec3::zeros(),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(-1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, -1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
        Vec3::new(0.0, 0.0, -1.0),
    ];
    let mut tets = Vec::with_capacity(8);
    for &x in &[1usize, 2] {
        for &y in &[3usize, 4] {
            for &z in &[5usize, 6] {
                tets.push([0, x, y, z]);
            }
        }
    }
    (vertices, tets)
}

/// One sweep of red (Bey) refinement: each tet splits into eight via edge
/// midpoints, conforming across shared edges.
fn bey_refine(vertices: &[Vec3], tets: &[[usize; 4]]) -> (Vec<Vec3>, Vec<[usize; 4]>) {
    let mut verts = vertices.to_vec();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            verts.push((verts[a] + verts[b]) / 2.0);
            verts.len() - 1
        })
    };
    let mut out = Vec::with_capacity(tets.len() * 8);
    for t in tets {
        let [v0, v1, v2, v3] = *t;
        let m01 = mid(v0, v1, &mut verts);
        let m02 = mid(v0, v2, &mut verts);
        let m03 = mid(v0, v3, &mut verts);
        let m12 = mid(v1, v2, &mut verts);
        let m13 = mid(v1, v3, &mut verts);
        let m23 = mid(v2, v3, &mut verts);
        out.push([v0, m01, m02, m03]);
        out.push([m01, v1, m12, m13]);
        out.push([m02, m12, v2, m23]);
        out.push([m03, m13, m23, v3]);
        out.push([m01, m02, m03, m13]);
        out.push([m01, m02, m12, m13]);
        out.push([m02, m03, m13, m23]);
        out.push([m02, m12, m13, m23]);
    }
    (verts, out)
}

fn project_boundary_to_sphere(vertices: &mut [Vec3], tets: &[[usize; 4]]) {
    // Boundary = facets owned by exactly one tet; cheap local scan.
    let mut count: HashMap<[usize; 3], usize> = HashMap::new();
    for t in tets {
        let [v0, v1, v2, v3] = *t;
        for f in [[v1, v2, v3], [v0, v2, v3], [v0, v1, v3], [v0, v1, v2]] {
            let mut key = f;
            key.sort_unstable();
            *count.entry(key).or_insert(0) += 1;
        }
    }
    let mut on_boundary = vec![false; vertices.len()];
    for (f, c) in count {
        if c == 1 {
            for v in f {
                on_boundary[v] = true;
            }
        }
    }
    for (v, flag) in on_boundary.iter().enumerate() {
        if *flag {
            let n = vertices[v].norm();
            if n > 0.0 {
                vertices[v] /= n;
            }
        }
    }
}

/// Drop tets below the symmetry plane and compact vertex indices. The
/// generator never produces tets crossing x3 = 0, so the cut is exact.
fn keep_upper_half(vertices: Vec<Vec3>, tets: Vec<[usize; 4]>) -> (Vec<Vec3>, Vec<[usize; 4]>) {
    let kept: Vec<[usize; 4]> = tets
        .into_iter()
        .filter(|t| {
            let c = (vertices[t[0]].z + vertices[t[1]].z + vertices[t[2]].z + vertices[t[3]].z)
                / 4.0;
            c > 0.0
        })
        .collect();
    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut verts = Vec::new();
    let mut out = Vec::with_capacity(kept.len());
    for t in kept {
        let mut nt = [0usize; 4];
        for (k, &v) in t.iter().enumerate() {
            let id = *remap.entry(v).or_insert_with(|| {
                // Snap roundoff so the symmetry plane is exact.
                let mut p = vertices[v];
                if p.z.abs() < 1e-14 {
                    p.z = 0.0;
                }
                verts.push(p);
                verts.len() - 1
            });
            nt[k] = id;
        }
        out.push(nt);
    }
    (verts, out)
}

/// Structured box mesh on [lo, hi] with n cells per axis, six tets per cell
/// (Kuhn split, conforming across cells).
pub fn generate_box_mesh(n: [usize; 3], lo: Vec3, hi: Vec3) -> Result<TetMesh, MeshError> {
    assert!(n.iter().all(|&k| k > 0), "need at least one cell per axis");
    let [nx, ny, nz] = n;
    let idx = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Vec3::new(
                    lo.x + (hi.x - lo.x) * i as f64 / nx as f64,
                    lo.y + (hi.y - lo.y) * j as f64 / ny as f64,
                    lo.z + (hi.z - lo.z) * k as f64 / nz as f64,
                ));
            }
        }
    }
    // Kuhn split: walk the cell diagonal in each axis permutation.
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut tets = Vec::with_capacity(nx * ny * nz * 6);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let base = [i, j, k];
                for perm in PERMS {
                    let mut p = base;
                    let v0 = idx(p[0], p[1], p[2]);
                    p[perm[0]] += 1;
                    let v1 = idx(p[0], p[1], p[2]);
                    p[perm[1]] += 1;
                    let v2 = idx(p[0], p[1], p[2]);
                    p[perm[2]] += 1;
                    let v3 = idx(p[0], p[1], p[2]);
                    tets.push([v0, v1, v2, v3]);
                }
            }
        }
    }
    TetMesh::new(vertices, tets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn octahedron_ball_is_valid() {
        let (v, t) = octahedron_ball();
        let m = TetMesh::new(v, t).unwrap();
        m.validate().unwrap();
        assert_eq!(m.num_tets(), 8);
        assert!((m.volume() - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn unit_ball_volume_grows_toward_continuum() {
        let mut prev = 0.0;
        for level in 0..=3 {
            let m = generate_ellipsoid_mesh(&EllipsoidSpec::unit_ball(level)).unwrap();
            m.validate().unwrap();
            let vol = m.volume();
            let ball = 4.0 * std::f64::consts::PI / 3.0;
            assert!(vol < ball, "level {level}: {vol} not below {ball}");
            assert!(vol > prev, "volume must increase with refinement");
            prev = vol;
        }
        // Level 3 matches the coarse band for octahedron-based generators.
        assert!(prev > 4.0, "level 3 volume {prev} too small");
    }

    #[test]
    fn boundary_vertices_lie_exactly_on_the_ellipsoid() {
        let spec = EllipsoidSpec {
            a: 0.8,
            b: 0.8,
            center: [0.0; 3],
            refinement: 2,
            half: false,
        };
        let m = generate_ellipsoid_mesh(&spec).unwrap();
        let c = spec.c();
        assert!((c - 1.5625).abs() < 1e-15);
        for &v in &m.boundary_vertices() {
            let p = m.vertices()[v];
            let r = (p.x / spec.a).powi(2) + (p.y / spec.b).powi(2) + (p.z / c).powi(2);
            assert!((r - 1.0).abs() < 1e-10, "vertex {v} off surface by {}", (r - 1.0).abs());
        }
        // Bounding box from the semi-axes.
        let max_z = m.vertices().iter().map(|p| p.z.abs()).fold(0.0, f64::max);
        assert!(max_z <= 1.5625 + 1e-12);
    }

    #[test]
    fn mesh_size_tracks_refinement() {
        for level in 0..=3 {
            let m = generate_ellipsoid_mesh(&EllipsoidSpec::unit_ball(level)).unwrap();
            let bound = 4.0 * 0.5_f64.powi(level as i32);
            assert!(
                m.h() <= bound,
                "level {level}: h = {} above {bound}",
                m.h()
            );
        }
    }

    #[test]
    fn boundary_surface_satisfies_euler_relation() {
        let m = generate_ellipsoid_mesh(&EllipsoidSpec::unit_ball(2)).unwrap();
        let f = m.boundary_facets().len();
        let v = m.boundary_vertices().len();
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for facet in m.boundary_facets() {
            for k in 0..3 {
                let (a, b) = (facet[k], facet[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        assert_eq!(v as i64 - edges.len() as i64 + f as i64, 2);
    }

    #[test]
    fn half_ball_is_clipped_at_symmetry_plane() {
        let spec = EllipsoidSpec {
            a: 1.0,
            b: 1.0,
            center: [0.0; 3],
            refinement: 2,
            half: true,
        };
        let m = generate_ellipsoid_mesh(&spec).unwrap();
        m.validate().unwrap();
        assert!(m.vertices().iter().all(|p| p.z >= 0.0));
        let full = generate_ellipsoid_mesh(&EllipsoidSpec::unit_ball(2)).unwrap();
        assert!((m.volume() - full.volume() / 2.0).abs() < 1e-12);
        // Plane vertices stay exactly planar.
        let planar = m.vertices().iter().filter(|p| p.z == 0.0).count();
        assert!(planar > 0);
    }

    #[test]
    fn refinement_above_limit_is_a_resource_error() {
        let r = generate_ellipsoid_mesh(&EllipsoidSpec::unit_ball(MAX_REFINEMENT + 1));
        assert!(matches!(r, Err(MeshError::Resource { .. })));
    }

    #[test]
    fn invalid_axes_are_rejected() {
        let spec = EllipsoidSpec {
            a: -1.0,
            b: 1.0,
            center: [0.0; 3],
            refinement: 1,
            half: false,
        };
        assert!(matches!(
            generate_ellipsoid_mesh(&spec),
            Err(MeshError::InvalidSpec(_))
        ));
    }

    #[test]
    fn box_mesh_units() {
        let m = generate_box_mesh([2, 2, 2], Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)).unwrap();
        m.validate().unwrap();
        assert_eq!(m.num_tets(), 48);
        assert!((m.volume() - 1.0).abs() < 1e-14);
        // Face centers such as (0.5, 0.5, 1) are boundary vertices.
        let has_face_center = m
            .boundary_vertices()
            .iter()
            .any(|&v| (m.vertices()[v] - Vec3::new(0.5, 0.5, 1.0)).norm() < 1e-14);
        assert!(has_face_center);
    }
}
