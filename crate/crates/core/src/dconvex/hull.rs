//! Incremental 3D convex hull with exact-sign orientation predicates.
//!
//! Points are inserted farthest-first; facet visibility uses adaptive-
//! precision orientation tests, so near-coplanar inputs (refined sphere
//! meshes, cube faces) do not produce inconsistent hulls. The result is
//! verified: every input point must lie inside or on the hull within
//! [`HULL_DISTANCE_TOL`] times the diameter.

use super::DconvexError;
use crate::Vec3;
use std::collections::HashMap;

/// Relative tolerance for the post-construction containment check.
pub const HULL_DISTANCE_TOL: f64 = 1e-9;

/// Sign of det[b - a, c - a, d - a], evaluated with adaptive precision.
/// Positive means d lies on the side of plane (a, b, c) that the
/// counterclockwise normal points into.
pub fn orientation(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    let p = |v: &Vec3| robust::Coord3D {
        x: v.x,
        y: v.y,
        z: v.z,
    };
    // Shewchuk's orient3d is positive when d is *below* the CCW plane, which
    // is the opposite sign of the determinant above.
    -robust::orient3d(p(a), p(b), p(c), p(d))
}

#[derive(Debug, Clone)]
pub struct ConvexHull {
    points: Vec<Vec3>,
    facets: Vec<[usize; 3]>,
    hull_vertices: Vec<usize>,
}

impl ConvexHull {
    /// Outward-oriented triangular facets (indices into the input points).
    pub fn facets(&self) -> &[[usize; 3]] {
        &self.facets
    }

    /// Sorted indices of input points that are hull vertices.
    pub fn hull_vertices(&self) -> &[usize] {
        &self.hull_vertices
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// Enclosed volume by signed origin fans.
    pub fn volume(&self) -> f64 {
        self.facets
            .iter()
            .map(|f| {
                self.points[f[0]]
                    .cross(&self.points[f[1]])
                    .dot(&self.points[f[2]])
                    / 6.0
            })
            .sum()
    }

    /// max over facets of the signed plane distance (unit normals); negative
    /// inside, ~0 on the hull, positive outside.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.facets
            .iter()
            .map(|f| {
                let n = (self.points[f[1]] - self.points[f[0]])
                    .cross(&(self.points[f[2]] - self.points[f[0]]));
                let norm = n.norm();
                if norm == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    n.dot(&(p - self.points[f[0]])) / norm
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Parameter t where the ray `origin + t dir` exits the hull; requires
    /// `origin` inside and `dir` nonzero.
    pub fn ray_exit(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let mut t_exit = f64::INFINITY;
        for f in &self.facets {
            let n = (self.points[f[1]] - self.points[f[0]])
                .cross(&(self.points[f[2]] - self.points[f[0]]));
            let denom = n.dot(dir);
            if denom > 1e-300 {
                let t = n.dot(&(self.points[f[0]] - origin)) / denom;
                if t >= 0.0 {
                    t_exit = t_exit.min(t);
                }
            }
        }
        t_exit.is_finite().then_some(t_exit)
    }

    fn diameter(&self) -> f64 {
        let mut lo = self.points[0];
        let mut hi = self.points[0];
        for p in &self.points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (hi - lo).norm()
    }
}

/// Build the convex hull of at least four affinely independent points.
pub fn convex_hull(points: &[Vec3]) -> Result<ConvexHull, DconvexError> {
    if points.len() < 4 {
        return Err(DconvexError::DegenerateHullInput(format!(
            "{} points, need at least 4",
            points.len()
        )));
    }
    let initial = initial_simplex(points)?;
    let mut facets: Vec<[usize; 3]> = Vec::new();
    let mut alive: Vec<bool> = Vec::new();
    {
        let [i0, i1, i2, i3] = initial;
        // Orient so that every face points away from the remaining vertex.
        let (a, b, c, d) = if orientation(&points[i0], &points[i1], &points[i2], &points[i3]) > 0.0
        {
            (i0, i2, i1, i3)
        } else {
            (i0, i1, i2, i3)
        };
        // Faces of the tetrahedron (a, b, c, d) with outward orientation.
        for f in [[a, b, c], [a, c, d], [a, d, b], [b, d, c]] {
            facets.push(f);
            alive.push(true);
        }
    }

    // Farthest-first insertion order (deterministic; ties by index).
    let centroid: Vec3 = initial.iter().map(|&i| points[i]).sum::<Vec3>() / 4.0;
    let mut order: Vec<usize> = (0..points.len()).filter(|i| !initial.contains(i)).collect();
    order.sort_by(|&a, &b| {
        let da = (points[a] - centroid).norm_squared();
        let db = (points[b] - centroid).norm_squared();
        db.partial_cmp(&da).unwrap().then(a.cmp(&b))
    });

    for p in order {
        let pp = &points[p];
        let visible: Vec<usize> = (0..facets.len())
            .filter(|&fi| {
                alive[fi] && {
                    let [a, b, c] = facets[fi];
                    orientation(&points[a], &points[b], &points[c], pp) > 0.0
                }
            })
            .collect();
        if visible.is_empty() {
            continue;
        }
        // Horizon: directed edges of visible facets whose twin lies in an
        // invisible facet, i.e. undirected edges seen exactly once.
        let mut edge_use: HashMap<(usize, usize), (usize, usize, usize)> = HashMap::new();
        for &fi in &visible {
            let f = facets[fi];
            for k in 0..3 {
                let (u, v) = (f[k], f[(k + 1) % 3]);
                let key = (u.min(v), u.max(v));
                edge_use
                    .entry(key)
                    .and_modify(|e| e.2 += 1)
                    .or_insert((u, v, 1));
            }
        }
        for &fi in &visible {
            alive[fi] = false;
        }
        for (_, (u, v, count)) in edge_use {
            if count == 1 {
                facets.push([u, v, p]);
                alive.push(true);
            }
        }
    }

    let mut final_facets: Vec<[usize; 3]> = facets
        .into_iter()
        .zip(alive)
        .filter_map(|(f, a)| a.then_some(f))
        .collect();
    final_facets.sort_unstable();
    let mut hull_vertices: Vec<usize> = final_facets.iter().flatten().copied().collect();
    hull_vertices.sort_unstable();
    hull_vertices.dedup();

    let hull = ConvexHull {
        points: points.to_vec(),
        facets: final_facets,
        hull_vertices,
    };
    // Containment verification over all input points.
    let tol = HULL_DISTANCE_TOL * hull.diameter().max(1.0);
    for (i, p) in points.iter().enumerate() {
        let d = hull.signed_distance(p);
        if d > tol {
            return Err(DconvexError::HullInconsistent {
                point: i,
                distance: d,
            });
        }
    }
    Ok(hull)
}

/// Four affinely independent points: lexicographic minimum, farthest pair,
/// largest triangle, largest tetrahedron (exact nonzero orientation).
fn initial_simplex(points: &[Vec3]) -> Result<[usize; 4], DconvexError> {
    let i0 = (0..points.len())
        .min_by(|&a, &b| {
            (points[a].x, points[a].y, points[a].z)
                .partial_cmp(&(points[b].x, points[b].y, points[b].z))
                .unwrap()
        })
        .unwrap();
    let i1 = (0..points.len())
        .max_by(|&a, &b| {
            let da = (points[a] - points[i0]).norm_squared();
            let db = (points[b] - points[i0]).norm_squared();
            da.partial_cmp(&db).unwrap().then(b.cmp(&a))
        })
        .unwrap();
    if (points[i1] - points[i0]).norm_squared() == 0.0 {
        return Err(DconvexError::DegenerateHullInput(
            "all points coincide".into(),
        ));
    }
    let i2 = (0..points.len())
        .max_by(|&a, &b| {
            let ca = (points[i1] - points[i0])
                .cross(&(points[a] - points[i0]))
                .norm_squared();
            let cb = (points[i1] - points[i0])
                .cross(&(points[b] - points[i0]))
                .norm_squared();
            ca.partial_cmp(&cb).unwrap().then(b.cmp(&a))
        })
        .unwrap();
    if (points[i1] - points[i0])
        .cross(&(points[i2] - points[i0]))
        .norm_squared()
        == 0.0
    {
        return Err(DconvexError::DegenerateHullInput(
            "all points collinear".into(),
        ));
    }
    let mut i3 = None;
    let mut best = 0.0;
    for k in 0..points.len() {
        if k == i0 || k == i1 || k == i2 {
            continue;
        }
        let o = orientation(&points[i0], &points[i1], &points[i2], &points[k]);
        if o.abs() > best {
            best = o.abs();
            i3 = Some(k);
        }
    }
    let i3 = i3
        .filter(|_| best > 0.0)
        .ok_or_else(|| DconvexError::DegenerateHullInput("all points coplanar".into()))?;
    Ok([i0, i1, i2, i3])
}
