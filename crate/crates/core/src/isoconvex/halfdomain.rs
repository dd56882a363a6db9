//! Kink conditions across shared patch sides and convex half-domain
//! surfaces built from concave graph functions.

use super::patch::{CrossSide, QuadraticSurfacePatch};
use super::trimesh2::TriMesh2;
use super::IsoError;
use crate::{Vec2, Vec3};

/// Reference-triangle point on edge k at parameter t in [0, 1]; edges run
/// counterclockwise: 0: P1->P2, 1: P2->P3, 2: P3->P1.
fn ref_edge_point(edge: usize, t: f64) -> (f64, f64) {
    match edge {
        0 => (t, 0.0),
        1 => (1.0 - t, t),
        2 => (0.0, 1.0 - t),
        _ => panic!("edge index {edge} out of range"),
    }
}

fn ref_edge_velocity(edge: usize) -> (f64, f64) {
    match edge {
        0 => (1.0, 0.0),
        1 => (-1.0, 1.0),
        2 => (0.0, -1.0),
        _ => panic!("edge index {edge} out of range"),
    }
}

/// Corner indices (into `corners`) bounding edge k, in traversal order.
fn edge_corners(edge: usize) -> (usize, usize) {
    match edge {
        0 => (0, 1),
        1 => (1, 2),
        2 => (2, 0),
        _ => panic!("edge index {edge} out of range"),
    }
}

/// Control point index (into `edge_points`) of edge k.
fn edge_control(edge: usize) -> usize {
    match edge {
        0 => 0, // P12
        1 => 2, // P23
        2 => 1, // P13
        _ => panic!("edge index {edge} out of range"),
    }
}

/// Tangent along edge `edge` of `patch` at parameter t, oriented so that the
/// patch lies to the LEFT of the tangent when viewed from outside the
/// domain. This is the orientation rule that makes the convex roof give a
/// positive kink value.
pub fn side_tangent(patch: &QuadraticSurfacePatch, edge: usize, t: f64) -> Vec3 {
    let (x, y) = ref_edge_point(edge, t);
    let d = patch.derivatives(x, y);
    let (vx, vy) = ref_edge_velocity(edge);
    let tau = vx * d.a_x + vy * d.a_y;
    match patch.cross_side {
        CrossSide::Outward => tau,
        CrossSide::Inward => -tau,
    }
}

/// Verify that two patches share a geometric side; returns whether the minus
/// patch traverses it in the reversed parameter direction.
fn validate_shared(
    plus: &QuadraticSurfacePatch,
    plus_edge: usize,
    minus: &QuadraticSurfacePatch,
    minus_edge: usize,
) -> Result<bool, IsoError> {
    let (a, b) = edge_corners(plus_edge);
    let (c, d) = edge_corners(minus_edge);
    let (pa, pb) = (plus.corners[a], plus.corners[b]);
    let (ma, mb) = (minus.corners[c], minus.corners[d]);
    let pm = plus.edge_points[edge_control(plus_edge)];
    let mm = minus.edge_points[edge_control(minus_edge)];
    let scale = (pa - pb).norm().max(1e-300);
    let tol = 1e-9 * scale.max(1.0);
    if (pm - mm).norm() > tol {
        return Err(IsoError::SideMismatch(format!(
            "edge control points differ by {:.3e}",
            (pm - mm).norm()
        )));
    }
    if (pa - ma).norm() <= tol && (pb - mb).norm() <= tol {
        Ok(false)
    } else if (pa - mb).norm() <= tol && (pb - ma).norm() <= tol {
        Ok(true)
    } else {
        Err(IsoError::SideMismatch(
            "edge endpoints do not coincide".into(),
        ))
    }
}

/// Unnormalized kink value across a shared side at parameter t along the
/// plus edge: (outward cross of minus) . (tau x (outward cross of plus)).
/// Nonnegative values certify local convexity when both patches satisfy the
/// curvature condition.
pub fn c_k_value(
    plus: &QuadraticSurfacePatch,
    plus_edge: usize,
    minus: &QuadraticSurfacePatch,
    minus_edge: usize,
    t: f64,
) -> Result<f64, IsoError> {
    let reversed = validate_shared(plus, plus_edge, minus, minus_edge)?;
    let s = if reversed { 1.0 - t } else { t };
    let (px, py) = ref_edge_point(plus_edge, t);
    let (mx, my) = ref_edge_point(minus_edge, s);
    let c_plus = plus.outward_cross(px, py);
    let c_minus = minus.outward_cross(mx, my);
    let tau = side_tangent(plus, plus_edge, t);
    Ok(c_minus.dot(&tau.cross(&c_plus)))
}

/// Kink value scaled by the norms, i.e. evaluated with unit normals and a
/// unit tangent. Lies in [-1, 1].
pub fn c_k_normalized(
    plus: &QuadraticSurfacePatch,
    plus_edge: usize,
    minus: &QuadraticSurfacePatch,
    minus_edge: usize,
    t: f64,
) -> Result<f64, IsoError> {
    let reversed = validate_shared(plus, plus_edge, minus, minus_edge)?;
    let s = if reversed { 1.0 - t } else { t };
    let (px, py) = ref_edge_point(plus_edge, t);
    let (mx, my) = ref_edge_point(minus_edge, s);
    let c_plus = plus.outward_cross(px, py);
    let c_minus = minus.outward_cross(mx, my);
    let tau = side_tangent(plus, plus_edge, t);
    let denom = c_plus.norm() * c_minus.norm() * tau.norm();
    if denom == 0.0 {
        return Err(IsoError::DegenerateJacobian { x: px, y: py });
    }
    Ok(c_minus.dot(&tau.cross(&c_plus)) / denom)
}

/// A classified side of a half-domain surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideKind {
    /// Shared by two outer patches.
    InteriorOut { minus: usize, minus_edge: usize },
    /// On the boundary of the projected domain, where the outer surface
    /// meets the symmetry plane.
    Equator,
}

#[derive(Debug, Clone, Copy)]
pub struct SurfaceSide {
    pub plus: usize,
    pub plus_edge: usize,
    pub kind: SideKind,
}

/// The curved upper boundary of a convex half domain: quadratic patches over
/// a planar triangulation, plus the symmetry cross-section at height zero.
#[derive(Debug, Clone)]
pub struct HalfDomainSurface {
    pub patches: Vec<QuadraticSurfacePatch>,
    pub sym_mesh: TriMesh2,
    pub sides: Vec<SurfaceSide>,
}

/// Lift a nonnegative graph function (node and edge-midpoint samples over
/// `mesh`) into the outer surface of the half domain below it.
pub fn build_half_domain_surface(
    mesh: &TriMesh2,
    node_values: &[f64],
    edge_values: &[f64],
) -> Result<HalfDomainSurface, IsoError> {
    if node_values.len() != mesh.vertices().len() || edge_values.len() != mesh.edges().len() {
        return Err(IsoError::BadTriangulation(format!(
            "value arrays ({}, {}) do not match mesh ({} vertices, {} edges)",
            node_values.len(),
            edge_values.len(),
            mesh.vertices().len(),
            mesh.edges().len()
        )));
    }
    let check = |v: f64, at: Vec2| -> Result<f64, IsoError> {
        if v < -1e-12 {
            Err(IsoError::NegativeLift { value: v, at })
        } else {
            Ok(v.max(0.0))
        }
    };
    let mut patches = Vec::with_capacity(mesh.triangles().len());
    for (ti, tri) in mesh.triangles().iter().enumerate() {
        let p: Vec<Vec3> = tri
            .iter()
            .map(|&v| {
                let xy = mesh.vertices()[v];
                check(node_values[v], xy).map(|z| Vec3::new(xy.x, xy.y, z))
            })
            .collect::<Result<_, _>>()?;
        let te = mesh.triangle_edge_ids(ti);
        // Patch edge controls: [P12, P13, P23] = mesh sides (v0,v1), (v2,v0), (v1,v2).
        let lift_edge = |e: usize| -> Result<Vec3, IsoError> {
            let xy = mesh.edge_midpoint(e);
            check(edge_values[e], xy).map(|z| Vec3::new(xy.x, xy.y, z))
        };
        patches.push(QuadraticSurfacePatch {
            corners: [p[0], p[1], p[2]],
            edge_points: [lift_edge(te[0])?, lift_edge(te[2])?, lift_edge(te[1])?],
            // CCW in the plane lifts to an upward cross product, which points
            // out of the domain below the graph.
            cross_side: CrossSide::Outward,
        });
    }
    let mut sides = Vec::with_capacity(mesh.edges().len());
    for (ei, e) in mesh.edges().iter().enumerate() {
        let local = |t: usize| -> usize {
            mesh.triangle_edge_ids(t)
                .iter()
                .position(|&id| id == ei)
                .expect("edge belongs to its incident triangle")
        };
        match e.right {
            Some(right) => sides.push(SurfaceSide {
                plus: e.left,
                plus_edge: local(e.left),
                kind: SideKind::InteriorOut {
                    minus: right,
                    minus_edge: local(right),
                },
            }),
            None => sides.push(SurfaceSide {
                plus: e.left,
                plus_edge: local(e.left),
                kind: SideKind::Equator,
            }),
        }
    }
    Ok(HalfDomainSurface {
        patches,
        sym_mesh: mesh.clone(),
        sides,
    })
}

impl HalfDomainSurface {
    /// The half-domain kink condition at parameter t along a side: the
    /// normalized kink value on interior sides, and the third component of
    /// the outward unit normal on equator sides (>= 0 keeps the mirrored
    /// domain convex).
    pub fn c_k_plus(&self, side: &SurfaceSide, t: f64) -> Result<f64, IsoError> {
        match side.kind {
            SideKind::Equator => {
                let (x, y) = ref_edge_point(side.plus_edge, t);
                let n = self.patches[side.plus].outward_normal(x, y)?;
                Ok(n.z)
            }
            SideKind::InteriorOut { minus, minus_edge } => c_k_normalized(
                &self.patches[side.plus],
                side.plus_edge,
                &self.patches[minus],
                minus_edge,
                t,
            ),
        }
    }

    /// Minimum of the half-domain kink condition over all sides, sampled at
    /// parameters {0, 1/2, 1}.
    pub fn c_k_sweep(&self) -> Result<f64, IsoError> {
        let mut min = f64::INFINITY;
        for side in &self.sides {
            for t in [0.0, 0.5, 1.0] {
                min = min.min(self.c_k_plus(side, t)?);
            }
        }
        Ok(min)
    }

    /// Minimum curvature-condition eigenvalue over all patches at the
    /// 14-point sample set.
    pub fn c_h_sweep(&self, tol: f64) -> Result<f64, IsoError> {
        let mut min = f64::INFINITY;
        for p in &self.patches {
            let (eig, _) = super::patch::c_h_sweep(p, tol)?;
            min = min.min(eig);
        }
        Ok(min)
    }
}
