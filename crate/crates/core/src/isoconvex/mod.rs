//! Conformal convexity certification for piecewise-quadratic boundaries:
//! curved surface patches, the curvature condition on the second fundamental
//! form, kink conditions across patch sides, convex half-domain surfaces and
//! the convex interpolation of graph functions.

mod halfdomain;
mod interpolate;
mod patch;
mod trimesh2;

pub use halfdomain::{
    build_half_domain_surface, c_k_normalized, c_k_value, side_tangent, HalfDomainSurface,
    SideKind, SurfaceSide,
};
pub use interpolate::{
    certify, convex_interpolate_graph, GraphCertification, GraphFunctionMesh, CERT_TOL,
};
pub use patch::{
    c_h_matrix, c_h_sweep, CrossSide, CurvatureCheck, PatchDerivatives, QuadraticSurfacePatch,
    C_H_TOL, TRI_SAMPLE_14,
};
pub use trimesh2::{signed_area, MeshEdge, TriMesh2};

use crate::solvers::SolverError;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IsoError {
    #[error("patch Jacobian is rank deficient at reference point ({x}, {y})")]
    DegenerateJacobian { x: f64, y: f64 },
    #[error("patches do not share the side: {0}")]
    SideMismatch(String),
    #[error("graph value {value:.3e} at ({}, {}) is negative", at.x, at.y)]
    NegativeLift { value: f64, at: crate::Vec2 },
    #[error("triangulation violates the correction assumption: {0}")]
    MeshAssumption(String),
    #[error("invalid triangulation: {0}")]
    BadTriangulation(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Write curved patches as VTK quadratic triangles (cell type 22), or as
/// four linear triangles per patch for viewers without type-22 support.
pub fn write_surface_vtk(
    patches: &[QuadraticSurfacePatch],
    path: &Path,
    subdivide: bool,
) -> Result<(), IsoError> {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("cso quadratic boundary surface\n");
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    if !subdivide {
        let np = patches.len() * 6;
        let _ = writeln!(s, "POINTS {np} double");
        for p in patches {
            // VTK order: corners, then midpoints of (0,1), (1,2), (0,2).
            for v in [
                p.corners[0],
                p.corners[1],
                p.corners[2],
                p.edge_points[0],
                p.edge_points[2],
                p.edge_points[1],
            ] {
                let _ = writeln!(s, "{} {} {}", v.x, v.y, v.z);
            }
        }
        let nc = patches.len();
        let _ = writeln!(s, "CELLS {nc} {}", nc * 7);
        for i in 0..nc {
            let b = 6 * i;
            let _ = writeln!(s, "6 {} {} {} {} {} {}", b, b + 1, b + 2, b + 3, b + 4, b + 5);
        }
        let _ = writeln!(s, "CELL_TYPES {nc}");
        for _ in 0..nc {
            s.push_str("22\n");
        }
    } else {
        // Four linear triangles on the parameter midpoints, evaluated on the
        // curved map.
        let np = patches.len() * 6;
        let _ = writeln!(s, "POINTS {np} double");
        for p in patches {
            for (x, y) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.5, 0.0), (0.5, 0.5), (0.0, 0.5)]
            {
                let v = p.point(x, y);
                let _ = writeln!(s, "{} {} {}", v.x, v.y, v.z);
            }
        }
        let nc = patches.len() * 4;
        let _ = writeln!(s, "CELLS {nc} {}", nc * 4);
        for i in 0..patches.len() {
            let b = 6 * i;
            for tri in [[b, b + 3, b + 5], [b + 3, b + 1, b + 4], [b + 5, b + 4, b + 2], [b + 3, b + 4, b + 5]] {
                let _ = writeln!(s, "3 {} {} {}", tri[0], tri[1], tri[2]);
            }
        }
        let _ = writeln!(s, "CELL_TYPES {nc}");
        for _ in 0..nc {
            s.push_str("5\n");
        }
    }
    std::fs::write(path, s).map_err(|source| IsoError::Io {
        path: path.display().to_string(),
        source,
    })
}
