//! Quadratic surface patches over the reference triangle and the
//! infinitesimal convexity condition on their second fundamental form.

use super::IsoError;
use crate::Vec3;
use nalgebra::Matrix2;

/// Which side of the patch the parametrization's cross product
/// `a_x1 x a_x2` points to, relative to the enclosed domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossSide {
    /// The natural cross product points out of the domain.
    Outward,
    /// The natural cross product points into the domain.
    Inward,
}

/// A curved boundary triangle: the image of the reference triangle under the
/// hierarchical quadratic map determined by 3 corner and 3 edge control
/// points. Edge offsets D_ij = P_ij - (P_i + P_j)/2 vanish exactly when the
/// patch is affine.
#[derive(Debug, Clone)]
pub struct QuadraticSurfacePatch {
    /// Corner control points P1, P2, P3.
    pub corners: [Vec3; 3],
    /// Edge control points P12, P13, P23.
    pub edge_points: [Vec3; 3],
    pub cross_side: CrossSide,
}

/// All first and second derivatives of the patch map at a reference point.
#[derive(Debug, Clone, Copy)]
pub struct PatchDerivatives {
    pub a: Vec3,
    pub a_x: Vec3,
    pub a_y: Vec3,
    /// Second derivatives are constant over the patch.
    pub a_xx: Vec3,
    pub a_xy: Vec3,
    pub a_yy: Vec3,
}

impl QuadraticSurfacePatch {
    /// Affine patch through three corners (zero edge offsets).
    pub fn affine(corners: [Vec3; 3], cross_side: CrossSide) -> Self {
        let edge_points = [
            (corners[0] + corners[1]) / 2.0,
            (corners[0] + corners[2]) / 2.0,
            (corners[1] + corners[2]) / 2.0,
        ];
        Self {
            corners,
            edge_points,
            cross_side,
        }
    }

    /// Patch interpolating the graph of `f` over a plane triangle, exact
    /// quadratic edge values. `domain_above` selects the orientation marker:
    /// true marks the natural (upward) cross product as pointing into the
    /// domain.
    pub fn graph(
        base: [crate::Vec2; 3],
        f: &dyn Fn(f64, f64) -> f64,
        domain_above: bool,
    ) -> Self {
        let lift = |p: crate::Vec2| Vec3::new(p.x, p.y, f(p.x, p.y));
        let corners = [lift(base[0]), lift(base[1]), lift(base[2])];
        let mids = [
            (base[0] + base[1]) / 2.0,
            (base[0] + base[2]) / 2.0,
            (base[1] + base[2]) / 2.0,
        ];
        Self {
            corners,
            edge_points: [lift(mids[0]), lift(mids[1]), lift(mids[2])],
            cross_side: if domain_above {
                CrossSide::Inward
            } else {
                CrossSide::Outward
            },
        }
    }

    fn offsets(&self) -> [Vec3; 3] {
        [
            self.edge_points[0] - (self.corners[0] + self.corners[1]) / 2.0,
            self.edge_points[1] - (self.corners[0] + self.corners[2]) / 2.0,
            self.edge_points[2] - (self.corners[1] + self.corners[2]) / 2.0,
        ]
    }

    /// Evaluate map and derivatives at reference coordinates (x, y) with
    /// x, y >= 0, x + y <= 1.
    pub fn derivatives(&self, x: f64, y: f64) -> PatchDerivatives {
        let [p1, p2, p3] = self.corners;
        let [d12, d13, d23] = self.offsets();
        let l1 = 1.0 - x - y;
        let l2 = x;
        let l3 = y;
        let a = l1 * p1
            + l2 * p2
            + l3 * p3
            + 4.0 * l1 * l2 * d12
            + 4.0 * l1 * l3 * d13
            + 4.0 * l2 * l3 * d23;
        let a_x = p2 - p1 + 4.0 * (l1 - l2) * d12 - 4.0 * l3 * d13 + 4.0 * l3 * d23;
        let a_y = p3 - p1 - 4.0 * l2 * d12 + 4.0 * (l1 - l3) * d13 + 4.0 * l2 * d23;
        PatchDerivatives {
            a,
            a_x,
            a_y,
            a_xx: -8.0 * d12,
            a_xy: 4.0 * (d23 - d12 - d13),
            a_yy: -8.0 * d13,
        }
    }

    pub fn point(&self, x: f64, y: f64) -> Vec3 {
        self.derivatives(x, y).a
    }

    /// Unnormalized cross product oriented out of the domain.
    pub fn outward_cross(&self, x: f64, y: f64) -> Vec3 {
        let d = self.derivatives(x, y);
        let c = d.a_x.cross(&d.a_y);
        match self.cross_side {
            CrossSide::Outward => c,
            CrossSide::Inward => -c,
        }
    }

    /// Outward unit normal; errors when the Jacobian is rank deficient.
    pub fn outward_normal(&self, x: f64, y: f64) -> Result<Vec3, IsoError> {
        let c = self.outward_cross(x, y);
        let n = c.norm();
        let scale = self.scale();
        if n <= 1e-12 * scale * scale {
            return Err(IsoError::DegenerateJacobian { x, y });
        }
        Ok(c / n)
    }

    fn scale(&self) -> f64 {
        let [p1, p2, p3] = self.corners;
        (p2 - p1).norm().max((p3 - p1).norm()).max((p3 - p2).norm())
    }
}

/// Result of the local curvature condition at one reference point.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureCheck {
    /// Second fundamental form against the unnormalized inner normal.
    pub matrix: Matrix2<f64>,
    pub eigenvalues: [f64; 2],
    pub psd: bool,
}

/// Default eigenvalue tolerance for the PSD flag.
pub const C_H_TOL: f64 = 1e-10;

/// Second-fundamental-form condition at a reference point: entries
/// <a_xixj, n> with n the cross product oriented *into* the domain, so
/// boundary patches of convex domains produce positive semidefinite
/// matrices. Fails on a rank-deficient Jacobian.
pub fn c_h_matrix(
    patch: &QuadraticSurfacePatch,
    x: f64,
    y: f64,
    tol: f64,
) -> Result<CurvatureCheck, IsoError> {
    let d = patch.derivatives(x, y);
    let cross = d.a_x.cross(&d.a_y);
    let scale = patch.scale();
    if cross.norm() <= 1e-12 * scale * scale {
        return Err(IsoError::DegenerateJacobian { x, y });
    }
    let inner = match patch.cross_side {
        CrossSide::Outward => -cross,
        CrossSide::Inward => cross,
    };
    let m = Matrix2::new(
        d.a_xx.dot(&inner),
        d.a_xy.dot(&inner),
        d.a_xy.dot(&inner),
        d.a_yy.dot(&inner),
    );
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let eigenvalues = [tr / 2.0 - disc, tr / 2.0 + disc];
    Ok(CurvatureCheck {
        matrix: m,
        eigenvalues,
        psd: eigenvalues[0] >= -tol,
    })
}

/// Deterministic 14-point reference sample set used for curvature sweeps:
/// corners, edge midpoints, centroid, two symmetric interior orbits and one
/// asymmetric interior point.
pub const TRI_SAMPLE_14: [[f64; 2]; 14] = {
    const S: f64 = 1.0 / 6.0;
    const T: f64 = 5.0 / 12.0;
    [
        [0.0, 0.0],
        [1.0, 0.0],
        [0.0, 1.0],
        [0.5, 0.0],
        [0.0, 0.5],
        [0.5, 0.5],
        [1.0 / 3.0, 1.0 / 3.0],
        [S, S],
        [2.0 / 3.0, S],
        [S, 2.0 / 3.0],
        [T, T],
        [S, T],
        [T, S],
        [0.35, 0.20],
    ]
};

/// Sweep C_H over the 14 sample points; returns the smallest eigenvalue
/// observed and the PSD verdict at the given tolerance.
pub fn c_h_sweep(patch: &QuadraticSurfacePatch, tol: f64) -> Result<(f64, bool), IsoError> {
    let mut min_eig = f64::INFINITY;
    for [x, y] in TRI_SAMPLE_14 {
        let chk = c_h_matrix(patch, x, y, tol)?;
        min_eig = min_eig.min(chk.eigenvalues[0]);
    }
    Ok((min_eig, min_eig >= -tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec2;

    fn saddle() -> QuadraticSurfacePatch {
        QuadraticSurfacePatch::graph(
            [
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, 1.0),
            ],
            &|x, y| x * x - y * y,
            true,
        )
    }

    #[test]
    fn affine_patch_has_zero_second_derivatives() {
        let p = QuadraticSurfacePatch::affine(
            [
                Vec3::new(0.0, 0.0, 1.0),
                Vec3::new(2.0, 0.0, 1.5),
                Vec3::new(0.0, 2.0, 0.5),
            ],
            CrossSide::Outward,
        );
        let d = p.derivatives(0.3, 0.4);
        assert!(d.a_xx.norm() < 1e-15);
        assert!(d.a_xy.norm() < 1e-15);
        assert!(d.a_yy.norm() < 1e-15);
    }

    #[test]
    fn corners_and_edge_points_are_interpolated() {
        let p = saddle();
        assert!((p.point(0.0, 0.0) - p.corners[0]).norm() < 1e-15);
        assert!((p.point(1.0, 0.0) - p.corners[1]).norm() < 1e-15);
        assert!((p.point(0.0, 1.0) - p.corners[2]).norm() < 1e-15);
        assert!((p.point(0.5, 0.0) - p.edge_points[0]).norm() < 1e-15);
        assert!((p.point(0.0, 0.5) - p.edge_points[1]).norm() < 1e-15);
        assert!((p.point(0.5, 0.5) - p.edge_points[2]).norm() < 1e-15);
    }

    #[test]
    fn saddle_graph_second_derivatives() {
        // Quadratic graphs are reproduced exactly: z = x^2 - y^2 gives
        // a_xx . e3 = 2, a_yy . e3 = -2, a_xy . e3 = 0.
        let p = saddle();
        let d = p.derivatives(0.2, 0.3);
        assert!((d.a_xx.z - 2.0).abs() < 1e-14);
        assert!((d.a_yy.z + 2.0).abs() < 1e-14);
        assert!(d.a_xy.z.abs() < 1e-14);
        // Horizontal components are affine, so second derivatives vanish.
        assert!(d.a_xx.x.abs() + d.a_xx.y.abs() < 1e-14);
    }

    #[test]
    fn planar_patch_curvature_is_zero_and_psd() {
        let p = QuadraticSurfacePatch::affine(
            [
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            CrossSide::Outward,
        );
        let chk = c_h_matrix(&p, 0.25, 0.25, C_H_TOL).unwrap();
        assert!(chk.matrix.amax() < 1e-14);
        assert!(chk.psd);
    }

    #[test]
    fn saddle_is_rejected_with_the_pinned_matrix() {
        // At the origin corner the cross factor is exactly (0, 0, 1) and the
        // bending matrix is diag(2, -2).
        let p = saddle();
        let d = p.derivatives(0.0, 0.0);
        let cross = d.a_x.cross(&d.a_y);
        assert!((cross - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-14);
        let chk = c_h_matrix(&p, 0.0, 0.0, C_H_TOL).unwrap();
        assert!((chk.matrix[(0, 0)] - 2.0).abs() < 1e-10);
        assert!((chk.matrix[(1, 1)] + 2.0).abs() < 1e-10);
        assert!(chk.matrix[(0, 1)].abs() < 1e-10);
        assert!(!chk.psd);
        let (min_eig, psd) = c_h_sweep(&p, C_H_TOL).unwrap();
        assert!(!psd);
        assert!(min_eig < -1.0);
    }

    #[test]
    fn sphere_octant_interpolant_is_psd_with_outward_orientation() {
        // Corners on the coordinate axes, edge points normalized to the
        // sphere; natural cross points away from the origin.
        let s = 1.0 / 2.0_f64.sqrt();
        let p = QuadraticSurfacePatch {
            corners: [
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            edge_points: [
                Vec3::new(s, s, 0.0),
                Vec3::new(s, 0.0, s),
                Vec3::new(0.0, s, s),
            ],
            cross_side: CrossSide::Outward,
        };
        // Eigenvalue sweep over the full sample set.
        let (min_eig, psd) = c_h_sweep(&p, 1e-9).unwrap();
        assert!(psd, "sphere octant should pass C_H, min eig {min_eig}");
        assert!(min_eig > 0.0);
    }

    #[test]
    fn rigid_motions_preserve_the_psd_flag_and_scaling_is_cubic() {
        let p = saddle();
        let base = c_h_matrix(&p, 0.1, 0.2, C_H_TOL).unwrap();
        // Rotation around an arbitrary axis plus translation.
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -0.8, 1.1);
        let shift = Vec3::new(5.0, -2.0, 0.7);
        let map = |v: &Vec3| rot * v + shift;
        let moved = QuadraticSurfacePatch {
            corners: [map(&p.corners[0]), map(&p.corners[1]), map(&p.corners[2])],
            edge_points: [
                map(&p.edge_points[0]),
                map(&p.edge_points[1]),
                map(&p.edge_points[2]),
            ],
            cross_side: p.cross_side,
        };
        let chk = c_h_matrix(&moved, 0.1, 0.2, C_H_TOL).unwrap();
        assert_eq!(chk.psd, base.psd);
        for (a, b) in chk.eigenvalues.iter().zip(&base.eigenvalues) {
            assert!((a - b).abs() < 1e-10, "rigid motion changed eigenvalue");
        }
        // Pure scaling multiplies entries by s^3.
        let s = 2.5;
        let scaled = QuadraticSurfacePatch {
            corners: [s * p.corners[0], s * p.corners[1], s * p.corners[2]],
            edge_points: [s * p.edge_points[0], s * p.edge_points[1], s * p.edge_points[2]],
            cross_side: p.cross_side,
        };
        let chks = c_h_matrix(&scaled, 0.1, 0.2, C_H_TOL).unwrap();
        assert_eq!(chks.psd, base.psd);
        assert!((chks.matrix[(0, 0)] - s.powi(3) * base.matrix[(0, 0)]).abs() < 1e-9);
    }

    #[test]
    fn degenerate_jacobian_is_an_error() {
        // Collapse two corners: rank-deficient at the shared corner.
        let p = QuadraticSurfacePatch::affine(
            [
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            CrossSide::Outward,
        );
        assert!(matches!(
            c_h_matrix(&p, 0.5, 0.25, C_H_TOL),
            Err(IsoError::DegenerateJacobian { .. })
        ));
    }
}
