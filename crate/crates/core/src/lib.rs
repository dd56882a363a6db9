//! Shape optimization of PDE-constrained functionals over (approximately)
//! convex domains in R^3.
//!
//! The toolkit has two legs. The first discretizes domains with affine
//! tetrahedral meshes and enforces a *discrete convexity* constraint: every
//! boundary vertex must admit a support plane, certified per node patch by a
//! small linear program over the cone of incident facet normals. A damped
//! linear-elasticity inner product turns the volume-form shape derivative
//! into a descent field, constrained by the linearized per-patch conditions
//! through a convex QP. The second leg certifies *conformal* convexity of
//! piecewise-quadratic boundaries: positive semidefiniteness of the second
//! fundamental form per curved patch and a kink condition across patch
//! sides, together with a convex piecewise-quadratic interpolant of graph
//! functions.
//!
//! Modules map onto those subsystems:
//!
//! - [`mesh`]: tetrahedral meshes, ellipsoid generation, boundary node
//!   patches, deformation, node/ele and VTK I/O
//! - [`fem`]: P1 state/adjoint solves and objective evaluation
//! - [`solvers`]: dense two-phase simplex, ADMM quadratic programming,
//!   preconditioned conjugate gradients
//! - [`dconvex`]: support-plane certification, convex hulls, global checks
//!   and post-processing
//! - [`isoconvex`]: quadratic surface patches, curvature/kink conditions,
//!   convex interpolation of graph functions
//! - [`shapeopt`]: the descent loop (shape gradient, elasticity metric,
//!   constrained step, line search)
//! - [`cli`]: run configurations, batch commands and report tables

pub mod cli;
pub mod dconvex;
pub mod fem;
pub mod isoconvex;
pub mod mesh;
pub mod shapeopt;
pub mod solvers;

/// 3D point/vector type used throughout.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 2D point/vector type used by the graph-function machinery.
pub type Vec2 = nalgebra::Vector2<f64>;
