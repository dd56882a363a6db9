use super::oracle::sampled_support_margin;
use super::*;
use crate::mesh::{generate_box_mesh, generate_ellipsoid_mesh, BoundaryNodePatch, EllipsoidSpec};
use crate::solvers::Tolerances;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tols() -> Tolerances {
    Tolerances::default()
}

pub(crate) fn pyramid_patch() -> BoundaryNodePatch {
    BoundaryNodePatch::from_positions(
        Vec3::new(0.0, 0.0, 1.0),
        vec![
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(-1.0, 1.0, 0.0),
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
        ],
    )
}

pub(crate) fn saddle_patch() -> BoundaryNodePatch {
    BoundaryNodePatch::from_positions(
        Vec3::zeros(),
        vec![
            Vec3::new(1.0, 0.0, 1.0),
            Vec3::new(0.0, 1.0, -1.0),
            Vec3::new(-1.0, 0.0, 1.0),
            Vec3::new(0.0, -1.0, -1.0),
        ],
    )
}

fn flat_patch(m: usize) -> BoundaryNodePatch {
    let ring = (0..m)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            Vec3::new(th.cos(), th.sin(), 0.0)
        })
        .collect();
    BoundaryNodePatch::from_positions(Vec3::zeros(), ring)
}

#[test]
fn pyramid_cone_matrix_entries() {
    let m = cone_matrix(&pyramid_patch());
    for i in 0..4 {
        assert!(m[(i, i)].abs() < 1e-14, "diagonal must vanish");
    }
    assert!((m[(2, 0)] - (-4.0)).abs() < 1e-14, "M_31 = -4");
    assert!((m[(0, 1)] - (-4.0)).abs() < 1e-14);
}

#[test]
fn flat_patch_cone_matrix_is_zero() {
    let m = cone_matrix(&flat_patch(6));
    assert!(m.amax() < 1e-14);
}

#[test]
fn ring_reversal_negates_cone_matrix() {
    let p = pyramid_patch();
    let mut rev = p.clone();
    rev.ring.reverse();
    rev.ring_pos.reverse();
    let a = cone_matrix(&p);
    let b = cone_matrix(&rev);
    // Reversal maps ring index i -> m-1-i and facet j -> pairs shifted by
    // one; entries appear negated in the re-indexed positions.
    let m = p.ring_len();
    for i in 0..m {
        for j in 0..m {
            let ir = m - 1 - i;
            let jr = (m - 1 - j + m - 1) % m;
            assert!(
                (a[(i, j)] + b[(ir, jr)]).abs() < 1e-13,
                "entry ({i},{j}) not negated"
            );
        }
    }
}

#[test]
fn pyramid_is_certified_with_uniform_multipliers_feasible() {
    let patch = pyramid_patch();
    let cert = certify_patch(&patch, DEFAULT_EPSILON, DEFAULT_K_MAX, &tols()).unwrap();
    assert_eq!(cert.status, CertStatus::Certified);
    assert_eq!(cert.k_used, 0);
    // Any feasible multipliers are acceptable; check feasibility directly.
    let sum: f64 = cert.lambda.iter().sum();
    assert!((sum - 1.0).abs() < 1e-9);
    assert!(cert.lambda.iter().all(|&l| l >= DEFAULT_EPSILON - 1e-12));
    for c in constraint_values(&patch, &cert.lambda) {
        assert!(c <= 1e-9, "certified but C = {c}");
    }
    // The hand-computed uniform certificate.
    let uniform = vec![0.25; 4];
    let c_uniform = constraint_values(&patch, &uniform);
    for c in &c_uniform {
        assert!((c + 2.0).abs() < 1e-14, "uniform C = {c}");
    }
    let v: Vec3 = uniform
        .iter()
        .zip(patch.facet_normals())
        .map(|(l, n)| *l * n)
        .sum();
    assert!((v - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-14);
    // Certificate normal supports the ring.
    for zi in &patch.ring_pos {
        assert!((zi - patch.center_pos).dot(&cert.normal) <= 1e-9);
    }
}

#[test]
fn saddle_is_uncertified_and_oracle_agrees() {
    let patch = saddle_patch();
    let cert = certify_patch(&patch, DEFAULT_EPSILON, DEFAULT_K_MAX, &tols()).unwrap();
    assert_eq!(cert.status, CertStatus::Uncertified);
    let margin = sampled_support_margin(&patch, 10_000);
    assert!(margin > 1e-6, "oracle margin {margin} should be positive");
}

#[test]
fn flat_patch_is_certified_at_zero() {
    let patch = flat_patch(5);
    let cert = certify_patch(&patch, DEFAULT_EPSILON, DEFAULT_K_MAX, &tols()).unwrap();
    assert_eq!(cert.status, CertStatus::Certified);
    for c in constraint_values(&patch, &cert.lambda) {
        assert!(c.abs() < 1e-12);
    }
}

#[test]
fn unit_multiplier_reproduces_cone_matrix_column() {
    let patch = pyramid_patch();
    let m = cone_matrix(&patch);
    for j in 0..4 {
        let mut lambda = vec![0.0; 4];
        lambda[j] = 1.0;
        let c = constraint_values(&patch, &lambda);
        for i in 0..4 {
            assert!((c[i] - m[(i, j)]).abs() < 1e-14);
        }
    }
}

fn eval_constraints_at(
    patch: &BoundaryNodePatch,
    coords: &HashMap<usize, Vec3>,
    lambda: &[f64],
) -> Vec<f64> {
    let mut p = patch.clone();
    if let Some(c) = coords.get(&patch.center) {
        p.center_pos = *c;
    }
    for (k, &id) in patch.ring.iter().enumerate() {
        if let Some(c) = coords.get(&id) {
            p.ring_pos[k] = *c;
        }
    }
    constraint_values(&p, lambda)
}

#[test]
fn constraint_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _case in 0..12 {
        let m = rng.gen_range(3..8);
        let ring: Vec<Vec3> = (0..m)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                let r = rng.gen_range(0.5..1.5);
                Vec3::new(
                    r * th.cos(),
                    r * th.sin(),
                    rng.gen_range(-0.5..0.5_f64),
                )
            })
            .collect();
        let center = Vec3::new(
            rng.gen_range(-0.2..0.2),
            rng.gen_range(-0.2..0.2),
            rng.gen_range(0.3..1.0),
        );
        let patch = BoundaryNodePatch::from_positions(center, ring);
        let lambda: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
        let rows = constraint_gradient(&patch, &lambda);

        let delta = 1e-5;
        let all_ids: Vec<usize> = std::iter::once(patch.center)
            .chain(patch.ring.iter().copied())
            .collect();
        for (i, row) in rows.iter().enumerate() {
            // A random perturbation direction over all participating vertices.
            let dir: HashMap<usize, Vec3> = all_ids
                .iter()
                .map(|&id| {
                    (
                        id,
                        Vec3::new(
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                        ),
                    )
                })
                .collect();
            let base_coords = |sign: f64| -> HashMap<usize, Vec3> {
                let mut c = HashMap::new();
                c.insert(patch.center, patch.center_pos + sign * delta * dir[&patch.center]);
                for (k, &id) in patch.ring.iter().enumerate() {
                    c.insert(id, patch.ring_pos[k] + sign * delta * dir[&id]);
                }
                c
            };
            let cp = eval_constraints_at(&patch, &base_coords(1.0), &lambda)[i];
            let cm = eval_constraints_at(&patch, &base_coords(-1.0), &lambda)[i];
            let fd = (cp - cm) / (2.0 * delta);
            let analytic: f64 = row.iter().map(|(id, g)| g.dot(&dir[id])).sum();
            assert!(
                (fd - analytic).abs() <= 1e-6 * (1.0 + analytic.abs()),
                "row {i}: fd {fd} vs analytic {analytic}"
            );
        }
    }
}

#[test]
fn constraint_gradient_rows_sum_to_zero() {
    // C depends only on coordinate differences, so translating everything
    // leaves it unchanged.
    let patch = pyramid_patch();
    let lambda = vec![0.3, 0.2, 0.4, 0.1];
    for row in constraint_gradient(&patch, &lambda) {
        let total: Vec3 = row.values().sum();
        assert!(total.norm() < 1e-13);
    }
}

#[test]
fn flat_patch_gradient_points_down_along_normal() {
    let patch = flat_patch(6);
    let lambda = vec![1.0 / 6.0; 6];
    let c = constraint_values(&patch, &lambda);
    assert!(c.iter().all(|v| v.abs() < 1e-14));
    let rows = constraint_gradient(&patch, &lambda);
    for row in &rows {
        let g_center = row[&patch.center];
        // Raising the center creates a tent: C must decrease.
        assert!(g_center.z < -1e-6, "center gradient {g_center:?}");
    }
}

#[test]
fn certified_sphere_mesh_is_globally_convex() {
    let mesh = generate_ellipsoid_mesh(&EllipsoidSpec::unit_ball(2)).unwrap();
    let report = check_global(&mesh, DEFAULT_EPSILON, DEFAULT_K_MAX, &tols()).unwrap();
    assert!(report.global);
    assert!(report.violating.is_empty());
    assert!(
        report.max_local_violation < 0.0,
        "sphere mesh max C = {} should be strictly negative",
        report.max_local_violation
    );
    assert!(report
        .per_vertex
        .iter()
        .all(|v| v.status == CertStatus::Certified));
}

#[test]
fn cube_mesh_is_globally_convex() {
    let mesh = generate_box_mesh([2; 3], Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)).unwrap();
    let report = check_global(&mesh, DEFAULT_EPSILON, DEFAULT_K_MAX, &tols()).unwrap();
    assert!(report.global);
    assert!(report
        .per_vertex
        .iter()
        .all(|v| v.status == CertStatus::Certified));
    // CSV serialization carries one row per boundary vertex.
    let csv = report.to_csv();
    assert_eq!(csv.lines().count(), 1 + report.per_vertex.len());
}

/// Cube mesh with the top-face center pushed inward by depth.
fn dented_cube(depth: f64) -> (crate::mesh::TetMesh, usize) {
    let mesh = generate_box_mesh([2; 3], Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)).unwrap();
    let center = mesh
        .vertices()
        .iter()
        .position(|p| (p - Vec3::new(0.5, 0.5, 1.0)).norm() < 1e-14)
        .unwrap();
    let mut vertices = mesh.vertices().to_vec();
    vertices[center].z -= depth;
    (mesh.with_vertices(vertices).unwrap(), center)
}

#[test]
fn dented_cube_reports_hull_distance() {
    let (mesh, center) = dented_cube(0.1);
    let report = check_global(&mesh, DEFAULT_EPSILON, DEFAULT_K_MAX, &tols()).unwrap();
    assert!(!report.global);
    assert_eq!(report.violating, vec![center]);
    let check = report
        .per_vertex
        .iter()
        .find(|v| v.vertex == center)
        .unwrap();
    assert!(
        (check.hull_distance - 0.1).abs() < 1e-9,
        "hull distance {} should be ~0.1",
        check.hull_distance
    );
}

#[test]
fn hull_defect_of_convex_mesh_vanishes() {
    let mesh = generate_box_mesh([2; 3], Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)).unwrap();
    let defect = hull_distance_defect(&mesh).unwrap();
    assert!(defect.abs() < 1e-12, "defect {defect}");
}

#[test]
fn dented_cube_defect_is_the_dent_volume() {
    let depth = 0.1;
    let (mesh, center) = dented_cube(depth);
    // Independent geometry: the dent is the union of tetrahedra over the
    // top-face triangles incident to the dented vertex, each of volume
    // area * depth / 3 measured on the undeformed face.
    let flat = generate_box_mesh([2; 3], Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)).unwrap();
    let mut dent_volume = 0.0;
    for f in flat.boundary_facets() {
        if f.contains(&center) {
            let a = flat.vertices()[f[0]];
            let b = flat.vertices()[f[1]];
            let c = flat.vertices()[f[2]];
            if (a.z - 1.0).abs() < 1e-14 && (b.z - 1.0).abs() < 1e-14 && (c.z - 1.0).abs() < 1e-14
            {
                let area = 0.5 * (b - a).cross(&(c - a)).norm();
                dent_volume += area * depth / 3.0;
            }
        }
    }
    assert!(dent_volume > 0.0);
    let defect = hull_distance_defect(&mesh).unwrap();
    assert!(
        (defect - dent_volume).abs() < 1e-12,
        "defect {defect} vs dent {dent_volume}"
    );
}

/// Rotate every vertex by an angle proportional to its height. Radii are
/// preserved exactly, so sphere vertices stay on the sphere while the
/// boundary triangulation stops being the hull triangulation.
pub(crate) fn twisted_sphere(level: usize, alpha: f64) -> crate::mesh::TetMesh {
    let m = generate_ellipsoid_mesh(&EllipsoidSpec::unit_ball(level)).unwrap();
    let verts: Vec<Vec3> = m
        .vertices()
        .iter()
        .map(|p| {
            let (s, c) = (alpha * p.z).sin_cos();
            Vec3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z)
        })
        .collect();
    m.with_vertices(verts).unwrap()
}

#[test]
fn sphere_defect_halves_under_refinement() {
    // The plain octasphere's boundary happens to be its own hull, so the
    // decay is checked on the twisted family where the defect is positive.
    let d2 = hull_distance_defect(&twisted_sphere(2, 0.3)).unwrap();
    let d3 = hull_distance_defect(&twisted_sphere(3, 0.3)).unwrap();
    assert!(d2 > 0.0 && d3 > 0.0);
    assert!(d2 / d3 >= 2.0, "defect ratio {}", d2 / d3);
}

#[test]
fn post_process_is_identity_on_convex_meshes() {
    let mesh = generate_box_mesh([2; 3], Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)).unwrap();
    let report = check_global(&mesh, DEFAULT_EPSILON, DEFAULT_K_MAX, &tols()).unwrap();
    let processed = post_process(&mesh, &report, &tols()).unwrap();
    for (a, b) in mesh.vertices().iter().zip(processed.vertices()) {
        assert_eq!(a, b);
    }
}

#[test]
fn post_process_repairs_the_dented_cube() {
    let (mesh, center) = dented_cube(0.1);
    let report = check_global(&mesh, DEFAULT_EPSILON, DEFAULT_K_MAX, &tols()).unwrap();
    let fixed = post_process(&mesh, &report, &tols()).unwrap();
    let p = fixed.vertices()[center];
    assert!(
        (p.z - 1.0).abs() < 1e-9,
        "dented vertex should return to the face plane, z = {}",
        p.z
    );
    let recheck = check_global(&fixed, DEFAULT_EPSILON, DEFAULT_K_MAX, &tols()).unwrap();
    assert!(recheck.global);

    // Idempotence.
    let again = post_process(&fixed, &recheck, &tols()).unwrap();
    for (a, b) in fixed.vertices().iter().zip(again.vertices()) {
        assert!((a - b).norm() < 1e-9);
    }
}

#[test]
fn post_process_restores_perturbed_sphere() {
    let mesh = generate_ellipsoid_mesh(&EllipsoidSpec::unit_ball(3)).unwrap();
    let boundary = mesh.boundary_vertices();
    let mut vertices = mesh.vertices().to_vec();
    // Pull three separated boundary vertices inward, well below the
    // surrounding facet planes.
    for &b in boundary.iter().step_by(boundary.len() / 3).take(3) {
        vertices[b] *= 0.95;
    }
    let perturbed = mesh.with_vertices(vertices).unwrap();
    let report = check_global(&perturbed, DEFAULT_EPSILON, DEFAULT_K_MAX, &tols()).unwrap();
    assert!(!report.global);
    assert_eq!(report.violating.len(), 3);
    let fixed = post_process(&perturbed, &report, &tols()).unwrap();
    let recheck = check_global(&fixed, DEFAULT_EPSILON, DEFAULT_K_MAX, &tols()).unwrap();
    assert!(recheck.global);
    let gained = fixed.volume() - perturbed.volume();
    let defect = hull_distance_defect(&perturbed).unwrap();
    assert!(
        gained <= defect + 1e-12,
        "volume gain {gained} exceeds defect {defect}"
    );
}

#[test]
fn certification_status_is_scale_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let m = rng.gen_range(4..8);
        let ring: Vec<Vec3> = (0..m)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                Vec3::new(th.cos(), th.sin(), rng.gen_range(-0.4..0.4))
            })
            .collect();
        let patch = BoundaryNodePatch::from_positions(Vec3::new(0.0, 0.0, 0.7), ring);
        let cert = certify_patch(&patch, DEFAULT_EPSILON, DEFAULT_K_MAX, &tols()).unwrap();
        for s in [0.01, 3.0, 250.0] {
            let scaled = BoundaryNodePatch::from_positions(
                s * patch.center_pos,
                patch.ring_pos.iter().map(|p| s * p).collect(),
            );
            let cert_s = certify_patch(&scaled, DEFAULT_EPSILON, DEFAULT_K_MAX, &tols()).unwrap();
            assert_eq!(cert.status, cert_s.status, "scale {s} changed status");
            // C scales by s^3 at matching multipliers.
            let c = constraint_values(&patch, &cert.lambda);
            let cs = constraint_values(&scaled, &cert.lambda);
            for (a, b) in c.iter().zip(&cs) {
                assert!(
                    (b - a * s.powi(3)).abs() <= 1e-9 * s.powi(3).max(1.0),
                    "scaling mismatch {a} {b}"
                );
            }
        }
    }
}

#[test]
fn oracle_agrees_with_lp_on_random_families() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut checked = 0;
    for case in 0..30 {
        let m = rng.gen_range(4..9);
        let patch = match case % 3 {
            0 => {
                // Tent: center above a planar ring -> supportable.
                let ring = (0..m)
                    .map(|k| {
                        let th = 2.0 * std::f64::consts::PI * (k as f64 + rng.gen_range(0.0..0.3))
                            / m as f64;
                        let r = rng.gen_range(0.6..1.4);
                        Vec3::new(r * th.cos(), r * th.sin(), 0.0)
                    })
                    .collect();
                BoundaryNodePatch::from_positions(Vec3::new(0.0, 0.0, rng.gen_range(0.4..1.0)), ring)
            }
            1 => {
                // Saddle: alternating ring heights -> not supportable.
                let eta = rng.gen_range(0.4..0.9);
                let mm = m & !1;
                let ring = (0..mm)
                    .map(|k| {
                        let th = 2.0 * std::f64::consts::PI * k as f64 / mm as f64;
                        let s = if k % 2 == 0 { eta } else { -eta };
                        Vec3::new(th.cos(), th.sin(), s)
                    })
                    .collect();
                BoundaryNodePatch::from_positions(Vec3::zeros(), ring)
            }
            _ => {
                // Perturbed flat: marginal, excluded by the filter below.
                let ring = (0..m)
                    .map(|k| {
                        let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                        Vec3::new(th.cos(), th.sin(), rng.gen_range(-1e-9..1e-9))
                    })
                    .collect();
                BoundaryNodePatch::from_positions(Vec3::zeros(), ring)
            }
        };
        let margin = sampled_support_margin(&patch, 10_000);
        if margin.abs() <= 1e-6 {
            continue; // marginal case, excluded
        }
        checked += 1;
        let cert = certify_patch(&patch, DEFAULT_EPSILON, DEFAULT_K_MAX, &tols()).unwrap();
        let expected = if margin <= 0.0 {
            CertStatus::Certified
        } else {
            CertStatus::Uncertified
        };
        assert_eq!(
            cert.status, expected,
            "case {case}: margin {margin}, status {:?}",
            cert.status
        );
    }
    assert!(checked >= 15, "only {checked} non-marginal cases");
}
