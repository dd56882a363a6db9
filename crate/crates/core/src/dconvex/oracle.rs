//! Brute-force direction-sampling oracle for support-plane existence,
//! independent of the LP certification path. Used by the validation suites.

use crate::mesh::BoundaryNodePatch;
use crate::Vec3;

/// Best support margin over sampled unit directions:
/// min over v of max_i (z_i - z) . v, with |v| = 1.
///
/// A value <= 0 (up to tolerance) witnesses a support plane; a clearly
/// positive value witnesses that none of the sampled directions supports the
/// patch. Directions are a Fibonacci sphere of `n_dirs` points plus the
/// normalized facet normals and their pairwise sums, which cover the cone
/// candidates without consulting the LP.
pub fn sampled_support_margin(patch: &BoundaryNodePatch, n_dirs: usize) -> f64 {
    let mut dirs = fibonacci_sphere(n_dirs);
    let normals = patch.facet_normals();
    for (a, na) in normals.iter().enumerate() {
        if na.norm() > 0.0 {
            dirs.push(na.normalize());
        }
        for nb in normals.iter().skip(a + 1) {
            let s = na + nb;
            if s.norm() > 0.0 {
                dirs.push(s.normalize());
            }
        }
    }
    let sum: Vec3 = normals.iter().sum();
    if sum.norm() > 0.0 {
        dirs.push(sum.normalize());
    }

    let mut best = f64::INFINITY;
    for v in dirs {
        let mut worst = f64::NEG_INFINITY;
        for zi in &patch.ring_pos {
            worst = worst.max((zi - patch.center_pos).dot(&v));
        }
        best = best.min(worst);
    }
    best
}

/// Deterministic near-uniform unit directions.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - y * y).sqrt();
            let th = golden * i as f64;
            Vec3::new(r * th.cos(), y, r * th.sin())
        })
        .collect()
}
