//! Shape-quality report for a mesh: worst element volume, volume ratio
//! against the regular tetrahedron, minimum dihedral angle, and h.

use super::TetMesh;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshQuality {
    /// Smallest signed element volume.
    pub min_volume: f64,
    /// Smallest ratio of element volume to the volume of the regular tet
    /// with the same RMS edge length (1 for regular, -> 0 for slivers).
    pub min_volume_ratio: f64,
    /// Smallest dihedral angle over all elements, degrees.
    pub min_dihedral_deg: f64,
    /// Maximal element diameter.
    pub h: f64,
}

/// Pure report over all elements.
pub fn mesh_quality(mesh: &TetMesh) -> MeshQuality {
    let mut min_volume = f64::INFINITY;
    let mut min_ratio = f64::INFINITY;
    let mut min_dihedral = f64::INFINITY;
    for (t, tet) in mesh.tets().iter().enumerate() {
        let p: Vec<Vec3> = tet.iter().map(|&v| mesh.vertices()[v]).collect();
        let vol = mesh.tet_volume(t);
        min_volume = min_volume.min(vol);

        let mut sq = 0.0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                sq += (p[i] - p[j]).norm_squared();
            }
        }
        let rms = (sq / 6.0).sqrt();
        // Regular tet of edge a has volume a^3 / (6 sqrt 2).
        let reg = rms.powi(3) / (6.0 * 2.0_f64.sqrt());
        min_ratio = min_ratio.min(vol / reg);

        min_dihedral = min_dihedral.min(min_dihedral_angle(&p));
    }
    MeshQuality {
        min_volume,
        min_volume_ratio: min_ratio,
        min_dihedral_deg: min_dihedral.to_degrees(),
        h: mesh.h(),
    }
}

/// Minimum of the six dihedral angles of a tet (radians).
fn min_dihedral_angle(p: &[Vec3]) -> f64 {
    // Outward normal of the face opposite vertex k.
    let face_normal = |k: usize| -> Vec3 {
        let others: Vec<usize> = (0..4).filter(|&i| i != k).collect();
        let n = (p[others[1]] - p[others[0]]).cross(&(p[others[2]] - p[others[0]]));
        // Orient away from p[k].
        if (p[k] - p[others[0]]).dot(&n) > 0.0 {
            -n
        } else {
            n
        }
    };
    let normals: Vec<Vec3> = (0..4).map(face_normal).collect();
    let mut min = f64::INFINITY;
    for a in 0..4 {
        for b in (a + 1)..4 {
            // Faces a and b share an edge; dihedral from outward normals.
            let c = -normals[a].dot(&normals[b]) / (normals[a].norm() * normals[b].norm());
            min = min.min(c.clamp(-1.0, 1.0).acos());
        }
    }
    min
}
