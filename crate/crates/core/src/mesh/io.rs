//! Mesh file I/O: TetGen-style `.node`/`.ele` pairs and legacy ASCII VTK
//! unstructured-grid output.
//!
//! The text parsers are total: any byte sequence yields either a mesh or a
//! structured error naming the offending line. They are exercised directly
//! by the fuzz targets.

use super::{MeshError, TetMesh};
use crate::Vec3;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected {expected}, found {found} fields")]
    FieldCount {
        line: usize,
        expected: &'static str,
        found: usize,
    },
    #[error("line {line}: could not parse '{token}' as {wanted}")]
    Token {
        line: usize,
        token: String,
        wanted: &'static str,
    },
    #[error("line {line}: entry index {got} out of order (expected {expected})")]
    IndexOrder {
        line: usize,
        got: usize,
        expected: usize,
    },
    #[error("line {line}: vertex index {index} out of range ({num_vertices} vertices)")]
    VertexRange {
        line: usize,
        index: usize,
        num_vertices: usize,
    },
    #[error("header announces {announced} entries but {found} were found")]
    CountMismatch { announced: usize, found: usize },
}

/// Strip a '#' comment and surrounding whitespace.
fn clean(line: &str) -> &str {
    match line.find('#') {
        Some(k) => line[..k].trim(),
        None => line.trim(),
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, MeshIoError> {
    tok.parse::<f64>().map_err(|_| MeshIoError::Token {
        line,
        token: tok.to_string(),
        wanted: "a real number",
    })
}

fn parse_usize(tok: &str, line: usize) -> Result<usize, MeshIoError> {
    tok.parse::<usize>().map_err(|_| MeshIoError::Token {
        line,
        token: tok.to_string(),
        wanted: "a nonnegative integer",
    })
}

/// Does this first line look like a TetGen header rather than a data row?
/// Node headers are `<count> 3 [attrs] [markers]`, element headers
/// `<count> 4 [attrs]`; all fields integers.
fn looks_like_header(fields: &[&str], dim_field: usize, max_fields: usize) -> Option<usize> {
    if fields.len() < 2 || fields.len() > max_fields {
        return None;
    }
    let mut ints = Vec::new();
    for f in fields {
        ints.push(f.parse::<usize>().ok()?);
    }
    (ints[1] == dim_field).then_some(ints[0])
}

/// Parse `.node` text: `index x y z` per line, 0-based contiguous indices,
/// optional `<count> 3 ...` header, '#' comments.
pub fn parse_node_str(text: &str) -> Result<Vec<Vec3>, MeshIoError> {
    let mut vertices = Vec::new();
    let mut announced: Option<usize> = None;
    let mut first_data = true;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let body = clean(raw);
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if first_data {
            first_data = false;
            if let Some(count) = looks_like_header(&fields, 3, 4) {
                announced = Some(count);
                continue;
            }
        }
        if fields.len() != 4 {
            return Err(MeshIoError::FieldCount {
                line,
                expected: "4 (index x y z)",
                found: fields.len(),
            });
        }
        let idx = parse_usize(fields[0], line)?;
        if idx != vertices.len() {
            return Err(MeshIoError::IndexOrder {
                line,
                got: idx,
                expected: vertices.len(),
            });
        }
        vertices.push(Vec3::new(
            parse_f64(fields[1], line)?,
            parse_f64(fields[2], line)?,
            parse_f64(fields[3], line)?,
        ));
    }
    if let Some(a) = announced {
        if a != vertices.len() {
            return Err(MeshIoError::CountMismatch {
                announced: a,
                found: vertices.len(),
            });
        }
    }
    Ok(vertices)
}

/// Parse `.ele` text: `index v0 v1 v2 v3` per line, 0-based contiguous
/// indices, optional `<count> 4 ...` header, '#' comments.
pub fn parse_ele_str(text: &str, num_vertices: usize) -> Result<Vec<[usize; 4]>, MeshIoError> {
    let mut tets: Vec<[usize; 4]> = Vec::new();
    let mut announced: Option<usize> = None;
    let mut first_data = true;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let body = clean(raw);
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if first_data {
            first_data = false;
            if let Some(count) = looks_like_header(&fields, 4, 3) {
                announced = Some(count);
                continue;
            }
        }
        if fields.len() != 5 {
            return Err(MeshIoError::FieldCount {
                line,
                expected: "5 (index and 4 vertex ids)",
                found: fields.len(),
            });
        }
        let idx = parse_usize(fields[0], line)?;
        if idx != tets.len() {
            return Err(MeshIoError::IndexOrder {
                line,
                got: idx,
                expected: tets.len(),
            });
        }
        let mut tet = [0usize; 4];
        for (k, f) in fields[1..].iter().enumerate() {
            let v = parse_usize(f, line)?;
            if v >= num_vertices {
                return Err(MeshIoError::VertexRange {
                    line,
                    index: v,
                    num_vertices,
                });
            }
            tet[k] = v;
        }
        tets.push(tet);
    }
    if let Some(a) = announced {
        if a != tets.len() {
            return Err(MeshIoError::CountMismatch {
                announced: a,
                found: tets.len(),
            });
        }
    }
    Ok(tets)
}

/// Read a mesh from `<base>.node` and `<base>.ele`.
pub fn read_mesh(base: &Path) -> Result<TetMesh, MeshError> {
    let node_path = base.with_extension("node");
    let ele_path = base.with_extension("ele");
    let read = |p: &Path| -> Result<String, MeshIoError> {
        std::fs::read_to_string(p).map_err(|source| MeshIoError::File {
            path: p.display().to_string(),
            source,
        })
    };
    let vertices = parse_node_str(&read(&node_path)?)?;
    let tets = parse_ele_str(&read(&ele_path)?, vertices.len())?;
    TetMesh::new(vertices, tets)
}

/// Write `<base>.node` and `<base>.ele`. Coordinates use the shortest
/// round-trip decimal representation, so read(write(m)) is exact.
pub fn write_node_ele(mesh: &TetMesh, base: &Path) -> Result<(), MeshError> {
    let mut node = String::new();
    let _ = writeln!(node, "{} 3 0 0", mesh.num_vertices());
    for (i, v) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(node, "{} {} {} {}", i, v.x, v.y, v.z);
    }
    let mut ele = String::new();
    let _ = writeln!(ele, "{} 4 0", mesh.num_tets());
    for (i, t) in mesh.tets().iter().enumerate() {
        let _ = writeln!(ele, "{} {} {} {} {}", i, t[0], t[1], t[2], t[3]);
    }
    let write = |p: &Path, s: &str| -> Result<(), MeshIoError> {
        std::fs::write(p, s).map_err(|source| MeshIoError::File {
            path: p.display().to_string(),
            source,
        })
    };
    write(&base.with_extension("node"), &node)?;
    write(&base.with_extension("ele"), &ele)?;
    Ok(())
}

/// A named per-vertex field for VTK output.
#[derive(Debug, Clone)]
pub enum VtkField {
    Scalar { name: String, values: Vec<f64> },
    Vector { name: String, values: Vec<Vec3> },
}

/// Legacy ASCII VTK 3.0 unstructured grid (cell type 10) with POINT_DATA
/// blocks for the given fields.
pub fn write_vtk(mesh: &TetMesh, fields: &[VtkField], path: &Path) -> Result<(), MeshError> {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("cso tetrahedral mesh\n");
    s.push_str("ASCII\n");
    s.push_str("DATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.num_vertices());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", v.x, v.y, v.z);
    }
    let nt = mesh.num_tets();
    let _ = writeln!(s, "CELLS {} {}", nt, 5 * nt);
    for t in mesh.tets() {
        let _ = writeln!(s, "4 {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("10\n");
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.num_vertices());
        for f in fields {
            match f {
                VtkField::Scalar { name, values } => {
                    assert_eq!(values.len(), mesh.num_vertices(), "field {name}");
                    let _ = writeln!(s, "SCALARS {name} double 1");
                    s.push_str("LOOKUP_TABLE default\n");
                    for v in values {
                        let _ = writeln!(s, "{v}");
                    }
                }
                VtkField::Vector { name, values } => {
                    assert_eq!(values.len(), mesh.num_vertices(), "field {name}");
                    let _ = writeln!(s, "VECTORS {name} double");
                    for v in values {
                        let _ = writeln!(s, "{} {} {}", v.x, v.y, v.z);
                    }
                }
            }
        }
    }
    std::fs::write(path, s).map_err(|source| {
        MeshError::Io(MeshIoError::File {
            path: path.display().to_string(),
            source,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::reference_tet;

    #[test]
    fn node_ele_roundtrip_is_exact() {
        let m = reference_tet();
        let dir = std::env::temp_dir().join(format!("cso-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let base = dir.join("single");
        write_node_ele(&m, &base).unwrap();
        let back = read_mesh(&base).unwrap();
        assert_eq!(back.num_vertices(), m.num_vertices());
        assert_eq!(back.tets(), m.tets());
        for (a, b) in m.vertices().iter().zip(back.vertices()) {
            assert_eq!(a, b, "coordinates must round-trip exactly");
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn irrational_coordinates_roundtrip() {
        let m = TetMesh::new(
            vec![
                Vec3::new(1.0 / 3.0, 2.0_f64.sqrt(), -1e-17),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2, 3]],
        )
        .unwrap();
        let text = {
            let mut s = String::new();
            for (i, v) in m.vertices().iter().enumerate() {
                s.push_str(&format!("{} {} {} {}\n", i, v.x, v.y, v.z));
            }
            s
        };
        let parsed = parse_node_str(&text).unwrap();
        for (a, b) in m.vertices().iter().zip(&parsed) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn five_node_cell_row_is_an_error() {
        let text = "0 0 1 2 3 4\n";
        let err = parse_ele_str(text, 10).unwrap_err();
        match err {
            MeshIoError::FieldCount { line: 1, found: 6, .. } => {}
            other => panic!("expected field-count error, got {other}"),
        }
    }

    #[test]
    fn header_and_comments_are_accepted() {
        let node = "# comment\n4 3 0 0\n0 0 0 0\n1 1 0 0\n2 0 1 0 # inline\n3 0 0 1\n";
        let v = parse_node_str(node).unwrap();
        assert_eq!(v.len(), 4);
        let ele = "1 4 0\n0 0 1 2 3\n";
        let t = parse_ele_str(ele, 4).unwrap();
        assert_eq!(t, vec![[0, 1, 2, 3]]);
    }

    #[test]
    fn header_count_mismatch_is_reported() {
        let node = "5 3 0 0\n0 0 0 0\n";
        assert!(matches!(
            parse_node_str(node),
            Err(MeshIoError::CountMismatch { announced: 5, found: 1 })
        ));
    }

    #[test]
    fn vertex_out_of_range_names_the_line() {
        let ele = "0 0 1 2 9\n";
        match parse_ele_str(ele, 4).unwrap_err() {
            MeshIoError::VertexRange { line: 1, index: 9, .. } => {}
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn vtk_output_counts_match() {
        let m = reference_tet();
        let dir = std::env::temp_dir().join(format!("cso-vtk-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.vtk");
        let fields = vec![
            VtkField::Scalar {
                name: "u".into(),
                values: vec![0.0; 4],
            },
            VtkField::Vector {
                name: "V".into(),
                values: vec![Vec3::zeros(); 4],
            },
        ];
        write_vtk(&m, &fields, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("POINTS 4 double"));
        assert!(text.contains("CELLS 1 5"));
        assert!(text.contains("CELL_TYPES 1"));
        assert!(text.contains("SCALARS u double 1"));
        assert!(text.contains("VECTORS V double"));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn garbage_never_panics() {
        for text in ["", "a b c", "0 1", "0 x y z", "\u{0}\u{1}", "9999999 0 0 0"] {
            let _ = parse_node_str(text);
            let _ = parse_ele_str(text, 3);
        }
    }
}
