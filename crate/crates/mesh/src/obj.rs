//! Wavefront OBJ import/export, triangles only.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::{Mesh, MeshError, Vec3};

/// Loads a triangle mesh from an OBJ file.
///
/// Only `v` and `f` records are honored; normals, texture coordinates and
/// groups are skipped. Faces must be triangles (quads and larger polygons
/// are rejected) and indices must be positive 1-based references.
pub fn read_mesh(path: &Path) -> Result<Mesh, MeshError> {
    let file = std::fs::File::open(path).map_err(|e| MeshError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut positions: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let parse_err = |line: usize, message: String| MeshError::ObjParse {
        path: path.display().to_string(),
        line,
        message,
    };

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| MeshError::io(path, e))?;
        let lineno = lineno + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| parse_err(lineno, "vertex needs 3 coordinates".into()))?;
                    *c = tok
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad coordinate '{tok}'")))?;
                }
                positions.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let verts: Vec<&str> = tokens.collect();
                if verts.len() != 3 {
                    return Err(parse_err(
                        lineno,
                        format!("only triangular faces are supported, got {} vertices", verts.len()),
                    ));
                }
                let mut face = [0u32; 3];
                for (k, v) in verts.iter().enumerate() {
                    // "i", "i/t", "i/t/n", "i//n" all start with the index.
                    let idx_tok = v.split('/').next().unwrap_or("");
                    let idx: i64 = idx_tok
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad face index '{v}'")))?;
                    if idx <= 0 {
                        return Err(parse_err(
                            lineno,
                            format!("face index must be positive, got {idx}"),
                        ));
                    }
                    face[k] = (idx - 1) as u32;
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    Mesh::new(positions, faces)
}

/// Writes a mesh as OBJ. Optional per-vertex colors are appended to the
/// `v` records (the common r g b extension).
pub fn write_mesh(path: &Path, mesh: &Mesh, colors: Option<&[[f32; 3]]>) -> Result<(), MeshError> {
    if let Some(c) = colors {
        assert_eq!(c.len(), mesh.vertex_count());
    }
    let mut out = std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| MeshError::io(path, e))?,
    );
    let write = |out: &mut dyn Write| -> std::io::Result<()> {
        for (i, p) in mesh.rest_positions().iter().enumerate() {
            match colors {
                Some(c) => writeln!(
                    out,
                    "v {} {} {} {} {} {}",
                    p.x, p.y, p.z, c[i][0], c[i][1], c[i][2]
                )?,
                None => writeln!(out, "v {} {} {}", p.x, p.y, p.z)?,
            }
        }
        for f in mesh.faces() {
            writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
        Ok(())
    };
    write(&mut out).map_err(|e| MeshError::io(path, e))
}
