//! Procedural test geometry: icospheres and flat grids.

use std::collections::HashMap;

use crate::{Mesh, Vec3};

/// Unit icosphere obtained by midpoint-subdividing an icosahedron
/// `subdivisions` times and projecting back to the unit sphere.
pub fn icosphere(subdivisions: usize) -> Mesh {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut positions: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();

    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next_faces = Vec::with_capacity(faces.len() * 4);
        for face in &faces {
            let mut mid = [0u32; 3];
            for k in 0..3 {
                let a = face[k];
                let b = face[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    let p = ((positions[a as usize] + positions[b as usize]) / 2.0).normalize();
                    positions.push(p);
                    (positions.len() - 1) as u32
                });
            }
            next_faces.push([face[0], mid[0], mid[2]]);
            next_faces.push([face[1], mid[1], mid[0]]);
            next_faces.push([face[2], mid[2], mid[1]]);
            next_faces.push(mid);
        }
        faces = next_faces;
    }

    Mesh::new(positions, faces).expect("icosphere construction is valid")
}

/// Flat triangulated grid in the XY plane: `nx` columns by `ny` rows of
/// vertices spaced `spacing` apart, centered on the origin.
pub fn grid(nx: usize, ny: usize, spacing: f64) -> Mesh {
    assert!(nx >= 2 && ny >= 2);
    let mut positions = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            positions.push(Vec3::new(
                (i as f64 - (nx - 1) as f64 / 2.0) * spacing,
                (j as f64 - (ny - 1) as f64 / 2.0) * spacing,
                0.0,
            ));
        }
    }
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let a = (j * nx + i) as u32;
            let b = (j * nx + i + 1) as u32;
            let c = ((j + 1) * nx + i) as u32;
            let d = ((j + 1) * nx + i + 1) as u32;
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    Mesh::new(positions, faces).expect("grid construction is valid")
}
