use crate::{MeshError, Vec3};

/// A fixed-topology triangle mesh: rest positions plus a face list.
///
/// Construction validates that every face index is in range and that no
/// face repeats a vertex. Duplicate faces are allowed here and reported
/// when the adjacency is built.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    rest_positions: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
}

impl Mesh {
    pub fn new(rest_positions: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        let vertex_count = rest_positions.len();
        for (fi, face) in faces.iter().enumerate() {
            for &index in face {
                if index as usize >= vertex_count {
                    return Err(MeshError::FaceIndexOutOfRange {
                        face: fi,
                        index,
                        vertex_count,
                    });
                }
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(MeshError::DegenerateFace {
                    face: fi,
                    indices: *face,
                });
            }
        }
        Ok(Mesh {
            rest_positions,
            faces,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.rest_positions.len()
    }

    pub fn rest_positions(&self) -> &[Vec3] {
        &self.rest_positions
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    /// Undirected edge list, each edge once with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut edges = Vec::with_capacity(self.faces.len() * 3);
        for face in &self.faces {
            for k in 0..3 {
                let a = face[k];
                let b = face[(k + 1) % 3];
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Diagonal of the axis-aligned bounding box of the rest positions.
    pub fn bounding_box_diagonal(&self) -> f64 {
        bounding_box_diagonal(&self.rest_positions)
    }
}

/// Diagonal length of the AABB of a point set (0 for an empty set).
pub(crate) fn bounding_box_diagonal(points: &[Vec3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (hi - lo).norm()
}

/// Per-vertex neighbor lists derived from the face list.
///
/// Neighbor lists are symmetric and sorted ascending, so traversal order
/// is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    neighbors: Vec<Vec<u32>>,
}

impl Adjacency {
    /// Builds vertex adjacency from the mesh faces.
    ///
    /// Duplicate faces (same vertex set) are deduplicated with a warning;
    /// they do not affect the neighbor lists.
    pub fn build(mesh: &Mesh) -> Adjacency {
        let mut seen = std::collections::BTreeSet::new();
        let mut duplicates = 0usize;
        let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); mesh.vertex_count()];
        for face in mesh.faces() {
            let mut key = *face;
            key.sort_unstable();
            if !seen.insert(key) {
                duplicates += 1;
                continue;
            }
            for k in 0..3 {
                let a = face[k];
                let b = face[(k + 1) % 3];
                neighbors[a as usize].push(b);
                neighbors[b as usize].push(a);
            }
        }
        if duplicates > 0 {
            log::warn!("adjacency: deduplicated {duplicates} duplicate face(s)");
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Adjacency { neighbors }
    }

    pub fn vertex_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, vertex: usize) -> &[u32] {
        &self.neighbors[vertex]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.neighbors.iter().map(|n| n.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn rejects_out_of_range_face_index() {
        let err = Mesh::new(vec![v(0.0, 0.0, 0.0); 3], vec![[0, 1, 3]]).unwrap_err();
        assert!(matches!(err, MeshError::FaceIndexOutOfRange { index: 3, .. }));
    }

    #[test]
    fn rejects_degenerate_face() {
        let err = Mesh::new(vec![v(0.0, 0.0, 0.0); 3], vec![[0, 1, 1]]).unwrap_err();
        assert!(matches!(err, MeshError::DegenerateFace { .. }));
    }

    #[test]
    fn single_triangle_neighbors() {
        let mesh = Mesh::new(
            vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let adj = Adjacency::build(&mesh);
        assert_eq!(adj.neighbors(0), &[1, 2]);
        assert_eq!(adj.neighbors(1), &[0, 2]);
        assert_eq!(adj.neighbors(2), &[0, 1]);
    }

    #[test]
    fn two_triangles_sharing_edge() {
        let mesh = Mesh::new(
            vec![
                v(0.0, 0.0, 0.0),
                v(1.0, 0.0, 0.0),
                v(0.0, 1.0, 0.0),
                v(1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap();
        let adj = Adjacency::build(&mesh);
        assert_eq!(adj.neighbors(1).len(), 3);
        assert_eq!(adj.neighbors(2).len(), 3);
        assert_eq!(adj.neighbors(0).len(), 2);
        assert_eq!(adj.neighbors(3).len(), 2);
    }

    #[test]
    fn duplicate_faces_are_deduplicated() {
        let mesh = Mesh::new(
            vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)],
            vec![[0, 1, 2], [2, 0, 1]],
        )
        .unwrap();
        let adj = Adjacency::build(&mesh);
        assert_eq!(adj.neighbors(0), &[1, 2]);
    }

    #[test]
    fn adjacency_is_symmetric() {
        let mesh = shapes::icosphere(1);
        let adj = Adjacency::build(&mesh);
        for (i, list) in adj.iter().enumerate() {
            for &j in list {
                assert!(adj.neighbors(j as usize).contains(&(i as u32)));
            }
        }
    }

    #[test]
    fn icosphere_level1_valence_is_5_or_6() {
        // Midpoint subdivision keeps the 12 valence-5 icosahedron vertices and
        // adds valence-6 edge midpoints.
        let mesh = shapes::icosphere(1);
        assert_eq!(mesh.vertex_count(), 42);
        let adj = Adjacency::build(&mesh);
        let mut valence5 = 0;
        for list in adj.iter() {
            assert!(list.len() == 5 || list.len() == 6, "valence {}", list.len());
            if list.len() == 5 {
                valence5 += 1;
            }
        }
        assert_eq!(valence5, 12);
    }
}
