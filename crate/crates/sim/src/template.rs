//! Garment templates: a mesh, its pinned attachment ring, and the rest
//! quantities the solver constrains (edge lengths, dihedral angles).
//! Skirt and dress meshes are generated procedurally so no assets ship
//! with the repository.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use vb_mesh::{Mesh, Vec3};

use crate::body::JOINT_COUNT;
use crate::SimError;

/// An interior edge with its two opposite vertices and rest dihedral.
#[derive(Debug, Clone, Copy)]
pub struct BendElement {
    pub edge: [u32; 2],
    pub opposite: [u32; 2],
    pub rest_angle: f64,
}

#[derive(Debug, Clone)]
pub struct GarmentTemplate {
    pub mesh: Mesh,
    /// Vertices rigidly attached to the body (e.g. a waistband ring);
    /// may be empty for free-flying cloth.
    pub pinned_vertices: Vec<usize>,
    /// Skeleton joint whose frame the pinned vertices follow.
    pub attachment_joint: usize,
    pub edges: Vec<[u32; 2]>,
    pub rest_edge_lengths: Vec<f64>,
    pub bend_elements: Vec<BendElement>,
}

/// Dihedral angle at the edge (p1, p2) with opposite vertices p3 and p4:
/// the angle between the two triangle normals, in [0, π]. A flat sheet with
/// opposite-side winding sits at π.
pub(crate) fn dihedral_angle(p1: &Vec3, p2: &Vec3, p3: &Vec3, p4: &Vec3) -> f64 {
    let e = p2 - p1;
    let n1 = e.cross(&(p3 - p1));
    let n2 = e.cross(&(p4 - p1));
    let l1 = n1.norm();
    let l2 = n2.norm();
    if l1 < 1e-12 || l2 < 1e-12 {
        return std::f64::consts::PI;
    }
    (n1.dot(&n2) / (l1 * l2)).clamp(-1.0, 1.0).acos()
}

impl GarmentTemplate {
    pub fn new(
        mesh: Mesh,
        mut pinned_vertices: Vec<usize>,
        attachment_joint: usize,
    ) -> Result<Self, SimError> {
        let v = mesh.vertex_count();
        pinned_vertices.sort_unstable();
        pinned_vertices.dedup();
        if let Some(&p) = pinned_vertices.iter().find(|&&p| p >= v) {
            return Err(SimError::BadTemplate(format!(
                "pinned vertex {p} out of range ({v} vertices)"
            )));
        }
        if attachment_joint >= JOINT_COUNT {
            return Err(SimError::BadTemplate(format!(
                "attachment joint {attachment_joint} out of range"
            )));
        }

        let pos = mesh.rest_positions();
        let edges: Vec<[u32; 2]> = mesh.edges().iter().map(|&(a, b)| [a, b]).collect();
        let rest_edge_lengths = edges
            .iter()
            .map(|&[a, b]| (pos[a as usize] - pos[b as usize]).norm())
            .collect();

        // Opposite vertices per edge, in face-iteration order; interior
        // edges (exactly two incident faces) become bending elements.
        let mut across: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
        for face in mesh.faces() {
            for k in 0..3 {
                let a = face[k];
                let b = face[(k + 1) % 3];
                let c = face[(k + 2) % 3];
                across.entry((a.min(b), a.max(b))).or_default().push(c);
            }
        }
        let bend_elements = across
            .iter()
            .filter(|(_, opp)| opp.len() == 2)
            .map(|(&(a, b), opp)| BendElement {
                edge: [a, b],
                opposite: [opp[0], opp[1]],
                rest_angle: dihedral_angle(
                    &pos[a as usize],
                    &pos[b as usize],
                    &pos[opp[0] as usize],
                    &pos[opp[1] as usize],
                ),
            })
            .collect();

        Ok(GarmentTemplate {
            mesh,
            pinned_vertices,
            attachment_joint,
            edges,
            rest_edge_lengths,
            bend_elements,
        })
    }
}

/// Builds a ring-grid tube: `rows` rings of `radial` vertices each, radius
/// and height interpolated ring by ring, wrapped and triangulated.
fn tube(
    radial: usize,
    rows: usize,
    y_top: f64,
    y_bottom: f64,
    r_top: f64,
    r_bottom: f64,
) -> Result<Mesh, SimError> {
    if radial < 3 || rows < 2 {
        return Err(SimError::BadTemplate(format!(
            "tube needs radial >= 3 and rows >= 2, got {radial}x{rows}"
        )));
    }
    let mut positions = Vec::with_capacity(radial * rows);
    for r in 0..rows {
        let s = r as f64 / (rows - 1) as f64;
        let y = y_top + (y_bottom - y_top) * s;
        let radius = r_top + (r_bottom - r_top) * s;
        for i in 0..radial {
            let theta = TAU * i as f64 / radial as f64;
            positions.push(Vec3::new(radius * theta.cos(), y, radius * theta.sin()));
        }
    }
    let mut faces = Vec::with_capacity(2 * radial * (rows - 1));
    let idx = |r: usize, i: usize| (r * radial + i % radial) as u32;
    for r in 0..rows - 1 {
        for i in 0..radial {
            faces.push([idx(r, i), idx(r + 1, i), idx(r, i + 1)]);
            faces.push([idx(r, i + 1), idx(r + 1, i), idx(r + 1, i + 1)]);
        }
    }
    Mesh::new(positions, faces).map_err(SimError::Mesh)
}

/// Cylinder-ish skirt pinned at the waistband, hanging from the root.
/// The waist radius clears the pelvis capsule so the rigid ring never
/// intersects the body it is pinned to.
pub fn skirt_template(radial: usize, rows: usize) -> Result<GarmentTemplate, SimError> {
    let mesh = tube(radial, rows, 0.02, -0.55, 0.19, 0.27)?;
    GarmentTemplate::new(mesh, (0..radial).collect(), 0)
}

/// A-line dress pinned at a chest ring, following the chest joint.
pub fn dress_template(radial: usize, rows: usize) -> Result<GarmentTemplate, SimError> {
    let mesh = tube(radial, rows, 0.30, -0.50, 0.16, 0.38)?;
    GarmentTemplate::new(mesh, (0..radial).collect(), 2)
}

/// Serializable recipe for rebuilding a template (used by dataset
/// manifests so runs carry no mesh assets, only parameters).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GarmentSpec {
    Skirt { radial: usize, rows: usize },
    Dress { radial: usize, rows: usize },
}

impl GarmentSpec {
    pub fn skirt_default() -> Self {
        GarmentSpec::Skirt {
            radial: 24,
            rows: 20,
        }
    }

    pub fn dress_default() -> Self {
        GarmentSpec::Dress {
            radial: 32,
            rows: 30,
        }
    }

    pub fn build(&self) -> Result<GarmentTemplate, SimError> {
        match *self {
            GarmentSpec::Skirt { radial, rows } => skirt_template(radial, rows),
            GarmentSpec::Dress { radial, rows } => dress_template(radial, rows),
        }
    }
}
