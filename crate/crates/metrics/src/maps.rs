//! Per-vertex diagnostic maps: prediction error and garment looseness.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use vb_mesh::{AnimSequence, Mesh, Vec3};

use crate::distance::M_TO_MM;
use crate::error::check_same;
use crate::MetricsError;

/// Mean Euclidean error per vertex across frames, in mm.
pub fn per_vertex_error_map(
    pred: &AnimSequence,
    truth: &AnimSequence,
) -> Result<Vec<f64>, MetricsError> {
    check_same("vertex count", pred.vertex_count(), truth.vertex_count())?;
    check_same("frame count", pred.frame_count(), truth.frame_count())?;
    let v = pred.vertex_count();
    let mut map = vec![0.0; v];
    for f in 0..pred.frame_count() {
        for (m, (p, t)) in map.iter_mut().zip(pred.frame(f).iter().zip(truth.frame(f))) {
            *m += (p - t).norm();
        }
    }
    let n = pred.frame_count().max(1) as f64;
    for m in &mut map {
        *m *= M_TO_MM / n;
    }
    Ok(map)
}

/// Per-vertex looseness: mean and standard deviation (over frames) of the
/// distance to the nearest body sample, in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Looseness {
    pub mean: f64,
    pub std: f64,
}

/// `body_frames[f]` holds the posed body surface samples at frame f.
pub fn looseness_map(
    garment: &AnimSequence,
    body_frames: &[Vec<Vec3>],
) -> Result<Vec<Looseness>, MetricsError> {
    check_same("frame count", garment.frame_count(), body_frames.len())?;
    if body_frames.iter().any(Vec::is_empty) {
        return Err(MetricsError::EmptySet);
    }
    let v = garment.vertex_count();
    let t = garment.frame_count();
    let mut sums = vec![0.0; v];
    let mut sq_sums = vec![0.0; v];
    for f in 0..t {
        let body = &body_frames[f];
        for (i, p) in garment.frame(f).iter().enumerate() {
            let d = body
                .iter()
                .map(|s| (p - s).norm())
                .fold(f64::INFINITY, f64::min)
                * M_TO_MM;
            sums[i] += d;
            sq_sums[i] += d * d;
        }
    }
    let n = t.max(1) as f64;
    Ok((0..v)
        .map(|i| {
            let mean = sums[i] / n;
            let var = (sq_sums[i] / n - mean * mean).max(0.0);
            Looseness {
                mean,
                std: var.sqrt(),
            }
        })
        .collect())
}

/// One `vertex_index,value_mm` row per vertex.
pub fn write_map_csv(path: &Path, map: &[f64]) -> Result<(), MetricsError> {
    let io = |source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "vertex,value_mm").map_err(io)?;
    for (i, v) in map.iter().enumerate() {
        writeln!(w, "{i},{v}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// OBJ with per-vertex colors (the common `v x y z r g b` extension),
/// values mapped to a blue-to-red ramp normalized by the map maximum.
pub fn write_map_obj(path: &Path, mesh: &Mesh, map: &[f64]) -> Result<(), MetricsError> {
    check_same("vertex count", mesh.vertex_count(), map.len())?;
    let io = |source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    };
    let peak = map.iter().cloned().fold(0.0, f64::max);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for (p, &value) in mesh.rest_positions().iter().zip(map) {
        let t = if peak > 0.0 { value / peak } else { 0.0 };
        writeln!(
            w,
            "v {} {} {} {:.4} {:.4} {:.4}",
            p.x,
            p.y,
            p.z,
            t,
            0.0,
            1.0 - t
        )
        .map_err(io)?;
    }
    for f in mesh.faces() {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).map_err(io)?;
    }
    w.flush().map_err(io)
}
