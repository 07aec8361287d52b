//! RMSE and Hausdorff distance. Geometry is in meters; results in mm.

use std::collections::HashMap;

use vb_mesh::{AnimSequence, Vec3};

use crate::error::check_same;
use crate::MetricsError;

pub(crate) const M_TO_MM: f64 = 1000.0;

/// Root mean squared per-vertex Euclidean error over all frames, in mm.
pub fn rmse(pred: &AnimSequence, truth: &AnimSequence) -> Result<f64, MetricsError> {
    check_same("vertex count", pred.vertex_count(), truth.vertex_count())?;
    check_same("frame count", pred.frame_count(), truth.frame_count())?;
    let mut acc = 0.0;
    let mut n = 0usize;
    for f in 0..pred.frame_count() {
        for (p, t) in pred.frame(f).iter().zip(truth.frame(f)) {
            acc += (p - t).norm_squared();
            n += 1;
        }
    }
    Ok((acc / n.max(1) as f64).sqrt() * M_TO_MM)
}

/// Symmetric vertex-set Hausdorff distance between two frames, in mm.
/// Grid-accelerated; see [`hausdorff_frames_brute`] for the O(V²) oracle.
pub fn hausdorff_frames(a: &[Vec3], b: &[Vec3]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let grid_b = PointGrid::build(b);
    let grid_a = PointGrid::build(a);
    let ab = a
        .iter()
        .map(|p| grid_b.nearest_distance(p))
        .fold(0.0, f64::max);
    let ba = b
        .iter()
        .map(|p| grid_a.nearest_distance(p))
        .fold(0.0, f64::max);
    Ok(ab.max(ba) * M_TO_MM)
}

/// Reference implementation used to validate the accelerated one.
pub fn hausdorff_frames_brute(a: &[Vec3], b: &[Vec3]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let directed = |from: &[Vec3], to: &[Vec3]| {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| (p - q).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)) * M_TO_MM)
}

/// Sequence-level Hausdorff: mean of the per-frame values, in mm.
pub fn hausdorff(pred: &AnimSequence, truth: &AnimSequence) -> Result<f64, MetricsError> {
    check_same("frame count", pred.frame_count(), truth.frame_count())?;
    let mut acc = 0.0;
    for f in 0..pred.frame_count() {
        acc += hausdorff_frames(pred.frame(f), truth.frame(f))?;
    }
    Ok(acc / pred.frame_count().max(1) as f64)
}

/// Uniform hash grid over a point set for nearest-distance queries.
struct PointGrid {
    cell: f64,
    origin: Vec3,
    cells: HashMap<(i32, i32, i32), Vec<Vec3>>,
    max_ring: i32,
    points: Vec<Vec3>,
}

impl PointGrid {
    fn build(points: &[Vec3]) -> Self {
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let diag = (hi - lo).norm();
        // Aim for ~1 point per cell on uniform data; degenerate spans
        // (all points coincident) fall back to a single cell.
        let cell = (diag / (points.len() as f64).cbrt()).max(1e-9);
        let mut cells: HashMap<(i32, i32, i32), Vec<Vec3>> = HashMap::new();
        let key = |p: &Vec3| {
            (
                ((p.x - lo.x) / cell).floor() as i32,
                ((p.y - lo.y) / cell).floor() as i32,
                ((p.z - lo.z) / cell).floor() as i32,
            )
        };
        let mut max_ring = 0;
        for p in points {
            let k = key(p);
            max_ring = max_ring.max(k.0.max(k.1).max(k.2));
            cells.entry(k).or_default().push(*p);
        }
        PointGrid {
            cell,
            origin: lo,
            cells,
            max_ring: max_ring + 1,
            points: points.to_vec(),
        }
    }

    fn nearest_distance(&self, q: &Vec3) -> f64 {
        let cx = ((q.x - self.origin.x) / self.cell).floor() as i32;
        let cy = ((q.y - self.origin.y) / self.cell).floor() as i32;
        let cz = ((q.z - self.origin.z) / self.cell).floor() as i32;
        let mut best = f64::INFINITY;
        let mut ring = 0i32;
        loop {
            // Every cell in ring k is at least (k-1)·cell away from q's
            // cell, so once best is inside that bound we are done.
            if ring > 0 && best.is_finite() && (ring - 1) as f64 * self.cell > best {
                return best;
            }
            if ring > self.max_ring * 2 + 2 {
                break;
            }
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        if let Some(bucket) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                            for p in bucket {
                                best = best.min((p - q).norm());
                            }
                        }
                    }
                }
            }
            ring += 1;
        }
        if best.is_finite() {
            best
        } else {
            // The query sits far outside the grid; scan directly.
            self.points
                .iter()
                .map(|p| (p - q).norm())
                .fold(f64::INFINITY, f64::min)
        }
    }
}
