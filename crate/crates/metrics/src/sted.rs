//! Spatio-temporal edge difference.
//!
//! The spatial half compares edge lengths relative to ground truth; the
//! temporal half compares frame-to-frame per-vertex displacement
//! magnitudes. Ground truth normalizes the spatial term, so the metric is
//! deliberately asymmetric in its arguments.

use std::collections::BTreeSet;

use vb_mesh::AnimSequence;

use crate::error::check_same;
use crate::MetricsError;

/// Breakdown of an STED evaluation; [`Sted::total`] is the reported value.
#[derive(Debug, Clone, Copy)]
pub struct Sted {
    pub spatial: f64,
    pub temporal: f64,
    pub coupling: f64,
    /// Distinct edges skipped because their ground-truth length was zero.
    pub skipped_edges: usize,
}

impl Sted {
    pub fn total(&self) -> f64 {
        self.spatial + self.coupling * self.temporal
    }
}

pub const DEFAULT_COUPLING: f64 = 1.0;

pub fn sted(
    pred: &AnimSequence,
    truth: &AnimSequence,
    edges: &[(u32, u32)],
    coupling: f64,
) -> Result<Sted, MetricsError> {
    check_same("vertex count", pred.vertex_count(), truth.vertex_count())?;
    check_same("frame count", pred.frame_count(), truth.frame_count())?;
    let v = pred.vertex_count();
    for &(a, b) in edges {
        if a as usize >= v || b as usize >= v {
            return Err(MetricsError::BadEdge(a, b));
        }
    }

    let mut spatial_acc = 0.0;
    let mut spatial_n = 0usize;
    let mut skipped = BTreeSet::new();
    for f in 0..pred.frame_count() {
        let (pf, tf) = (pred.frame(f), truth.frame(f));
        for (e, &(a, b)) in edges.iter().enumerate() {
            let (a, b) = (a as usize, b as usize);
            let lt = (tf[a] - tf[b]).norm();
            if lt <= 1e-12 {
                skipped.insert(e);
                continue;
            }
            let lp = (pf[a] - pf[b]).norm();
            let rel = (lp - lt) / lt;
            spatial_acc += rel * rel;
            spatial_n += 1;
        }
    }
    if !skipped.is_empty() {
        log::warn!(
            "sted: skipped {} edge(s) with zero ground-truth length",
            skipped.len()
        );
    }
    let spatial = (spatial_acc / spatial_n.max(1) as f64).sqrt();

    let mut temporal_acc = 0.0;
    let mut temporal_n = 0usize;
    for f in 1..pred.frame_count() {
        let (p0, p1) = (pred.frame(f - 1), pred.frame(f));
        let (t0, t1) = (truth.frame(f - 1), truth.frame(f));
        for i in 0..v {
            let dp = (p1[i] - p0[i]).norm();
            let dt = (t1[i] - t0[i]).norm();
            temporal_acc += (dp - dt) * (dp - dt);
            temporal_n += 1;
        }
    }
    let temporal = (temporal_acc / temporal_n.max(1) as f64).sqrt();

    Ok(Sted {
        spatial,
        temporal,
        coupling,
        skipped_edges: skipped.len(),
    })
}
