//! Aggregated evaluation results.

use serde::{Deserialize, Serialize};
use vb_mesh::{AnimSequence, Vec3};

use crate::{hausdorff, per_vertex_error_map, rmse, sted, MetricsError};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub rmse_mm: f64,
    pub hausdorff_mm: f64,
    pub sted: f64,
    pub sted_spatial: f64,
    pub sted_temporal: f64,
    pub per_vertex_mean_error_mm: Vec<f64>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned two-column text table for terminal output.
    pub fn table(&self) -> String {
        let worst = self
            .per_vertex_mean_error_mm
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        let rows = [
            ("rmse", format!("{:.4} mm", self.rmse_mm)),
            ("hausdorff", format!("{:.4} mm", self.hausdorff_mm)),
            ("sted", format!("{:.6}", self.sted)),
            ("  spatial", format!("{:.6}", self.sted_spatial)),
            ("  temporal", format!("{:.6}", self.sted_temporal)),
            ("worst vertex", format!("{worst:.4} mm")),
        ];
        let name_width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
        let value_width = rows.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (name, value) in rows {
            out.push_str(&format!("{name:<name_width$}  {value:>value_width$}\n"));
        }
        out
    }
}

/// Runs every metric over a prediction/ground-truth pair.
pub fn evaluate(
    pred: &AnimSequence,
    truth: &AnimSequence,
    edges: &[(u32, u32)],
    coupling: f64,
) -> Result<EvalReport, MetricsError> {
    let rmse_mm = rmse(pred, truth)?;
    let hausdorff_mm = hausdorff(pred, truth)?;
    if rmse_mm > hausdorff_mm + 1e-9 {
        // Possible only when predictions are so far off that the nearest
        // ground-truth vertex is not the corresponding one.
        log::warn!("rmse {rmse_mm:.3} mm exceeds hausdorff {hausdorff_mm:.3} mm");
    }
    let sted = sted(pred, truth, edges, coupling)?;
    Ok(EvalReport {
        rmse_mm,
        hausdorff_mm,
        sted: sted.total(),
        sted_spatial: sted.spatial,
        sted_temporal: sted.temporal,
        per_vertex_mean_error_mm: per_vertex_error_map(pred, truth)?,
    })
}

/// The static baseline: the same vertex positions repeated every frame.
pub fn constant_sequence(
    positions: &[Vec3],
    frame_count: usize,
    frame_rate: f64,
) -> AnimSequence {
    let frames = vec![positions.to_vec(); frame_count];
    AnimSequence::new(frames, frame_rate).expect("constant frames are consistent")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_pair() -> (AnimSequence, AnimSequence) {
        let truth = AnimSequence::new(
            vec![vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)]; 2],
            30.0,
        )
        .unwrap();
        let pred = AnimSequence::new(
            vec![
                vec![Vec3::new(0.003, 0.0, 0.0), Vec3::new(1.003, 0.0, 0.0)],
                vec![Vec3::new(0.003, 0.0, 0.0), Vec3::new(1.003, 0.0, 0.0)],
            ],
            30.0,
        )
        .unwrap();
        (pred, truth)
    }

    #[test]
    fn translation_report_hits_known_values() {
        let (pred, truth) = tiny_pair();
        let report = evaluate(&pred, &truth, &[(0, 1)], 1.0).unwrap();
        assert!((report.rmse_mm - 3.0).abs() < 1e-9);
        assert!((report.hausdorff_mm - 3.0).abs() < 1e-9);
        assert!(report.sted.abs() < 1e-12);
        assert!(report.per_vertex_mean_error_mm.iter().all(|&e| (e - 3.0).abs() < 1e-9));
    }

    #[test]
    fn json_round_trips_and_table_aligns() {
        let (pred, truth) = tiny_pair();
        let report = evaluate(&pred, &truth, &[(0, 1)], 1.0).unwrap();
        let back: EvalReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);

        let table = report.table();
        let widths: Vec<usize> = table.lines().map(str::len).collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]), "{table}");
        assert!(table.contains("rmse") && table.contains("mm"));
    }

    #[test]
    fn constant_sequence_is_a_static_baseline() {
        let pts = vec![Vec3::new(0.1, 0.2, 0.3)];
        let s = constant_sequence(&pts, 5, 60.0);
        assert_eq!(s.frame_count(), 5);
        assert_eq!(s.frame(4), &pts[..]);
    }
}
