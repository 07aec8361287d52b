//! Evaluation metrics for predicted garment animation: RMSE, vertex-set
//! Hausdorff distance, spatio-temporal edge difference (STED), and
//! per-vertex error/looseness maps. Geometry is in meters; distances are
//! reported in millimeters.

mod distance;
mod error;
mod maps;
mod report;
mod sted;

pub use distance::{hausdorff, hausdorff_frames, hausdorff_frames_brute, rmse};
pub use error::MetricsError;
pub use maps::{looseness_map, per_vertex_error_map, write_map_csv, write_map_obj, Looseness};
pub use report::{constant_sequence, evaluate, EvalReport};
pub use sted::{sted, Sted, DEFAULT_COUPLING};
