use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("sequences differ: {field} is {pred} in prediction, {truth} in ground truth")]
    Mismatch {
        field: &'static str,
        pred: usize,
        truth: usize,
    },

    #[error("cannot take a distance to an empty vertex set")]
    EmptySet,

    #[error("edge ({0}, {1}) references a vertex outside the sequence")]
    BadEdge(u32, u32),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn check_same(
    field: &'static str,
    pred: usize,
    truth: usize,
) -> Result<(), MetricsError> {
    if pred != truth {
        return Err(MetricsError::Mismatch { field, pred, truth });
    }
    Ok(())
}
