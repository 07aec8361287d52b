//! Material-space ensembling of garment predictors.
//!
//! A single trained network is tied to the simulation parameters of its
//! training data. To cover a parameter range, a small set of pivot
//! networks is trained at chosen parameter points and predictions are
//! blended with RBF weights computed in a learned latent space over
//! (bending stiffness, mass density, timescale). The crate provides the
//! kernel, pivot selection, kernel calibration, and a persistent bank of
//! pivot bundles.

mod bank;
mod blend;
mod error;
mod fit;
mod kernel;
mod select;

pub use bank::{PivotBank, PivotEntry, BANK_FILE, KERNEL_FILE};
pub use blend::{blend_sequences, BlendWeights};
pub use error::EnsembleError;
pub use fit::{fit_kernel, CalibrationCase, FitReport, KernelFitConfig};
pub use kernel::{
    median_pairwise_distance, rbf_weights, Kernel, Standardization, LOG_SHIFT, LOG_SIGMA_NAME,
};
pub use select::select_pivots;
