//! Garment deformation networks over virtual bones.
//!
//! Two recurrent stages predict loose-garment motion from body motion
//! alone. The low-frequency stage maps the pose to virtual-bone transforms
//! (rotations decoded through a 6D continuous representation) and skins
//! the garment with them; the high-frequency stage runs edge convolutions
//! over that coarse mesh, fuses in a global motion feature, and adds fine
//! displacement. Both train by truncated backpropagation through time on
//! simulated sequences, and a trained pair ships as a directory bundle.

mod bundle;
mod config;
mod encode;
mod error;
mod hf;
mod infer;
mod lf;
mod loss;
mod train;

pub use bundle::{ModelBundle, HF_FILE, LF_FILE, MANIFEST_FILE, RIG_FILE};
pub use config::{NetSizes, TrainConfig};
pub use encode::{laplacian_operator, pose_input, tracks_input, BONE_INPUT_DIM, POSE_INPUT_DIM};
pub use error::MotionError;
pub use hf::HighFreqNet;
pub use infer::{InferenceState, Predictor};
pub use lf::{lf_forward, LowFreqNet};
pub use loss::{collision_energy, hf_frame_loss, lf_frame_loss, mean_euclidean, penetration};
pub use train::{train_hf, train_lf, TrainReport};
