//! Minimal reverse-mode autodiff engine and the neural building blocks
//! used by the deformation networks: dense layers, GRU cells, EdgeConv
//! graph convolutions, differentiable linear blend skinning, and Adam.
//!
//! Everything is 64-bit and single-threaded by design: graphs are small
//! (hundreds of vertices, dozens of bones), so clarity and checkable
//! gradients beat throughput. See [`Tape`] for the execution model and
//! [`ParameterSet`] for how parameters move between training steps.

mod error;
mod gradcheck;
mod nn;
mod optim;
mod params;
mod tape;
mod tensor;

pub use error::AutodiffError;
pub use gradcheck::{gradient_check, op_check_cases, OpCheck, DEFAULT_STEP};
pub use nn::{edge_conv, orthogonal, scaled_uniform, Dense, EdgeIndex, GruCell, Mlp};
pub use optim::{Adam, AdamState};
pub use params::{ParameterSet, VarMap};
pub use tape::{Sparse, Tape, Var, SQRT_GUARD};
pub use tensor::Tensor;
