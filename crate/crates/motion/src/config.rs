use serde::{Deserialize, Serialize};

use crate::MotionError;

/// Layer widths for both networks. These are architecture constants baked
/// into a trained bundle; change them only before training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSizes {
    /// Hidden size of the low-frequency GRU.
    pub lf_hidden: usize,
    /// Hidden size of the high-frequency global GRU.
    pub hf_global_hidden: usize,
    /// Width of the per-vertex projection of the global hidden state.
    pub global_feature: usize,
    /// Output channels of the three stacked EdgeConv layers.
    pub edgeconv_widths: [usize; 3],
    /// Hidden widths of the fusion MLP (its input is the concatenated
    /// local + global features, its output is a 3D displacement).
    pub fusion_hidden: [usize; 2],
}

impl Default for NetSizes {
    fn default() -> Self {
        NetSizes {
            lf_hidden: 256,
            hf_global_hidden: 128,
            global_feature: 64,
            edgeconv_widths: [32, 64, 128],
            fusion_hidden: [128, 64],
        }
    }
}

impl NetSizes {
    /// A small preset for tests and quick experiments.
    pub fn tiny() -> Self {
        NetSizes {
            lf_hidden: 16,
            hf_global_hidden: 12,
            global_feature: 8,
            edgeconv_widths: [6, 8, 10],
            fusion_hidden: [12, 8],
        }
    }

    pub fn validate(&self) -> Result<(), MotionError> {
        let all = [
            self.lf_hidden,
            self.hf_global_hidden,
            self.global_feature,
            self.edgeconv_widths[0],
            self.edgeconv_widths[1],
            self.edgeconv_widths[2],
            self.fusion_hidden[0],
            self.fusion_hidden[1],
        ];
        if all.iter().any(|&s| s == 0) {
            return Err(MotionError::Config("layer widths must be nonzero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda_laplacian: f64,
    pub lambda_collision: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Truncated-backpropagation chunk length in frames; hidden state is
    /// carried across chunk boundaries but detached.
    pub chunk: usize,
    pub seed: u64,
    pub sizes: NetSizes,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda_laplacian: 1.0,
            lambda_collision: 10.0,
            learning_rate: 1e-3,
            epochs: 50,
            chunk: 30,
            seed: 0,
            sizes: NetSizes::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), MotionError> {
        if self.lambda_laplacian < 0.0 || !self.lambda_laplacian.is_finite() {
            return Err(MotionError::Config(format!(
                "lambda_laplacian {} must be finite and >= 0",
                self.lambda_laplacian
            )));
        }
        if self.lambda_collision < 0.0 || !self.lambda_collision.is_finite() {
            return Err(MotionError::Config(format!(
                "lambda_collision {} must be finite and >= 0",
                self.lambda_collision
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(MotionError::Config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.chunk == 0 {
            return Err(MotionError::Config("chunk length must be >= 1".into()));
        }
        self.sizes.validate()
    }
}
