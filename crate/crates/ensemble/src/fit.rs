//! Kernel calibration. The latent map and bandwidth are tuned so that
//! RBF-blended pivot predictions match held-out simulations; only the
//! blend weights are differentiable, the pivot predictions enter as
//! constants.

use std::rc::Rc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vb_autodiff::{Adam, Tape, Tensor};
use vb_mesh::AnimSequence;
use vb_motion::mean_euclidean;
use vb_sim::SimParams;

use crate::kernel::{median_pairwise_distance, Kernel, Standardization};
use crate::EnsembleError;

/// One held-out simulation plus each pivot's prediction of it.
pub struct CalibrationCase {
    pub params: SimParams,
    pub truth: AnimSequence,
    pub pivot_predictions: Vec<AnimSequence>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelFitConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Initial bandwidth; defaults to the median pairwise distance
    /// between pivot latents.
    pub sigma: Option<f64>,
}

impl Default for KernelFitConfig {
    fn default() -> Self {
        KernelFitConfig {
            hidden: 8,
            epochs: 200,
            learning_rate: 1e-2,
            seed: 0,
            sigma: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub initial_sigma: f64,
    pub epoch_losses: Vec<f64>,
}

/// Stacks a sequence's pivot predictions as an [F·V·3, K] matrix so the
/// blend is one matrix–vector product with the weights.
fn prediction_matrix(predictions: &[AnimSequence]) -> Tensor {
    let k = predictions.len();
    let n = predictions[0].frame_count() * predictions[0].vertex_count() * 3;
    let mut data = vec![0.0; n * k];
    for (col, seq) in predictions.iter().enumerate() {
        let mut row = 0;
        for frame in seq.frames() {
            for p in frame {
                for c in 0..3 {
                    data[(row + c) * k + col] = p[c];
                }
                row += 3;
            }
        }
    }
    Tensor::matrix(n, k, data)
}

fn flatten_truth(truth: &AnimSequence) -> Tensor {
    let pts: Vec<vb_mesh::Vec3> = truth.frames().iter().flatten().copied().collect();
    Tensor::from_points(&pts)
}

/// Calibrates a kernel on held-out cases, starting from the identity map.
pub fn fit_kernel(
    pivot_params: &[SimParams],
    cases: &[CalibrationCase],
    config: &KernelFitConfig,
) -> Result<(Kernel, FitReport), EnsembleError> {
    if pivot_params.len() < 2 {
        return Err(EnsembleError::Config(format!(
            "need at least two pivots to calibrate, got {}",
            pivot_params.len()
        )));
    }
    if cases.is_empty() {
        return Err(EnsembleError::Config("no calibration cases".into()));
    }
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) {
        return Err(EnsembleError::Config(format!(
            "learning rate {} must be positive",
            config.learning_rate
        )));
    }
    for (i, case) in cases.iter().enumerate() {
        if case.pivot_predictions.len() != pivot_params.len() {
            return Err(EnsembleError::WeightCountMismatch {
                weights: pivot_params.len(),
                pivots: case.pivot_predictions.len(),
            });
        }
        for (k, pred) in case.pivot_predictions.iter().enumerate() {
            if pred.frame_count() != case.truth.frame_count()
                || pred.vertex_count() != case.truth.vertex_count()
            {
                return Err(EnsembleError::SequenceMismatch {
                    details: format!(
                        "case {i}, pivot {k}: {}x{} prediction for {}x{} truth",
                        pred.frame_count(),
                        pred.vertex_count(),
                        case.truth.frame_count(),
                        case.truth.vertex_count()
                    ),
                });
            }
        }
    }

    // Standardize over everything the fit will see.
    let mut population = pivot_params.to_vec();
    population.extend(cases.iter().map(|c| c.params));
    let standardization = Standardization::fit(&population);

    let sigma = match config.sigma {
        Some(s) => s,
        None => {
            let feats: Vec<Vec<f64>> = pivot_params
                .iter()
                .map(|p| standardization.apply(p).to_vec())
                .collect();
            median_pairwise_distance(&feats)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut kernel = Kernel::identity(standardization, config.hidden, sigma, &mut rng)?;

    struct Prepared {
        params: SimParams,
        matrix: Tensor,
        truth: Tensor,
        reshape: Rc<Vec<usize>>,
        rows: usize,
    }
    let prepared: Vec<Prepared> = cases
        .iter()
        .map(|case| {
            let rows = case.truth.frame_count() * case.truth.vertex_count();
            Prepared {
                params: case.params,
                matrix: prediction_matrix(&case.pivot_predictions),
                truth: flatten_truth(&case.truth),
                reshape: Rc::new((0..rows * 3).collect()),
                rows,
            }
        })
        .collect();

    let mut opt = Adam::new(config.learning_rate);
    let mut report = FitReport {
        initial_sigma: sigma,
        epoch_losses: Vec::with_capacity(config.epochs),
    };
    for epoch in 0..config.epochs {
        let mut tape = Tape::new();
        let vars = kernel.params.stage_into(&mut tape);
        let mut total = None;
        for case in &prepared {
            let w = kernel.weights_on_tape(&mut tape, &vars, pivot_params, &case.params)?;
            let m = tape.constant(case.matrix.clone());
            let flat = tape.matvec(m, w)?;
            let blend = tape.gather_elems(flat, Rc::clone(&case.reshape), &[case.rows, 3])?;
            let truth = tape.constant(case.truth.clone());
            let diff = tape.sub(blend, truth)?;
            let loss = mean_euclidean(&mut tape, diff)?;
            total = Some(match total {
                None => loss,
                Some(t) => tape.add(t, loss)?,
            });
        }
        let total = total.expect("at least one case");
        let loss = tape.scalar_mul(total, 1.0 / prepared.len() as f64);
        let value = tape.value(loss).item();
        if !value.is_finite() {
            return Err(EnsembleError::FitDiverged { epoch });
        }
        tape.backward(loss)?;
        let grads = kernel.params.collect_grads(&tape, &vars);
        opt.step(&mut kernel.params, &grads)?;
        log::debug!("kernel epoch {epoch}: loss {value:.6}");
        report.epoch_losses.push(value);
    }
    Ok((kernel, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use vb_mesh::Vec3;

    /// A toy family: cloth "response" moves linearly with log bending.
    fn family_sequence(bending: f64, frames: usize) -> AnimSequence {
        let s = (bending + crate::kernel::LOG_SHIFT).ln();
        let seq = (0..frames)
            .map(|f| {
                let t = f as f64 * 0.1;
                vec![
                    Vec3::new(0.1 * s + t, 0.0, 0.0),
                    Vec3::new(0.0, 0.05 * s - t, 0.1),
                ]
            })
            .collect();
        AnimSequence::new(seq, 30.0).unwrap()
    }

    fn sweep_params(bending: f64) -> SimParams {
        SimParams::new(bending, 0.04, 1.0).unwrap()
    }

    fn toy_setup() -> (Vec<SimParams>, Vec<CalibrationCase>) {
        let pivot_bend = [1e-8, 1e-7, 1e-6, 1e-5];
        let pivots: Vec<SimParams> = pivot_bend.iter().map(|&b| sweep_params(b)).collect();
        let cases = [3e-8, 3e-7, 3e-6]
            .iter()
            .map(|&b| CalibrationCase {
                params: sweep_params(b),
                truth: family_sequence(b, 4),
                pivot_predictions: pivot_bend
                    .iter()
                    .map(|&pb| family_sequence(pb, 4))
                    .collect(),
            })
            .collect();
        (pivots, cases)
    }

    #[test]
    fn fitting_reduces_the_blend_error() {
        let (pivots, cases) = toy_setup();
        let config = KernelFitConfig {
            epochs: 120,
            ..KernelFitConfig::default()
        };
        let (kernel, report) = fit_kernel(&pivots, &cases, &config).unwrap();
        let first = report.epoch_losses[0];
        let last = *report.epoch_losses.last().unwrap();
        assert!(last < 0.8 * first, "no progress: {first} -> {last}");
        assert!(kernel.sigma().is_finite() && kernel.sigma() > 0.0);
    }

    #[test]
    fn fitting_is_deterministic() {
        let (pivots, cases) = toy_setup();
        let config = KernelFitConfig {
            epochs: 10,
            ..KernelFitConfig::default()
        };
        let (a, ra) = fit_kernel(&pivots, &cases, &config).unwrap();
        let (b, rb) = fit_kernel(&pivots, &cases, &config).unwrap();
        assert_eq!(ra.epoch_losses, rb.epoch_losses);
        for name in a.params.names() {
            assert_eq!(a.params.get(name).unwrap().data(), b.params.get(name).unwrap().data());
        }
    }

    #[test]
    fn mismatched_prediction_counts_are_rejected() {
        let (pivots, mut cases) = toy_setup();
        cases[0].pivot_predictions.pop();
        assert!(matches!(
            fit_kernel(&pivots, &cases, &KernelFitConfig::default()),
            Err(EnsembleError::WeightCountMismatch { .. })
        ));
    }
}
