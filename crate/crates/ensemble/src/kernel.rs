//! The RBF kernel over simulation parameters.
//!
//! Parameters are mapped to a standardized feature space (log bending,
//! linear density and timescale, each z-scored), pushed through a small
//! residual network g, and pivots are weighted by
//! w_i ∝ exp(−‖g(θ_i) − g(θ)‖² / 2σ²). The residual network starts as the
//! identity, so an unfitted kernel is plain RBF interpolation in feature
//! space; fitting bends the space and tunes σ.

use rand::Rng;
use serde::{Deserialize, Serialize};
use vb_autodiff::{AutodiffError, Dense, ParameterSet, Tape, Tensor, Var, VarMap};
use vb_sim::SimParams;

use crate::blend::BlendWeights;
use crate::EnsembleError;

/// Keeps the log feature finite for zero bending stiffness.
pub const LOG_SHIFT: f64 = 1e-9;

pub const LOG_SIGMA_NAME: &str = "kernel.log_sigma";

fn raw_features(params: &SimParams) -> [f64; 3] {
    [
        (params.bending_stiffness + LOG_SHIFT).ln(),
        params.mass_density,
        params.timescale,
    ]
}

/// Per-feature z-scoring constants, fitted over a candidate population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl Standardization {
    /// Population mean/std per feature. Features that do not vary over the
    /// population (e.g. a one-dimensional sweep) get unit scale.
    pub fn fit(population: &[SimParams]) -> Self {
        let n = population.len().max(1) as f64;
        let mut mean = [0.0; 3];
        for p in population {
            let f = raw_features(p);
            for k in 0..3 {
                mean[k] += f[k] / n;
            }
        }
        let mut var = [0.0; 3];
        for p in population {
            let f = raw_features(p);
            for k in 0..3 {
                var[k] += (f[k] - mean[k]).powi(2) / n;
            }
        }
        let std = var.map(|v| {
            let s = v.sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        });
        Standardization { mean, std }
    }

    pub fn apply(&self, params: &SimParams) -> [f64; 3] {
        let f = raw_features(params);
        [
            (f[0] - self.mean[0]) / self.std[0],
            (f[1] - self.mean[1]) / self.std[1],
            (f[2] - self.mean[2]) / self.std[2],
        ]
    }

    fn rows(&self, all: &[SimParams]) -> Tensor {
        let data: Vec<f64> = all.iter().flat_map(|p| self.apply(p)).collect();
        Tensor::matrix(all.len(), 3, data)
    }
}

/// The learned part of the ensemble: g plus the bandwidth σ.
pub struct Kernel {
    pub params: ParameterSet,
    pub standardization: Standardization,
    pub hidden: usize,
}

impl Kernel {
    /// A kernel whose g is exactly the identity (the residual branch has a
    /// zero output layer) with the given bandwidth.
    pub fn identity(
        standardization: Standardization,
        hidden: usize,
        sigma: f64,
        rng: &mut impl Rng,
    ) -> Result<Self, EnsembleError> {
        if hidden == 0 {
            return Err(EnsembleError::Config("kernel hidden width is zero".into()));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(EnsembleError::Config(format!("sigma {sigma} must be positive")));
        }
        let mut params = ParameterSet::new();
        Dense::init(&mut params, "kernel.hid", 3, hidden, rng)?;
        params.insert("kernel.out.w", Tensor::zeros(&[3, hidden]), true)?;
        params.insert("kernel.out.b", Tensor::zeros(&[3]), true)?;
        params.insert(LOG_SIGMA_NAME, Tensor::vector(vec![sigma.ln()]), true)?;
        Ok(Kernel {
            params,
            standardization,
            hidden,
        })
    }

    /// Rebinds loaded parameters; shapes are checked lazily on first use.
    pub fn from_parts(
        params: ParameterSet,
        standardization: Standardization,
        hidden: usize,
    ) -> Self {
        Kernel {
            params,
            standardization,
            hidden,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.params
            .get(LOG_SIGMA_NAME)
            .map(|t| t.item().exp())
            .unwrap_or(f64::NAN)
    }

    /// g applied to standardized feature rows: x + out(tanh(hid(x))).
    pub fn latent_rows(
        &self,
        tape: &mut Tape,
        vars: &VarMap,
        x: Var,
    ) -> Result<Var, AutodiffError> {
        let hid = Dense::expect("kernel.hid", 3, self.hidden);
        let out = Dense::expect("kernel.out", self.hidden, 3);
        let h = hid.forward_rows(tape, vars, x)?;
        let t = tape.tanh(h);
        let r = out.forward_rows(tape, vars, t)?;
        tape.add(x, r)
    }

    /// Latent coordinates of each parameter point (plain values).
    pub fn latents(&self, all: &[SimParams]) -> Result<Vec<Vec<f64>>, AutodiffError> {
        let mut tape = Tape::new();
        let vars = self.params.stage_into(&mut tape);
        let x = tape.constant(self.standardization.rows(all));
        let g = self.latent_rows(&mut tape, &vars, x)?;
        let data = tape.value(g).data();
        Ok(all
            .iter()
            .enumerate()
            .map(|(i, _)| data[i * 3..(i + 1) * 3].to_vec())
            .collect())
    }

    /// Blend weights for a query, with underflow falling back to the
    /// nearest pivot.
    pub fn weights(
        &self,
        pivots: &[SimParams],
        query: &SimParams,
    ) -> Result<BlendWeights, EnsembleError> {
        if pivots.is_empty() {
            return Err(EnsembleError::EmptyBank);
        }
        let mut all = pivots.to_vec();
        all.push(*query);
        let mut latents = self.latents(&all)?;
        let q = latents.pop().expect("query latent");
        rbf_weights(&latents, &q, self.sigma())
    }

    /// Differentiable weights for fitting: same formula, on the tape. The
    /// caller stages `self.params` and passes the resulting map.
    pub fn weights_on_tape(
        &self,
        tape: &mut Tape,
        vars: &VarMap,
        pivots: &[SimParams],
        query: &SimParams,
    ) -> Result<Var, EnsembleError> {
        let k = pivots.len();
        let p = tape.constant(self.standardization.rows(pivots));
        let gp = self.latent_rows(tape, vars, p)?;
        let q = tape.constant(Tensor::matrix(1, 3, self.standardization.apply(query).to_vec()));
        let gq = self.latent_rows(tape, vars, q)?;
        let gq = tape.gather_elems(gq, std::rc::Rc::new(vec![0, 1, 2]), &[3])?;
        let gq = tape.broadcast_rows(gq, k)?;
        let diff = tape.sub(gp, gq)?;
        let sq = tape.mul(diff, diff)?;
        let d2 = tape.row_sum(sq)?;

        let log_sigma = *vars
            .get(LOG_SIGMA_NAME)
            .ok_or_else(|| AutodiffError::MissingParam(LOG_SIGMA_NAME.into()))?;
        let inv_var = {
            let m = tape.scalar_mul(log_sigma, -2.0);
            tape.exp(m)
        };
        let scaled = tape.scale_by(d2, inv_var)?;
        let expo = tape.scalar_mul(scaled, -0.5);
        let e = tape.exp(expo);
        let total = tape.sum(e);
        let one = tape.constant(Tensor::scalar(1.0));
        let recip = tape.div(one, total)?;
        Ok(tape.scale_by(e, recip)?)
    }
}

/// Normalized RBF weights from latent coordinates. If every kernel value
/// underflows to zero the nearest pivot takes all the weight.
pub fn rbf_weights(
    pivot_latents: &[Vec<f64>],
    query: &[f64],
    sigma: f64,
) -> Result<BlendWeights, EnsembleError> {
    if pivot_latents.is_empty() {
        return Err(EnsembleError::EmptyBank);
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(EnsembleError::Config(format!("sigma {sigma} must be positive")));
    }
    let d2: Vec<f64> = pivot_latents
        .iter()
        .map(|l| {
            l.iter()
                .zip(query)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
        })
        .collect();
    let kernel: Vec<f64> = d2.iter().map(|&d| (-d / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = kernel.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        let nearest = d2
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        log::warn!(
            "all kernel values underflowed (σ = {sigma:.3e}); falling back to pivot {nearest}"
        );
        let mut w = vec![0.0; pivot_latents.len()];
        w[nearest] = 1.0;
        return BlendWeights::new(w);
    }
    BlendWeights::new(kernel.into_iter().map(|e| e / total).collect())
}

/// Median pairwise distance between latents: the default bandwidth. Falls
/// back to 1 when there are fewer than two distinct points.
pub fn median_pairwise_distance(latents: &[Vec<f64>]) -> f64 {
    let mut dists = Vec::new();
    for i in 0..latents.len() {
        for j in i + 1..latents.len() {
            let d: f64 = latents[i]
                .iter()
                .zip(&latents[j])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            dists.push(d);
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sweep(bendings: &[f64]) -> Vec<SimParams> {
        bendings
            .iter()
            .map(|&b| SimParams::new(b, 0.04, 1.0).unwrap())
            .collect()
    }

    fn identity_kernel(population: &[SimParams], sigma: f64) -> Kernel {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        Kernel::identity(Standardization::fit(population), 6, sigma, &mut rng).unwrap()
    }

    #[test]
    fn identity_kernel_latents_are_standardized_features() {
        let pop = sweep(&[1e-8, 1e-7, 1e-6, 1e-5]);
        let kernel = identity_kernel(&pop, 1.0);
        let latents = kernel.latents(&pop).unwrap();
        for (p, l) in pop.iter().zip(&latents) {
            let f = kernel.standardization.apply(p);
            for k in 0..3 {
                assert!((l[k] - f[k]).abs() < 1e-15);
            }
        }
        // Constant features are centered, not blown up.
        assert!(latents.iter().all(|l| l[1].abs() < 1e-12 && l[2].abs() < 1e-12));
    }

    #[test]
    fn weights_form_a_simplex_and_favor_the_nearest_pivot() {
        let pivots = sweep(&[1e-8, 1e-7, 1e-6, 1e-5]);
        let kernel = identity_kernel(&pivots, 1.0);
        let query = SimParams::new(2e-7, 0.04, 1.0).unwrap();
        let w = kernel.weights(&pivots, &query).unwrap();
        let sum: f64 = w.as_slice().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(w.as_slice().iter().all(|&x| x >= 0.0));
        assert_eq!(w.argmax(), 1, "weights {:?}", w.as_slice());
    }

    #[test]
    fn query_at_pivot_with_small_sigma_is_one_hot() {
        let pivots = sweep(&[1e-8, 1e-7, 1e-6, 1e-5]);
        let kernel = identity_kernel(&pivots, 1e-6);
        let w = kernel.weights(&pivots, &pivots[2]).unwrap();
        assert!((w.as_slice()[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn underflow_falls_back_to_nearest_pivot() {
        let latents = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]];
        let w = rbf_weights(&latents, &[1e6, 0.0, 0.0], 1e-3).unwrap();
        assert_eq!(w.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn scaling_latents_and_sigma_together_changes_nothing() {
        let latents = vec![
            vec![0.1, -0.4, 0.2],
            vec![1.3, 0.8, -0.6],
            vec![-0.7, 0.2, 0.9],
        ];
        let query = vec![0.4, 0.1, -0.2];
        let base = rbf_weights(&latents, &query, 0.8).unwrap();
        for c in [3.0, 0.25, 117.0] {
            let scaled: Vec<Vec<f64>> = latents
                .iter()
                .map(|l| l.iter().map(|x| x * c).collect())
                .collect();
            let q: Vec<f64> = query.iter().map(|x| x * c).collect();
            let w = rbf_weights(&scaled, &q, 0.8 * c).unwrap();
            for (a, b) in w.as_slice().iter().zip(base.as_slice()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn tape_weights_match_value_weights() {
        let pivots = sweep(&[1e-8, 3e-7, 2e-6, 1e-5]);
        let kernel = identity_kernel(&pivots, 0.7);
        let query = SimParams::new(5e-7, 0.04, 1.0).unwrap();
        let value = kernel.weights(&pivots, &query).unwrap();
        let mut tape = Tape::new();
        let vars = kernel.params.stage_into(&mut tape);
        let w = kernel
            .weights_on_tape(&mut tape, &vars, &pivots, &query)
            .unwrap();
        for (a, b) in tape.value(w).data().iter().zip(value.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn median_distance_handles_degenerate_sets() {
        assert_eq!(median_pairwise_distance(&[]), 1.0);
        assert_eq!(median_pairwise_distance(&[vec![1.0, 2.0, 3.0]]), 1.0);
        let twice = vec![vec![0.0; 3], vec![0.0; 3]];
        assert_eq!(median_pairwise_distance(&twice), 1.0);
        let line = vec![vec![0.0; 3], vec![1.0, 0.0, 0.0], vec![3.0, 0.0, 0.0]];
        assert!((median_pairwise_distance(&line) - 2.0).abs() < 1e-12);
    }
}
