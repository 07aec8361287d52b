//! Adam optimizer over named parameters.

use indexmap::IndexMap;

use crate::{AutodiffError, ParameterSet, Tensor};

/// First/second-moment accumulators, serialized alongside checkpoints so
/// training can resume mid-run.
#[derive(Debug, Clone, Default)]
pub struct AdamState {
    pub t: u64,
    pub m: IndexMap<String, Vec<f64>>,
    pub v: IndexMap<String, Vec<f64>>,
}

pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    state: AdamState,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            state: AdamState::default(),
        }
    }

    /// Resume from a previously saved moment state.
    pub fn with_state(lr: f64, state: AdamState) -> Self {
        let mut adam = Adam::new(lr);
        adam.state = state;
        adam
    }

    pub fn state(&self) -> &AdamState {
        &self.state
    }

    pub fn step_count(&self) -> u64 {
        self.state.t
    }

    /// One bias-corrected Adam update. Parameters with a non-finite
    /// gradient are left untouched (moments included) and logged.
    pub fn step(
        &mut self,
        params: &mut ParameterSet,
        grads: &IndexMap<String, Tensor>,
    ) -> Result<(), AutodiffError> {
        self.state.t += 1;
        let t = self.state.t;
        let bc1 = 1.0 - self.beta1.powi(t as i32);
        let bc2 = 1.0 - self.beta2.powi(t as i32);
        for (name, grad) in grads {
            let expected = params
                .get(name)
                .ok_or_else(|| AutodiffError::MissingParam(name.clone()))?
                .shape()
                .to_vec();
            if expected != grad.shape() {
                return Err(AutodiffError::ShapeChanged {
                    name: name.clone(),
                    expected,
                    got: grad.shape().to_vec(),
                });
            }
            if grad.data().iter().any(|g| !g.is_finite()) {
                log::warn!("non-finite gradient for {name}; skipping its update");
                continue;
            }
            let n = grad.len();
            let m = self
                .state
                .m
                .entry(name.clone())
                .or_insert_with(|| vec![0.0; n]);
            let v = self
                .state
                .v
                .entry(name.clone())
                .or_insert_with(|| vec![0.0; n]);
            let values = params.values_mut(name).expect("checked above");
            for i in 0..n {
                let g = grad.data()[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                values[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_param(value: Vec<f64>) -> ParameterSet {
        let mut p = ParameterSet::new();
        p.insert("x", Tensor::vector(value), true).unwrap();
        p
    }

    fn grad_map(g: Vec<f64>) -> IndexMap<String, Tensor> {
        let mut m = IndexMap::new();
        m.insert("x".to_string(), Tensor::vector(g));
        m
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut p = one_param(vec![1.0, -2.0]);
        let mut adam = Adam::new(0.1);
        adam.step(&mut p, &grad_map(vec![0.0, 0.0])).unwrap();
        assert_eq!(p.get("x").unwrap().data(), &[1.0, -2.0]);
    }

    #[test]
    fn first_step_is_sign_scaled() {
        // At t=1 the bias corrections cancel: update = -lr * g/(|g|+eps').
        let mut p = one_param(vec![0.0, 0.0]);
        let mut adam = Adam::new(0.05);
        adam.step(&mut p, &grad_map(vec![3.0, -0.001])).unwrap();
        let x = p.get("x").unwrap().data().to_vec();
        assert!((x[0] + 0.05).abs() < 1e-6, "{x:?}");
        assert!((x[1] - 0.05).abs() < 1e-4, "{x:?}");
    }

    #[test]
    fn non_finite_gradient_is_skipped() {
        let mut p = one_param(vec![1.0]);
        let mut adam = Adam::new(0.1);
        adam.step(&mut p, &grad_map(vec![f64::NAN])).unwrap();
        assert_eq!(p.get("x").unwrap().data(), &[1.0]);
        assert!(adam.state().m.is_empty());
    }

    #[test]
    fn quadratic_bowl_converges() {
        // f(x) = sum((x - c)^2), gradient 2(x - c).
        let c = [0.7, -1.3, 2.4];
        let mut p = one_param(vec![0.0, 0.0, 0.0]);
        let mut adam = Adam::new(0.05);
        for _ in 0..500 {
            let x = p.get("x").unwrap().data().to_vec();
            let g: Vec<f64> = x.iter().zip(c).map(|(xi, ci)| 2.0 * (xi - ci)).collect();
            adam.step(&mut p, &grad_map(g)).unwrap();
        }
        for (xi, ci) in p.get("x").unwrap().data().iter().zip(c) {
            assert!((xi - ci).abs() < 1e-4, "{xi} vs {ci}");
        }
    }

    #[test]
    fn unknown_gradient_name_errors() {
        let mut p = one_param(vec![1.0]);
        let mut adam = Adam::new(0.1);
        let mut grads = IndexMap::new();
        grads.insert("y".to_string(), Tensor::scalar(1.0));
        assert!(matches!(
            adam.step(&mut p, &grads),
            Err(AutodiffError::MissingParam(_))
        ));
    }
}
