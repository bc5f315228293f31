use crate::numeric::Tensor;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Adam hyperparameters. Defaults are the standard constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper { lr: 0.001, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2)
            || !(self.epsilon > 0.0)
        {
            return Err(Error::InvalidArgument(format!("invalid Adam hyperparameters: {self:?}")));
        }
        Ok(())
    }
}

/// Per-parameter first/second moment estimates plus a shared step counter.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
    hyper: AdamHyper,
}

impl AdamState {
    pub fn new(params: &[&Tensor], hyper: AdamHyper) -> Self {
        AdamState {
            m: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            t: 0,
            hyper,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One Adam update:
    /// `m <- b1 m + (1-b1) g`, `v <- b2 v + (1-b2) g^2`, bias-corrected
    /// `m^ = m/(1-b1^t)`, `v^ = v/(1-b2^t)`,
    /// `theta <- theta - lr * m^ / (sqrt(v^) + eps)`.
    ///
    /// Non-finite gradients abort with a diagnostic rather than poisoning
    /// the parameters.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::InvalidArgument(format!(
                "adam_step: {} params / {} grads vs state of {}",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        for (i, g) in grads.iter().enumerate() {
            if g.shape() != params[i].shape() {
                return Err(Error::shape(
                    "adam_step",
                    format!("grad {i}: {:?} vs param {:?}", g.shape(), params[i].shape()),
                ));
            }
            if !g.is_finite() {
                return Err(Error::Numeric(format!(
                    "adam_step: non-finite gradient in tensor {i} at step {}",
                    self.t + 1
                )));
            }
        }

        self.t += 1;
        let AdamHyper { lr, beta1, beta2, epsilon } = self.hyper;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);

        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for k in 0..grad.len() {
                let g = grad.data()[k];
                let mk = beta1 * m.data()[k] + (1.0 - beta1) * g;
                let vk = beta2 * v.data()[k] + (1.0 - beta2) * g * g;
                m.data_mut()[k] = mk;
                v.data_mut()[k] = vk;
                let m_hat = mk / bc1;
                let v_hat = vk / bc2;
                param.data_mut()[k] -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
            param.debug_check_finite("adam_step");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensors(vals: &[f64]) -> Tensor {
        Tensor::new(&[vals.len()], vals.to_vec()).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut p = tensors(&[1.0, -2.0, 3.0]);
        let orig = p.clone();
        let mut state = AdamState::new(&[&p], AdamHyper::default());
        let g = Tensor::zeros(&[3]);
        state.step(&mut [&mut p], &[g]).unwrap();
        assert_eq!(p, orig);
    }

    #[test]
    fn first_step_magnitude_is_learning_rate() {
        // With constant g, m^ = g and v^ = g^2, so the first update is
        // lr * g / (|g| + eps) = lr * sign(g) up to O(eps).
        let hyper = AdamHyper::default();
        let mut p = tensors(&[0.0, 0.0]);
        let mut state = AdamState::new(&[&p], hyper);
        let g = tensors(&[0.5, -3.0]);
        state.step(&mut [&mut p], &[g]).unwrap();
        assert!((p.data()[0] + hyper.lr).abs() < 1e-9, "{}", p.data()[0]);
        assert!((p.data()[1] - hyper.lr).abs() < 1e-9, "{}", p.data()[1]);
    }

    #[test]
    fn identical_calls_from_identical_states_agree() {
        let g = tensors(&[0.3, -0.1, 0.9]);
        let run = || {
            let mut p = tensors(&[1.0, 1.0, 1.0]);
            let mut state = AdamState::new(&[&p], AdamHyper::default());
            for _ in 0..5 {
                state.step(&mut [&mut p], &[g.clone()]).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn gradient_scaling_leaves_first_update_direction_unchanged() {
        let g = tensors(&[0.2, -0.7, 1.3]);
        let update_for = |scale: f64| {
            let mut p = tensors(&[0.0, 0.0, 0.0]);
            let mut state = AdamState::new(&[&p], AdamHyper::default());
            state.step(&mut [&mut p], &[g.scale(scale)]).unwrap();
            p
        };
        let u1 = update_for(1.0);
        let u2 = update_for(100.0);
        for (a, b) in u1.data().iter().zip(u2.data().iter()) {
            assert_eq!(a.signum(), b.signum());
            assert!((a - b).abs() / a.abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn non_finite_gradient_is_an_error() {
        let mut p = tensors(&[1.0]);
        let mut state = AdamState::new(&[&p], AdamHyper::default());
        let mut g = tensors(&[1.0]);
        g.data_mut()[0] = f64::NAN;
        assert!(matches!(
            state.step(&mut [&mut p], &[g]),
            Err(Error::Numeric(_))
        ));
    }
}
