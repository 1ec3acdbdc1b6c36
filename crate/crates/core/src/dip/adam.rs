use serde::{Deserialize, Serialize};

use super::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamParams {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam with one moment pair per parameter tensor.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub hyper: AdamParams,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(hyper: AdamParams) -> Self {
        Self {
            hyper,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Updates every parameter in place from its gradient buffer.
    pub fn step(&mut self, params: &mut [&mut Tensor]) {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        assert_eq!(self.m.len(), params.len(), "parameter list changed between Adam steps");
        self.step += 1;
        let AdamParams { lr, beta1, beta2, eps } = self.hyper;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let (data, grad) = p.split_grad();
            for k in 0..data.len() {
                let g = grad[k];
                m[k] = beta1 * m[k] + (1.0 - beta1) * g;
                v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
                let update = lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
                data[k] -= update;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn param(values: &[f64], grads: &[f64]) -> Tensor {
        let mut t = Tensor::from_vec(values.len(), 1, 1, values.to_vec())
            .unwrap()
            .requiring_grad();
        t.grad_mut().unwrap().copy_from_slice(grads);
        t
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = param(&[1.0, -2.0, 3.5], &[0.0; 3]);
        let mut adam = AdamState::new(AdamParams::with_lr(0.1));
        for _ in 0..5 {
            adam.step(&mut [&mut p]);
        }
        assert_eq!(p.data(), &[1.0, -2.0, 3.5]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = param(&[0.0, 0.0], &[3.0, -0.02]);
        let mut adam = AdamState::new(AdamParams::with_lr(1e-3));
        adam.step(&mut [&mut p]);
        assert!((p.data()[0] + 1e-3).abs() < 1e-9);
        assert!((p.data()[1] - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn zero_learning_rate_freezes() {
        let mut p = param(&[0.25, 7.0], &[1.0, -1.0]);
        let mut adam = AdamState::new(AdamParams::with_lr(0.0));
        adam.step(&mut [&mut p]);
        assert_eq!(p.data(), &[0.25, 7.0]);
    }

    #[test]
    fn replay_is_bitwise() {
        let run = || {
            let mut p = param(&[0.3, -0.1, 0.9], &[0.0; 3]);
            let mut adam = AdamState::new(AdamParams::with_lr(0.01));
            for _ in 0..100 {
                let g: Vec<f64> = p.data().iter().map(|x| 2.0 * x - 0.4 * x.sin()).collect();
                p.grad_mut().unwrap().copy_from_slice(&g);
                adam.step(&mut [&mut p]);
            }
            p.data().to_vec()
        };
        assert_eq!(run(), run());
    }
}
