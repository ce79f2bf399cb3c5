//! Adam optimizer with bias-corrected first and second moments.

use crate::{Result, Scalar, Tensor, TensorError};

/// Hyperparameters; defaults are the optimizer's published values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Per-parameter moment estimates plus the step counter. One state drives a
/// whole parameter list; moment arrays are shaped identically to their
/// parameters.
#[derive(Debug, Clone)]
pub struct AdamState<T: Scalar> {
    pub config: AdamConfig,
    first_moment: Vec<Vec<T>>,
    second_moment: Vec<Vec<T>>,
    step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &[Tensor<T>], config: AdamConfig) -> Self {
        AdamState {
            config,
            first_moment: params.iter().map(|p| vec![T::ZERO; p.numel()]).collect(),
            second_moment: params.iter().map(|p| vec![T::ZERO; p.numel()]).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update: `p -= lr * m_hat / (sqrt(v_hat) + eps)` with the usual
    /// `1 - beta^t` bias corrections.
    pub fn step(&mut self, params: &mut [Tensor<T>], grads: &[Tensor<T>]) -> Result<()> {
        let mut refs: Vec<&mut Tensor<T>> = params.iter_mut().collect();
        self.step_refs(&mut refs, grads)
    }

    /// [`AdamState::step`] over borrowed parameter slots.
    pub fn step_refs(&mut self, params: &mut [&mut Tensor<T>], grads: &[Tensor<T>]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(TensorError::DimMismatch {
                axis: "parameter groups",
                expected: self.first_moment.len(),
                got: params.len().min(grads.len()),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let b1 = T::from_f64(self.config.beta1);
        let b2 = T::from_f64(self.config.beta2);
        let lr = T::from_f64(self.config.learning_rate);
        let eps = T::from_f64(self.config.epsilon);
        let m_corr = T::ONE / (T::ONE - b1.powi(t));
        let v_corr = T::ONE / (T::ONE - b2.powi(t));

        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(&mut self.second_moment))
        {
            if param.numel() != grad.numel() || param.numel() != m.len() {
                return Err(TensorError::DimMismatch {
                    axis: "parameter",
                    expected: m.len(),
                    got: param.numel(),
                });
            }
            let p = param.data_mut();
            let g = grad.data();
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (T::ONE - b1) * g[i];
                v[i] = b2 * v[i] + (T::ONE - b2) * g[i] * g[i];
                let m_hat = m[i] * m_corr;
                let v_hat = v[i] * v_corr;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
