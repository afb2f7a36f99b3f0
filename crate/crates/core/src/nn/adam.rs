use super::state::{Gradients, NetworkState};
use crate::{Error, Result};

/// Adam optimizer with bias-corrected moments.
///
/// Moment buffers are allocated on the first step from the gradient layout and
/// must stay congruent afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step_count: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Self::with_hyperparameters(learning_rate, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyperparameters(learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step_count: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[Vec<f64>] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Vec<f64>] {
        &self.second_moment
    }

    /// Applies one update to `state`.
    pub fn step(&mut self, state: &mut NetworkState, grads: &Gradients) -> Result<()> {
        let mut params = state.params_mut();
        let grads = grads.tensors();
        self.step_tensors(&mut params, &grads)
    }

    /// Applies one update to an arbitrary list of parameter tensors.
    pub fn step_tensors(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != grads.len() || params.iter().zip(grads).any(|(p, g)| p.len() != g.len())
        {
            return Err(Error::Shape(
                "gradient layout does not match parameter layout".into(),
            ));
        }
        if self.step_count == 0 && self.first_moment.is_empty() {
            self.first_moment = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.second_moment = self.first_moment.clone();
        } else if self.first_moment.len() != grads.len()
            || self
                .first_moment
                .iter()
                .zip(grads)
                .any(|(m, g)| m.len() != g.len())
        {
            return Err(Error::Shape(
                "gradient layout changed between optimizer steps".into(),
            ));
        }

        self.step_count += 1;
        let t = self.step_count as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);

        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            for (((w, &gi), mi), vi) in p.iter_mut().zip(g.iter()).zip(m).zip(v) {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
                let m_hat = *mi / bias1;
                let v_hat = *vi / bias2;
                *w -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut w = vec![0.3, -1.2];
        let mut adam = Adam::new(0.1);
        adam.step_tensors(&mut [&mut w], &[&[0.0, 0.0]]).unwrap();
        assert_eq!(w, vec![0.3, -1.2]);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m_hat = 1, v_hat = 1 -> update = lr / (1 + eps)
        let mut w = vec![0.0];
        let mut adam = Adam::new(0.1);
        adam.step_tensors(&mut [&mut w], &[&[1.0]]).unwrap();
        let expected = -0.1 / (1.0 + 1e-8);
        assert!((w[0] - expected).abs() < 1e-15, "{}", w[0]);
    }

    #[test]
    fn identical_parameters_stay_identical() {
        let mut w = vec![0.5, 0.5];
        let mut adam = Adam::new(0.01);
        for k in 0..50 {
            let g = (k as f64 * 0.37).sin();
            adam.step_tensors(&mut [&mut w], &[&[g, g]]).unwrap();
            assert_eq!(w[0], w[1]);
        }
        assert_eq!(adam.step_count(), 50);
        assert!(adam.second_moment()[0].iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let mut w = vec![0.0; 2];
        let mut adam = Adam::new(0.1);
        assert!(adam.step_tensors(&mut [&mut w], &[&[1.0]]).is_err());
        adam.step_tensors(&mut [&mut w], &[&[1.0, 1.0]]).unwrap();
        let mut w3 = vec![0.0; 3];
        assert!(adam
            .step_tensors(&mut [&mut w3], &[&[1.0, 1.0, 1.0]])
            .is_err());
    }
}
