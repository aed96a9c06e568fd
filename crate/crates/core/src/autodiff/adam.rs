use serde::{Deserialize, Serialize};

use super::{AutodiffError, Tensor};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators for a fixed list of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    /// Zero-initialized state for parameters with the given element counts.
    pub fn new(config: AdamConfig, params: &[Tensor]) -> Self {
        Self {
            config,
            step: 0,
            first_moment: params.iter().map(|p| vec![0.0; p.numel()]).collect(),
            second_moment: params.iter().map(|p| vec![0.0; p.numel()]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &[Vec<f64>] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Vec<f64>] {
        &self.second_moment
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(
    params: &mut [Tensor],
    grads: &[Tensor],
    state: &mut AdamState,
) -> Result<(), AutodiffError> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(AutodiffError::ParameterCountMismatch {
            params: params.len(),
            grads: grads.len(),
            state: state.first_moment.len(),
        });
    }
    for (p, g) in params.iter().zip(grads) {
        if p.shape() != g.shape() {
            return Err(AutodiffError::ShapeMismatch {
                op: "adam_step",
                lhs: p.shape().to_vec(),
                rhs: g.shape().to_vec(),
            });
        }
    }
    for (p, m) in params.iter().zip(&state.first_moment) {
        if p.numel() != m.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "adam_step",
                lhs: p.shape().to_vec(),
                rhs: vec![m.len()],
            });
        }
    }

    state.step += 1;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step as i32;
    let bias1 = 1.0 - beta1.powi(t);
    let bias2 = 1.0 - beta2.powi(t);

    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut().zip(state.second_moment.iter_mut()))
    {
        for (((w, &gi), mi), vi) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *mi = beta1 * *mi + (1.0 - beta1) * gi;
            *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
            let m_hat = *mi / bias1;
            let v_hat = *vi / bias2;
            *w -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(data: Vec<f64>) -> Tensor {
        Tensor::vector(data).unwrap()
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut params = vec![t(vec![1.0, -2.0, 3.5])];
        let before = params.clone();
        let mut state = AdamState::new(AdamConfig::default(), &params);
        for step in 1..=5 {
            adam_step(&mut params, &[t(vec![0.0; 3])], &mut state).unwrap();
            assert_eq!(params, before);
            assert_eq!(state.step_count(), step);
        }
    }

    #[test]
    fn first_step_moves_by_learning_rate_against_sign() {
        let mut params = vec![t(vec![0.0, 0.0, 0.0])];
        let mut state = AdamState::new(AdamConfig::default(), &params);
        adam_step(&mut params, &[t(vec![0.3, -7.0, 1e-3])], &mut state).unwrap();
        // m_hat / sqrt(v_hat) = g / |g| at t = 1
        let expected = [-1e-3, 1e-3, -1e-3];
        for (w, e) in params[0].data().iter().zip(expected) {
            assert!((w - e).abs() < 1e-8, "{w} vs {e}");
        }
    }

    #[test]
    fn moments_stay_positive_under_repeated_gradient() {
        let mut params = vec![t(vec![1.0])];
        let mut state = AdamState::new(AdamConfig::default(), &params);
        adam_step(&mut params, &[t(vec![0.5])], &mut state).unwrap();
        adam_step(&mut params, &[t(vec![0.5])], &mut state).unwrap();
        assert!(state.first_moment()[0][0] > 0.0);
        assert!(state.second_moment()[0][0] > 0.0);
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let mut params = vec![t(vec![1.0, 2.0])];
        let mut state = AdamState::new(AdamConfig::default(), &params);
        assert!(adam_step(&mut params, &[t(vec![1.0])], &mut state).is_err());
        assert_eq!(state.step_count(), 0);
    }
}
