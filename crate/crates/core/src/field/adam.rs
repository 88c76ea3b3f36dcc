use serde::{Deserialize, Serialize};

use super::mlp::{MlpParams, ParamGrads};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates for every parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub first_moment: ParamGrads,
    pub second_moment: ParamGrads,
    pub step_count: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(params: &MlpParams, config: AdamConfig) -> Self {
        AdamState {
            first_moment: ParamGrads::zeros_like(params),
            second_moment: ParamGrads::zeros_like(params),
            step_count: 0,
            config,
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    ///
    /// Gradients are checked for finiteness before anything is modified.
    pub fn step(&mut self, params: &mut MlpParams, grads: &ParamGrads, lr: f64) -> Result<()> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Contract(format!("learning rate must be positive, got {lr}")));
        }
        if !grads.matches(params) || !self.first_moment.matches(params) {
            return Err(Error::Contract("Adam buffers do not match the network".into()));
        }
        for (layer, (w, b)) in grads.weights.iter().zip(&grads.biases).enumerate() {
            if w.iter().chain(b).any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteGradient { layer });
            }
        }
        self.step_count += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let t = self.step_count as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        };
        for (l, layer) in params.layers.iter_mut().enumerate() {
            update(
                &mut layer.weight,
                &grads.weights[l],
                &mut self.first_moment.weights[l],
                &mut self.second_moment.weights[l],
            );
            update(
                &mut layer.bias,
                &grads.biases[l],
                &mut self.first_moment.biases[l],
                &mut self.second_moment.biases[l],
            );
        }
        Ok(())
    }
}

/// Functional form of [`AdamState::step`].
pub fn adam_step(
    params: &MlpParams,
    grads: &ParamGrads,
    state: &AdamState,
    lr: f64,
) -> Result<(MlpParams, AdamState)> {
    let mut params = params.clone();
    let mut state = state.clone();
    state.step(&mut params, grads, lr)?;
    Ok((params, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Activation, Layer};

    fn scalar_param(v: f64) -> MlpParams {
        MlpParams {
            layers: vec![Layer {
                out_dim: 1,
                in_dim: 0,
                weight: vec![],
                bias: vec![v],
            }],
            hidden_width: 1,
            hidden_depth: 0,
            activation: Activation::Identity,
            skip_layer: None,
        }
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let p = scalar_param(1.0);
        let state = AdamState::new(&p, AdamConfig::default());
        let mut g = ParamGrads::zeros_like(&p);
        g.biases[0][0] = 1.0;
        let (p2, s2) = adam_step(&p, &g, &state, 0.01).unwrap();
        // m_hat = 1, v_hat = 1 at t = 1.
        assert!((p.layers[0].bias[0] - p2.layers[0].bias[0] - 0.01).abs() < 1e-5);
        assert_eq!(s2.step_count, 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters_and_decays_moments() {
        let p = scalar_param(0.5);
        let mut state = AdamState::new(&p, AdamConfig::default());
        state.first_moment.biases[0][0] = 0.2;
        state.second_moment.biases[0][0] = 0.3;
        state.step_count = 5;
        let g = ParamGrads::zeros_like(&p);
        let before = p.layers[0].bias[0];
        let (p2, s2) = adam_step(&p, &g, &state, 0.01).unwrap();
        // The stored first moment still pushes; reset it to test the pure zero case.
        assert!(s2.first_moment.biases[0][0] < 0.2 && s2.second_moment.biases[0][0] < 0.3);
        assert_eq!(s2.step_count, 6);

        let fresh = AdamState::new(&p, AdamConfig::default());
        let (p3, _) = adam_step(&p, &g, &fresh, 0.01).unwrap();
        assert_eq!(p3.layers[0].bias[0], before);
        assert!(p2.layers[0].bias[0] < before);
    }

    #[test]
    fn nan_gradient_names_the_layer() {
        let p = crate::field::init_geometric(8, 2, 0.3, 1).unwrap();
        let state = AdamState::new(&p, AdamConfig::default());
        let mut g = ParamGrads::zeros_like(&p);
        g.weights[1][3] = f64::NAN;
        match adam_step(&p, &g, &state, 0.01) {
            Err(Error::NonFiniteGradient { layer }) => assert_eq!(layer, 1),
            other => panic!("expected optimizer error, got {other:?}"),
        }
    }
}
