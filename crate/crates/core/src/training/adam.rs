use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Gradients, Parameters};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment estimates plus the global step count.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: Gradients,
    pub v: Gradients,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(params: &Parameters) -> Self {
        Self { m: params.zeros_like(), v: params.zeros_like(), step: 0 }
    }
}

/// One bias-corrected Adam update of every trainable tensor. Tensors in
/// frozen groups (and their moments) are left untouched. Gradients are
/// checked for finiteness before anything is modified.
pub fn adam_step(
    params: &mut Parameters,
    grads: &Gradients,
    state: &mut OptimizerState,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<()> {
    if grads.tensors.len() != params.tensors.len()
        || grads.tensors.iter().zip(&params.tensors).any(|(g, t)| g.len() != t.data.len())
    {
        return Err(Error::Shape("gradient layout does not match parameters".into()));
    }
    for (g, t) in grads.tensors.iter().zip(&params.tensors) {
        if params.is_trainable(t.group) && g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { tensor: t.name.clone() });
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let trainable: Vec<bool> = params.tensors.iter().map(|t| params.is_trainable(t.group)).collect();
    for (k, tensor) in params.tensors.iter_mut().enumerate() {
        if !trainable[k] {
            continue;
        }
        let (m, v, g) = (&mut state.m.tensors[k], &mut state.v.tensors[k], &grads.tensors[k]);
        for i in 0..g.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            tensor.data[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, Group, ModelConfig};

    fn params() -> Parameters {
        init_params(&ModelConfig::desk([16, 16], 3), 4).unwrap()
    }

    fn filled(p: &Parameters, value: f64) -> Gradients {
        let mut g = p.zeros_like();
        g.tensors.iter_mut().for_each(|t| t.fill(value));
        g
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = params();
        let before = p.clone();
        let mut s = OptimizerState::new(&p);
        let g = p.zeros_like();
        adam_step(&mut p, &g, &mut s, 1e-3, &AdamConfig::default()).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        for g in [0.37, -2.5, 1e-3] {
            let mut p = params();
            let before = p.clone();
            let mut s = OptimizerState::new(&p);
            let grads = filled(&p, g);
            adam_step(&mut p, &grads, &mut s, 1e-3, &AdamConfig::default()).unwrap();
            // m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps).
            let expected = -1e-3 * g / (g.abs() + 1e-8);
            let delta = p.tensors[0].data[0] - before.tensors[0].data[0];
            assert!((delta - expected).abs() < 1e-15);
            assert!((delta + 1e-3 * g.signum()).abs() < 1e-8);
        }
    }

    #[test]
    fn frozen_group_is_bitwise_unchanged() {
        let mut p = params();
        p.set_trainable(Group::Encoder, false);
        let enc = p.checksum(Group::Encoder);
        let cls = p.checksum(Group::Classifier);
        let mut s = OptimizerState::new(&p);
        for _ in 0..5 {
            let g = filled(&p, 0.5);
            adam_step(&mut p, &g, &mut s, 1e-2, &AdamConfig::default()).unwrap();
        }
        assert_eq!(p.checksum(Group::Encoder), enc);
        assert_ne!(p.checksum(Group::Classifier), cls);
    }

    #[test]
    fn non_finite_gradient_names_tensor() {
        let mut p = params();
        let before = p.clone();
        let mut g = p.zeros_like();
        g.tensors[3][0] = f64::NAN;
        let err = adam_step(&mut p, &g, &mut OptimizerState::new(&before), 1e-3, &AdamConfig::default()).unwrap_err();
        match err {
            Error::NonFiniteGradient { tensor } => assert_eq!(tensor, "encoder.conv1.bias"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(p, before);
    }

    #[test]
    fn matches_reference_sequence() {
        // Scalar reference: minimise (x - 3)^2 from x = 0 with lr 0.1.
        let cfg = AdamConfig::default();
        let (mut x, mut m, mut v) = (0.0f64, 0.0, 0.0);
        let mut p = params();
        p.tensors.iter_mut().for_each(|t| t.data.fill(0.0));
        let mut s = OptimizerState::new(&p);
        for t in 1..=50 {
            let g = 2.0 * (x - 3.0);
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            x -= 0.1 * (m / (1.0 - 0.9f64.powi(t))) / ((v / (1.0 - 0.999f64.powi(t))).sqrt() + 1e-8);
            let current = p.tensors[0].data[0];
            let g = filled(&p, 2.0 * (current - 3.0));
            adam_step(&mut p, &g, &mut s, 0.1, &cfg).unwrap();
        }
        assert!((p.tensors[0].data[0] - x).abs() < 1e-12);
        assert!((x - 3.0).abs() < 1.0);
    }
}
