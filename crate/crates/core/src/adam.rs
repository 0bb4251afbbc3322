//! Adam with bias correction.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "adam needs lr > 0, betas in [0, 1) and eps > 0".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }
}

/// One Adam update of `params` in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, hyper: &AdamConfig) -> Result<()> {
    check_dim("adam gradient", params.len(), grads.len())?;
    check_dim("adam state", params.len(), state.m.len())?;
    if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { index });
    }
    state.step += 1;
    let t = state.step as f64;
    let c1 = 1.0 - math::powf(hyper.beta1, t);
    let c2 = 1.0 - math::powf(hyper.beta2, t);
    for i in 0..params.len() {
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grads[i];
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= hyper.learning_rate * m_hat / (math::sqrt(v_hat) + hyper.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = vec![1.0, -2.0];
        let mut s = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn first_step_is_signed_learning_rate() {
        let cfg = AdamConfig::default();
        let mut p = vec![0.0, 0.0];
        let mut s = AdamState::new(2);
        adam_step(&mut p, &[3.0, -0.5], &mut s, &cfg).unwrap();
        // m̂ = g, v̂ = g², update = lr·g/(|g| + eps)
        assert!((p[0] + 1e-2 * 3.0 / (3.0 + 1e-8)).abs() < 1e-15);
        assert!((p[1] - 1e-2 * 0.5 / (0.5 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn constant_gradient_steps_approach_learning_rate() {
        let cfg = AdamConfig::default();
        let mut p = vec![0.0];
        let mut s = AdamState::new(1);
        let mut last = 0.0;
        for _ in 0..500 {
            let before = p[0];
            adam_step(&mut p, &[0.7], &mut s, &cfg).unwrap();
            last = before - p[0];
        }
        assert!((last - 1e-2).abs() < 1e-6);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut p = vec![0.0, 0.0];
        let mut s = AdamState::new(2);
        assert_eq!(
            adam_step(&mut p, &[0.0, f64::NAN], &mut s, &AdamConfig::default()),
            Err(Error::NonFiniteGradient { index: 1 })
        );
    }
}
