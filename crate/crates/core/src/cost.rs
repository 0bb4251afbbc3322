//! Modification costs `c(x, x′)`.
//!
//! Every kind is a (possibly weighted) quadratic term plus an optional
//! linear-separable term `max{0, v·(x′ − x)}`, all multiplied by a global
//! scale `t`. The kinked linear term has two evaluation modes: [`CostMode::Exact`]
//! for metrics and oracles, and [`CostMode::Smoothed`], which swaps the hinge
//! for `softplus_β(s) = log(1 + exp(βs)) / β` so the response layer sees
//! smooth curvature. Derivatives are always those of the smoothed cost.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::math::{dot, log1p_exp, logistic};

/// Default sharpness of the softplus replacing `max{0, ·}`.
pub const DEFAULT_SOFTNESS: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostKind {
    /// `‖x′ − x‖²`
    Quadratic,
    /// `Σ v_i (x′_i − x_i)²` with `v > 0`.
    WeightedQuadratic { weights: Vec<f64> },
    /// `max{0, v·(x′ − x)}`. Not strictly convex; rejected by the response layer.
    LinearSeparable { direction: Vec<f64>, softness: f64 },
    /// `(1 − γ)·max{0, v·(x′ − x)} + γ·‖x′ − x‖²` with `γ ∈ (0, 1]`.
    Mixture {
        gamma: f64,
        direction: Vec<f64>,
        softness: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostMode {
    Exact,
    Smoothed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    #[serde(flatten)]
    kind: CostKind,
    scale: f64,
}

impl CostSpec {
    pub fn new(kind: CostKind, scale: f64) -> Result<Self> {
        let spec = Self { kind, scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn quadratic(scale: f64) -> Result<Self> {
        Self::new(CostKind::Quadratic, scale)
    }

    pub fn weighted_quadratic(weights: Vec<f64>, scale: f64) -> Result<Self> {
        Self::new(CostKind::WeightedQuadratic { weights }, scale)
    }

    pub fn linear_separable(direction: Vec<f64>, scale: f64) -> Result<Self> {
        Self::new(
            CostKind::LinearSeparable {
                direction,
                softness: DEFAULT_SOFTNESS,
            },
            scale,
        )
    }

    pub fn mixture(gamma: f64, direction: Vec<f64>, scale: f64) -> Result<Self> {
        Self::new(
            CostKind::Mixture {
                gamma,
                direction,
                softness: DEFAULT_SOFTNESS,
            },
            scale,
        )
    }

    /// Replace the softplus sharpness of a kinked cost (no-op for smooth kinds).
    pub fn with_softness(mut self, beta: f64) -> Result<Self> {
        match &mut self.kind {
            CostKind::LinearSeparable { softness, .. } | CostKind::Mixture { softness, .. } => *softness = beta,
            _ => {}
        }
        self.validate()?;
        Ok(self)
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        self.scale = scale;
        self.validate()?;
        Ok(self)
    }

    pub fn kind(&self) -> &CostKind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn validate(&self) -> Result<()> {
        let invalid = |m: alloc::string::String| Err(Error::InvalidConfig(m));
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return invalid(format!("cost scale must be positive, got {}", self.scale));
        }
        match &self.kind {
            CostKind::Quadratic => {}
            CostKind::WeightedQuadratic { weights } => {
                if weights.is_empty() || weights.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return invalid("weighted quadratic weights must be positive and finite".into());
                }
            }
            CostKind::LinearSeparable { direction, softness } => {
                check_direction(direction, *softness)?;
            }
            CostKind::Mixture {
                gamma,
                direction,
                softness,
            } => {
                if !(*gamma > 0.0 && *gamma <= 1.0) {
                    return invalid(format!("mixture gamma must lie in (0, 1], got {gamma}"));
                }
                check_direction(direction, *softness)?;
            }
        }
        Ok(())
    }

    /// Dimension fixed by the cost's vector parameter, if any.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            CostKind::Quadratic => None,
            CostKind::WeightedQuadratic { weights } => Some(weights.len()),
            CostKind::LinearSeparable { direction, .. } | CostKind::Mixture { direction, .. } => Some(direction.len()),
        }
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        match self.dim() {
            Some(expected) => check_dim("cost parameter vector", expected, d),
            None => Ok(()),
        }
    }

    /// Coefficient of the quadratic component (`t·γ`, or `t` for pure quadratics).
    pub fn quadratic_coefficient(&self) -> f64 {
        match &self.kind {
            CostKind::Quadratic | CostKind::WeightedQuadratic { .. } => self.scale,
            CostKind::LinearSeparable { .. } => 0.0,
            CostKind::Mixture { gamma, .. } => self.scale * gamma,
        }
    }

    pub fn is_strictly_convex(&self) -> bool {
        self.quadratic_coefficient() > 0.0
    }

    pub(crate) fn require_strictly_convex(&self) -> Result<()> {
        if self.is_strictly_convex() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "response requires a strictly positive quadratic cost component".into(),
            ))
        }
    }

    /// Diagonal of the quadratic component's Hessian, `2·t·γ·a_i`.
    pub fn quadratic_hessian_diagonal(&self, d: usize) -> Vec<f64> {
        let c = 2.0 * self.quadratic_coefficient();
        match &self.kind {
            CostKind::WeightedQuadratic { weights } => weights.iter().map(|v| c * v).collect(),
            _ => vec![c; d],
        }
    }

    /// `(v, t·(1 − γ), β)` for kinds with a linear-separable term.
    pub fn linear_component(&self) -> Option<(&[f64], f64, f64)> {
        match &self.kind {
            CostKind::LinearSeparable { direction, softness } => Some((direction, self.scale, *softness)),
            CostKind::Mixture {
                gamma,
                direction,
                softness,
            } => Some((direction, self.scale * (1.0 - gamma), *softness)),
            _ => None,
        }
    }

    /// Learnable cost parameters: the weights or the linear direction `v`.
    pub fn params(&self) -> &[f64] {
        match &self.kind {
            CostKind::Quadratic => &[],
            CostKind::WeightedQuadratic { weights } => weights,
            CostKind::LinearSeparable { direction, .. } | CostKind::Mixture { direction, .. } => direction,
        }
    }

    pub fn num_params(&self) -> usize {
        self.params().len()
    }

    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        check_dim("cost parameters", self.num_params(), params.len())?;
        let mut out = self.clone();
        match &mut out.kind {
            CostKind::Quadratic => {}
            CostKind::WeightedQuadratic { weights } => weights.copy_from_slice(params),
            CostKind::LinearSeparable { direction, .. } | CostKind::Mixture { direction, .. } => {
                direction.copy_from_slice(params)
            }
        }
        out.validate()?;
        Ok(out)
    }

    fn quadratic_term(&self, delta: &[f64]) -> f64 {
        match &self.kind {
            CostKind::WeightedQuadratic { weights } => weights.iter().zip(delta).map(|(v, d)| v * d * d).sum(),
            _ => dot(delta, delta),
        }
    }

    /// `c(x, x′)`.
    pub fn value(&self, x: &[f64], x_new: &[f64], mode: CostMode) -> Result<f64> {
        check_dim("cost endpoints", x.len(), x_new.len())?;
        self.check_dim(x.len())?;
        Ok(self.value_unchecked(x, x_new, mode))
    }

    pub(crate) fn value_unchecked(&self, x: &[f64], x_new: &[f64], mode: CostMode) -> f64 {
        let delta: Vec<f64> = x_new.iter().zip(x).map(|(a, b)| a - b).collect();
        let mut c = self.quadratic_coefficient() * self.quadratic_term(&delta);
        if let Some((v, coef, beta)) = self.linear_component() {
            let s = dot(v, &delta);
            let hinge = match mode {
                CostMode::Exact => s.max(0.0),
                CostMode::Smoothed => log1p_exp(beta * s) / beta,
            };
            c += coef * hinge;
        }
        c
    }

    /// Gradient of `x′ ↦ c(x, x′)` (smoothed mode).
    pub fn gradient(&self, x: &[f64], x_new: &[f64]) -> Result<Vec<f64>> {
        check_dim("cost endpoints", x.len(), x_new.len())?;
        self.check_dim(x.len())?;
        Ok(self.gradient_unchecked(x, x_new))
    }

    pub(crate) fn gradient_unchecked(&self, x: &[f64], x_new: &[f64]) -> Vec<f64> {
        let d = x.len();
        let diag = self.quadratic_hessian_diagonal(d);
        let mut g: Vec<f64> = (0..d).map(|i| diag[i] * (x_new[i] - x[i])).collect();
        if let Some((v, coef, beta)) = self.linear_component() {
            let s: f64 = v.iter().enumerate().map(|(i, vi)| vi * (x_new[i] - x[i])).sum();
            let p = logistic(beta * s);
            g.iter_mut().zip(v).for_each(|(gi, vi)| *gi += coef * p * vi);
        }
        g
    }

    /// Hessian of `x′ ↦ c(x, x′)` (smoothed mode).
    pub fn hessian(&self, x: &[f64], x_new: &[f64]) -> Result<DMatrix<f64>> {
        check_dim("cost endpoints", x.len(), x_new.len())?;
        self.check_dim(x.len())?;
        Ok(self.hessian_unchecked(x, x_new))
    }

    pub(crate) fn hessian_unchecked(&self, x: &[f64], x_new: &[f64]) -> DMatrix<f64> {
        let d = x.len();
        let diag = self.quadratic_hessian_diagonal(d);
        let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
        if let Some((v, coef, beta)) = self.linear_component() {
            let s: f64 = v.iter().enumerate().map(|(i, vi)| vi * (x_new[i] - x[i])).sum();
            let p = logistic(beta * s);
            let curv = coef * beta * p * (1.0 - p);
            for i in 0..d {
                for j in 0..d {
                    h[(i, j)] += curv * v[i] * v[j];
                }
            }
        }
        h
    }

    /// `∂c/∂v` at fixed endpoints (smoothed mode).
    pub fn param_gradient(&self, x: &[f64], x_new: &[f64]) -> Vec<f64> {
        let delta: Vec<f64> = x_new.iter().zip(x).map(|(a, b)| a - b).collect();
        match &self.kind {
            CostKind::Quadratic => Vec::new(),
            CostKind::WeightedQuadratic { .. } => delta.iter().map(|dl| self.scale * dl * dl).collect(),
            CostKind::LinearSeparable { .. } | CostKind::Mixture { .. } => {
                let (v, coef, beta) = self.linear_component().expect("linear kind");
                let p = logistic(beta * dot(v, &delta));
                delta.iter().map(|dl| coef * p * dl).collect()
            }
        }
    }

    /// `∂(∇_{x′} c)/∂v`, a `d × p` matrix (smoothed mode).
    pub fn gradient_param_jacobian(&self, x: &[f64], x_new: &[f64]) -> DMatrix<f64> {
        let d = x.len();
        let delta: Vec<f64> = x_new.iter().zip(x).map(|(a, b)| a - b).collect();
        match &self.kind {
            CostKind::Quadratic => DMatrix::zeros(d, 0),
            CostKind::WeightedQuadratic { .. } => {
                let mut m = DMatrix::zeros(d, d);
                for i in 0..d {
                    m[(i, i)] = 2.0 * self.scale * delta[i];
                }
                m
            }
            CostKind::LinearSeparable { .. } | CostKind::Mixture { .. } => {
                let (v, coef, beta) = self.linear_component().expect("linear kind");
                let p = logistic(beta * dot(v, &delta));
                let curv = beta * p * (1.0 - p);
                let mut m = DMatrix::zeros(d, d);
                for i in 0..d {
                    for j in 0..d {
                        m[(i, j)] = coef * curv * v[i] * delta[j];
                    }
                    m[(i, i)] += coef * p;
                }
                m
            }
        }
    }
}

fn check_direction(direction: &[f64], softness: f64) -> Result<()> {
    if direction.is_empty() || direction.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(
            "linear cost direction must be nonempty and finite".into(),
        ));
    }
    if !(softness > 0.0 && softness.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "softplus sharpness must be positive, got {softness}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let q = CostSpec::quadratic(1.0).unwrap();
        assert_eq!(q.value(&[0.0, 0.0], &[1.0, 1.0], CostMode::Exact).unwrap(), 2.0);
        let w = CostSpec::weighted_quadratic(vec![0.5, 0.5], 1.0).unwrap();
        assert_eq!(w.value(&[0.0, 0.0], &[2.0, 0.0], CostMode::Exact).unwrap(), 2.0);
        let l = CostSpec::linear_separable(vec![1.0, 0.0], 1.0).unwrap();
        assert_eq!(l.value(&[0.0, 0.0], &[-1.0, 0.0], CostMode::Exact).unwrap(), 0.0);
    }

    #[test]
    fn scale_multiplies_whole_cost() {
        let m = CostSpec::mixture(0.3, vec![1.0, -1.0], 2.5).unwrap();
        let base = m.clone().with_scale(1.0).unwrap();
        let (x, y) = ([0.2, -0.4], [1.0, 0.7]);
        let a = m.value(&x, &y, CostMode::Exact).unwrap();
        let b = base.value(&x, &y, CostMode::Exact).unwrap();
        assert!((a - 2.5 * b).abs() < 1e-14);
    }

    #[test]
    fn derivative_hand_values() {
        let q = CostSpec::quadratic(1.0).unwrap();
        assert_eq!(q.gradient(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), vec![2.0, 0.0]);
        let h = q.hessian(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(h, DMatrix::from_diagonal_element(2, 2, 2.0));
        let w = CostSpec::weighted_quadratic(vec![2.0, 2.0], 1.0).unwrap();
        assert_eq!(w.gradient(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), vec![4.0, 4.0]);
        for spec in [q, w] {
            assert_eq!(spec.gradient(&[0.3, 0.1], &[0.3, 0.1]).unwrap(), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(CostSpec::quadratic(0.0).is_err());
        assert!(CostSpec::weighted_quadratic(vec![1.0, 0.0], 1.0).is_err());
        assert!(CostSpec::mixture(0.0, vec![1.0], 1.0).is_err());
        assert!(CostSpec::mixture(1.2, vec![1.0], 1.0).is_err());
        assert!(CostSpec::mixture(0.5, vec![1.0], 1.0)
            .unwrap()
            .with_softness(-2.0)
            .is_err());
        assert!(!CostSpec::linear_separable(vec![1.0], 1.0).unwrap().is_strictly_convex());
    }

    #[test]
    fn smoothed_hinge_stays_close_to_exact() {
        let m = CostSpec::linear_separable(vec![1.0], 1.0).unwrap();
        let mut worst: f64 = 0.0;
        for i in -400..=400 {
            let s = i as f64 / 100.0;
            let e = m.value(&[0.0], &[s], CostMode::Exact).unwrap();
            let sm = m.value(&[0.0], &[s], CostMode::Smoothed).unwrap();
            assert!(sm >= e);
            worst = worst.max(sm - e);
        }
        assert!(worst <= 0.014, "gap {worst}");
    }

    #[test]
    fn dimension_mismatch() {
        let w = CostSpec::weighted_quadratic(vec![1.0, 1.0], 1.0).unwrap();
        assert!(w.value(&[0.0; 3], &[1.0; 3], CostMode::Exact).is_err());
        assert!(w.value(&[0.0; 2], &[1.0; 3], CostMode::Exact).is_err());
    }

    #[test]
    fn params_roundtrip() {
        let m = CostSpec::mixture(0.005, vec![0.5, 0.5], 1.0).unwrap();
        let m2 = m.with_params(&[2.0, 0.0]).unwrap();
        assert_eq!(m2.params(), &[2.0, 0.0]);
        assert!(CostSpec::weighted_quadratic(vec![1.0, 1.0], 1.0)
            .unwrap()
            .with_params(&[1.0, -1.0])
            .is_err());
    }
}
