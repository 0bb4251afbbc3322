//! Implicit differentiation of the response.
//!
//! At a converged CCP iterate `x*` the smoothed payoff is stationary:
//! `∇Φ(x*; θ) = σ′(f(x*))·w − ∇c(x, x*) = 0`, with `θ = (w, b, v)`. The
//! implicit function theorem gives `J = −H⁻¹·∂(∇Φ)/∂θ`.
//!
//! Two choices of `H` are offered. [`JacobianMode::FixedPoint`] uses the full
//! payoff Hessian `σ″·wwᵀ − ∇²c` and is the exact derivative of the converged
//! response. [`JacobianMode::FrozenIterate`] differentiates only the final
//! concave surrogate with its linearization point held fixed, which drops the
//! `σ∪″·wwᵀ` curvature: `H = σ∩″·wwᵀ − ∇²c`. The right-hand side is the same in
//! both modes because `g = σ∪′(w·x* + b)·w` is differentiated in `(w, b)`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ResponseConfig, ResponseOutcome, TangentSpec};
use crate::cost::CostSpec;
use crate::error::{check_dim, Error, Result};
use crate::model::LinearScorer;

/// Hessians worse conditioned than this are reported as degenerate.
pub const MAX_HESSIAN_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum JacobianMode {
    #[default]
    FixedPoint,
    FrozenIterate,
}

/// Derivatives of `x*` (length `d`) with respect to the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseJacobians {
    /// `d × k`, column `j` is `∂x*/∂w_j`.
    pub weights: DMatrix<f64>,
    /// `∂x*/∂b`.
    pub intercept: DVector<f64>,
    /// `d × p`, column `j` is `∂x*/∂v_j` (empty for the plain quadratic cost).
    pub cost: DMatrix<f64>,
}

impl ResponseJacobians {
    /// `uᵀJ` for a row vector `u`, laid out as `[w…, b, v…]`.
    pub fn vector_product(&self, u: &[f64]) -> Vec<f64> {
        let u = DVector::from_column_slice(u);
        let mut out: Vec<f64> = (self.weights.transpose() * &u).iter().copied().collect();
        out.push(self.intercept.dot(&u));
        out.extend((self.cost.transpose() * &u).iter().copied());
        out
    }
}

pub fn response_jacobians(
    outcome: &ResponseOutcome,
    x: &[f64],
    model: &LinearScorer,
    cost: &CostSpec,
    config: &ResponseConfig,
) -> Result<ResponseJacobians> {
    jacobians(outcome, x, model, cost, config, None)
}

pub fn tangent_response_jacobians(
    outcome: &ResponseOutcome,
    x: &[f64],
    model: &LinearScorer,
    cost: &CostSpec,
    tangent: &TangentSpec,
    config: &ResponseConfig,
) -> Result<ResponseJacobians> {
    jacobians(outcome, x, model, cost, config, Some(tangent))
}

fn jacobians(
    outcome: &ResponseOutcome,
    x: &[f64],
    model: &LinearScorer,
    cost: &CostSpec,
    config: &ResponseConfig,
    tangent: Option<&TangentSpec>,
) -> Result<ResponseJacobians> {
    super::check_problem(x, model, cost)?;
    check_dim("response outcome", x.len(), outcome.x_star.len())?;
    if !outcome.converged {
        return Err(Error::InvalidInput("jacobians require a converged response".into()));
    }
    let sign = config.validate()?;
    let d = x.len();
    let p = cost.num_params();
    let xs = &outcome.x_star;
    let w = model.weights();
    let f = model.head_score(xs);
    let slope = sign.derivative(f);
    let curvature = sign.second_derivative(f);
    let hess_curvature = match config.jacobian {
        JacobianMode::FixedPoint => curvature,
        JacobianMode::FrozenIterate => sign.concave_second_derivative(f),
    };

    let mut h = -cost.hessian_unchecked(x, xs);
    for i in 0..d {
        for j in 0..d {
            h[(i, j)] += hess_curvature * w[i] * w[j];
        }
    }

    // ∂(∇Φ)/∂θ, columns [w…, b, v…]
    let mut rhs = DMatrix::zeros(d, d + 1 + p);
    for j in 0..d {
        for i in 0..d {
            rhs[(i, j)] = curvature * xs[j] * w[i];
        }
        rhs[(j, j)] += slope;
    }
    for i in 0..d {
        rhs[(i, d)] = curvature * w[i];
    }
    if p > 0 {
        let dv = cost.gradient_param_jacobian(x, xs);
        rhs.view_mut((0, d + 1), (d, p)).copy_from(&(-dv));
    }

    let full = match tangent {
        None => solve_checked(h, &rhs)?,
        Some(t) => {
            let basis = t.orthonormal_basis();
            let b = DMatrix::from_fn(d, basis.len(), |i, j| basis[j][i]);
            let hr = b.transpose() * &h * &b;
            let jr = solve_checked(hr, &(b.transpose() * &rhs))?;
            b * jr
        }
    };

    Ok(ResponseJacobians {
        weights: full.columns(0, d).into_owned(),
        intercept: full.column(d).into_owned(),
        cost: full.columns(d + 1, p).into_owned(),
    })
}

/// Solves `H·J = −rhs` after checking the conditioning of symmetric `H`.
fn solve_checked(h: DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = h.clone().symmetric_eigen();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for ev in eig.eigenvalues.iter() {
        lo = lo.min(ev.abs());
        hi = hi.max(ev.abs());
    }
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition.is_nan() || condition > MAX_HESSIAN_CONDITION {
        return Err(Error::DegenerateJacobian { condition });
    }
    h.lu().solve(&(-rhs)).ok_or(Error::DegenerateJacobian { condition })
}

#[cfg(test)]
mod tests {
    use super::super::ccp_respond;
    use super::*;
    use alloc::vec;

    #[test]
    fn prohibitive_cost_gives_tiny_jacobians() {
        let m = LinearScorer::new(vec![0.7, -0.4], 0.2).unwrap();
        let c = CostSpec::weighted_quadratic(vec![1.0, 2.0], 1e6).unwrap();
        let cfg = ResponseConfig::training();
        let x = [-0.2, 0.1];
        let out = ccp_respond(&x, &m, &c, &cfg).unwrap();
        let j = response_jacobians(&out, &x, &m, &c, &cfg).unwrap();
        let biggest = j
            .weights
            .iter()
            .chain(j.intercept.iter())
            .chain(j.cost.iter())
            .fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(biggest <= 1e-3, "{biggest}");
    }

    #[test]
    fn intercept_derivative_stays_on_weight_axis() {
        let m = LinearScorer::new(vec![1.0, 0.0], 0.0).unwrap();
        let c = CostSpec::quadratic(1.0).unwrap();
        let cfg = ResponseConfig::training().with_tol(1e-12).with_max_iter(1000);
        let x = [-0.7, 0.0];
        let out = ccp_respond(&x, &m, &c, &cfg).unwrap();
        let j = response_jacobians(&out, &x, &m, &c, &cfg).unwrap();
        assert_eq!(j.intercept[1], 0.0);
        let h = 1e-5;
        let shifted = |b: f64| {
            let m = LinearScorer::new(vec![1.0, 0.0], b).unwrap();
            ccp_respond(&x, &m, &c, &cfg).unwrap().x_star
        };
        let (p, q) = (shifted(h), shifted(-h));
        let fd = (p[0] - q[0]) / (2.0 * h);
        assert!((fd - j.intercept[0]).abs() <= 1e-4 * fd.abs().max(1.0));
        assert!(((p[1] - q[1]) / (2.0 * h)).abs() < 1e-9);
    }

    #[test]
    fn unconverged_outcome_is_rejected() {
        let m = LinearScorer::new(vec![1.0, 0.0], 0.0).unwrap();
        let c = CostSpec::quadratic(1.0).unwrap();
        let cfg = ResponseConfig::training();
        let mut out = ccp_respond(&[0.0, 0.0], &m, &c, &cfg).unwrap();
        out.converged = false;
        assert!(response_jacobians(&out, &[0.0, 0.0], &m, &c, &cfg).is_err());
    }
}
