//! The strategic response layer.
//!
//! A user at `x` facing scorer `f(x) = w·x + b` responds with the smoothed
//! best response
//!
//! ```text
//! Δ̃(x) = argmax_{x′}  σ_τ(f(x′)) − c(x, x′)
//! ```
//!
//! computed by the convex–concave procedure: starting from `x⁰ = x`, the
//! convex part `σ∪` is linearized at the previous iterate and the resulting
//! concave surrogate is maximized exactly. The true smoothed payoff never
//! decreases along the iterates. Gradients of the response come from implicit
//! differentiation of the stationarity condition at the final iterate
//! (see [`response_jacobians`]).
//!
//! Inputs are in representation space: when the scorer carries a feature map,
//! callers pass `z = φ(x)` and the layer works with the linear head.

mod jacobian;
mod oracle;
mod subproblem;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cost::{CostMode, CostSpec};
use crate::error::{check_dim, Error, Result};
use crate::math::{self, dot, orthonormal_basis};
use crate::model::LinearScorer;
use crate::smooth::SmoothSign;

pub use jacobian::{
    response_jacobians, tangent_response_jacobians, JacobianMode, ResponseJacobians, MAX_HESSIAN_CONDITION,
};
pub use oracle::{
    boundary_projection, curve_best_response, curve_local_response, exact_best_response, grid_response_oracle,
};
pub use subproblem::{solve_concave_subproblem, ConcaveSurrogate};

/// Temperature used while training.
pub const TRAINING_TAU: f64 = 1.0;
/// Temperature used when simulating users at evaluation time.
pub const EVALUATION_TAU: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseConfig {
    pub tau: f64,
    /// CCP stops once `‖x^t − x^{t−1}‖₂ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Gradient-norm tolerance of the inner concave solve.
    pub subproblem_tol: f64,
    pub jacobian: JacobianMode,
}

impl Default for ResponseConfig {
    fn default() -> Self {
        Self::training()
    }
}

impl ResponseConfig {
    pub fn training() -> Self {
        Self {
            tau: TRAINING_TAU,
            tol: 1e-3,
            max_iter: 100,
            subproblem_tol: 1e-8,
            jacobian: JacobianMode::FixedPoint,
        }
    }

    pub fn evaluation() -> Self {
        Self {
            tau: EVALUATION_TAU,
            ..Self::training()
        }
    }

    pub fn with_tau(self, tau: f64) -> Self {
        Self { tau, ..self }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        Self { tol, ..self }
    }

    pub fn with_max_iter(self, max_iter: usize) -> Self {
        Self { max_iter, ..self }
    }

    pub fn validate(&self) -> Result<SmoothSign> {
        if !(self.tol > 0.0 && self.subproblem_tol > 0.0) {
            return Err(Error::InvalidConfig("response tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        SmoothSign::new(self.tau)
    }
}

/// Result of one CCP solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseOutcome {
    pub x_star: Vec<f64>,
    /// `∇σ∪(f(x_star))`, the linearization of the convex part at the final iterate.
    pub g_final: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Concave surrogate (built from the last linearization used) evaluated at `x_star`.
    pub surrogate_value: f64,
    /// True smoothed payoff `σ_τ(f(x^t)) − c(x, x^t)` for `t = 0..=iterations`.
    pub payoff_trace: Vec<f64>,
}

/// Affine subspace `base + span(directions)` users are restricted to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentSpec {
    pub base: Vec<f64>,
    /// Columns spanning the tangent space, each of length `d`.
    pub directions: Vec<Vec<f64>>,
}

impl TangentSpec {
    pub fn new(base: Vec<f64>, directions: Vec<Vec<f64>>) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidInput("tangent space needs at least one direction".into()));
        }
        for dir in &directions {
            check_dim("tangent direction", base.len(), dir.len())?;
        }
        let spec = Self { base, directions };
        if spec.orthonormal_basis().len() != spec.directions.len() {
            return Err(Error::InvalidInput("tangent directions are linearly dependent".into()));
        }
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn orthonormal_basis(&self) -> Vec<Vec<f64>> {
        orthonormal_basis(&self.directions, 1e-10)
    }

    /// Distance from `p` to the affine subspace.
    pub fn residual(&self, p: &[f64]) -> f64 {
        let mut r = math::sub(p, &self.base);
        for q in self.orthonormal_basis() {
            let c = dot(&r, &q);
            r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= c * qi);
        }
        math::norm(&r)
    }
}

/// `σ_τ(f(x′)) − c(x, x′)` with the smoothed cost.
pub fn smoothed_payoff(x: &[f64], x_new: &[f64], model: &LinearScorer, cost: &CostSpec, sign: &SmoothSign) -> f64 {
    sign.value(model.head_score(x_new)) - cost.value_unchecked(x, x_new, CostMode::Smoothed)
}

/// `h(x′) − c(x, x′)` with the hard sign and the exact cost.
pub fn hard_payoff(x: &[f64], x_new: &[f64], model: &LinearScorer, cost: &CostSpec) -> f64 {
    math::hard_sign(model.head_score(x_new)) - cost.value_unchecked(x, x_new, CostMode::Exact)
}

pub(crate) fn check_problem(x: &[f64], model: &LinearScorer, cost: &CostSpec) -> Result<()> {
    check_dim("response input vs model", model.dim(), x.len())?;
    cost.check_dim(x.len())?;
    if !math::all_finite(x) {
        return Err(Error::InvalidInput("response input must be finite".into()));
    }
    Ok(())
}

/// Smoothed best response of `x` by the convex–concave procedure.
pub fn ccp_respond(
    x: &[f64],
    model: &LinearScorer,
    cost: &CostSpec,
    config: &ResponseConfig,
) -> Result<ResponseOutcome> {
    run_ccp(x, model, cost, config, None)
}

/// As [`ccp_respond`], with every subproblem restricted to `tangent`.
pub fn tangent_constrained_respond(
    x: &[f64],
    model: &LinearScorer,
    cost: &CostSpec,
    tangent: &TangentSpec,
    config: &ResponseConfig,
) -> Result<ResponseOutcome> {
    check_dim("tangent base", x.len(), tangent.dim())?;
    run_ccp(x, model, cost, config, Some(tangent))
}

/// Dispatches on an optional tangent constraint.
pub fn respond(
    x: &[f64],
    model: &LinearScorer,
    cost: &CostSpec,
    tangent: Option<&TangentSpec>,
    config: &ResponseConfig,
) -> Result<ResponseOutcome> {
    match tangent {
        Some(t) => tangent_constrained_respond(x, model, cost, t, config),
        None => ccp_respond(x, model, cost, config),
    }
}

fn convex_linearization(model: &LinearScorer, sign: &SmoothSign, at: &[f64]) -> Vec<f64> {
    let slope = sign.convex_derivative(model.head_score(at));
    model.weights().iter().map(|w| slope * w).collect()
}

fn run_ccp(
    x: &[f64],
    model: &LinearScorer,
    cost: &CostSpec,
    config: &ResponseConfig,
    tangent: Option<&TangentSpec>,
) -> Result<ResponseOutcome> {
    check_problem(x, model, cost)?;
    cost.require_strictly_convex()?;
    let sign = config.validate()?;

    let mut current = x.to_vec();
    let mut trace = Vec::with_capacity(8);
    trace.push(smoothed_payoff(x, &current, model, cost, &sign));
    let mut iterations = 0;
    let mut converged = false;
    let mut last_g = convex_linearization(model, &sign, &current);

    while iterations < config.max_iter {
        iterations += 1;
        let g = convex_linearization(model, &sign, &current);
        let next = solve_concave_subproblem(x, &g, model, cost, &sign, tangent, config.subproblem_tol).map_err(
            |e| match e {
                Error::SolverFailure { reason, .. } => Error::SolverFailure {
                    iteration: iterations,
                    reason,
                    trace: trace.clone(),
                },
                other => other,
            },
        )?;
        if !math::all_finite(&next) {
            return Err(Error::SolverFailure {
                iteration: iterations,
                reason: "non-finite iterate".into(),
                trace,
            });
        }
        let step = math::dist(&next, &current);
        current = next;
        last_g = g;
        trace.push(smoothed_payoff(x, &current, model, cost, &sign));
        if step <= config.tol {
            converged = true;
            break;
        }
    }

    let surrogate = ConcaveSurrogate::new(x, &last_g, model, cost, &sign);
    Ok(ResponseOutcome {
        g_final: convex_linearization(model, &sign, &current),
        surrogate_value: surrogate.value(&current),
        x_star: current,
        iterations,
        converged,
        payoff_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn axis_model(b: f64) -> LinearScorer {
        LinearScorer::new(vec![1.0, 0.0], b).unwrap()
    }

    /// Dense search over `x + α·w` for the smoothed payoff.
    fn line_oracle(x: &[f64], model: &LinearScorer, cost: &CostSpec, tau: f64) -> Vec<f64> {
        let sign = SmoothSign::new(tau).unwrap();
        let w = model.weights();
        let mut best = (f64::NEG_INFINITY, x.to_vec());
        for i in -40_000..=40_000 {
            let a = i as f64 * 1e-4;
            let p: Vec<f64> = x.iter().zip(w).map(|(xi, wi)| xi + a * wi).collect();
            let v = smoothed_payoff(x, &p, model, cost, &sign);
            if v > best.0 {
                best = (v, p);
            }
        }
        best.1
    }

    #[test]
    fn confident_positive_barely_moves() {
        let m = axis_model(0.0);
        let c = CostSpec::quadratic(1.0).unwrap();
        let cfg = ResponseConfig::evaluation();
        let x = [3.0, 0.0];
        let out = ccp_respond(&x, &m, &c, &cfg).unwrap();
        assert!(out.converged);
        let sign = SmoothSign::new(0.2).unwrap();
        assert!(smoothed_payoff(&x, &out.x_star, &m, &c, &sign) >= smoothed_payoff(&x, &x, &m, &c, &sign));
        assert!(math::dist(&out.x_star, &x) <= 0.05);
        let oracle = line_oracle(&x, &m, &c, 0.2);
        assert!(math::dist(&oracle, &x) <= 0.05);
    }

    #[test]
    fn near_boundary_negative_crosses() {
        let m = axis_model(0.0);
        let c = CostSpec::quadratic(1.0).unwrap();
        let x = [-0.5, 0.0];
        let out = ccp_respond(&x, &m, &c, &ResponseConfig::evaluation()).unwrap();
        assert!(m.head_score(&out.x_star) > 0.0);
        let oracle = line_oracle(&x, &m, &c, 0.2);
        assert!(m.head_score(&oracle) > 0.0);
        assert!(math::dist(&oracle, &out.x_star) < 2e-3);
    }

    #[test]
    fn prohibitive_cost_pins_response() {
        let c = CostSpec::quadratic(1e6).unwrap();
        let cfg = ResponseConfig::evaluation();
        for (w, b, x) in [
            (vec![1.0, 0.0], 0.0, vec![-0.1, 0.0]),
            (vec![-2.0, 3.0], 1.0, vec![0.4, -0.7]),
            (vec![0.5, 0.5], -5.0, vec![10.0, -3.0]),
        ] {
            let m = LinearScorer::new(w, b).unwrap();
            let out = ccp_respond(&x, &m, &c, &cfg).unwrap();
            assert!(math::dist(&out.x_star, &x) <= cfg.tol);
        }
    }

    #[test]
    fn trace_is_monotone_and_consistent() {
        let m = LinearScorer::new(vec![0.8, -0.6], 0.3).unwrap();
        let c = CostSpec::mixture(0.3, vec![1.0, 0.5], 1.0).unwrap();
        let out = ccp_respond(&[-1.0, 0.4], &m, &c, &ResponseConfig::evaluation()).unwrap();
        assert_eq!(out.payoff_trace.len(), out.iterations + 1);
        for pair in out.payoff_trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9);
        }
    }

    #[test]
    fn rejects_pure_linear_cost_and_bad_dims() {
        let m = axis_model(0.0);
        let lin = CostSpec::linear_separable(vec![1.0, 0.0], 1.0).unwrap();
        assert!(ccp_respond(&[0.0, 0.0], &m, &lin, &ResponseConfig::training()).is_err());
        let q = CostSpec::quadratic(1.0).unwrap();
        assert!(matches!(
            ccp_respond(&[0.0], &m, &q, &ResponseConfig::training()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn orthogonal_tangent_means_no_movement() {
        let m = axis_model(0.0);
        let c = CostSpec::quadratic(1.0).unwrap();
        let x = vec![-0.3, 1.0];
        let t = TangentSpec::new(x.clone(), vec![vec![0.0, 1.0]]).unwrap();
        let out = tangent_constrained_respond(&x, &m, &c, &t, &ResponseConfig::evaluation()).unwrap();
        assert!(math::dist(&out.x_star, &x) < 1e-12);
    }

    #[test]
    fn parabola_tangent_moves_along_direction() {
        let m = axis_model(0.0);
        let c = CostSpec::quadratic(1.0).unwrap();
        let x = vec![-1.0, -1.0];
        let s5 = math::sqrt(5.0);
        let dir = vec![1.0 / s5, 2.0 / s5];
        let t = TangentSpec::new(x.clone(), vec![dir.clone()]).unwrap();
        let out = tangent_constrained_respond(&x, &m, &c, &t, &ResponseConfig::evaluation()).unwrap();
        assert!(t.residual(&out.x_star) < 1e-10);
        assert!(m.head_score(&out.x_star) > m.head_score(&x));
        // 1-d grid along the tangent
        let sign = SmoothSign::new(0.2).unwrap();
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..=40_000 {
            let a = -2.0 + i as f64 * 1e-4;
            let p = [x[0] + a * dir[0], x[1] + a * dir[1]];
            let v = smoothed_payoff(&x, &p, &m, &c, &sign);
            if v > best.0 {
                best = (v, a);
            }
        }
        let moved = dot(&math::sub(&out.x_star, &x), &dir);
        assert!(moved > 0.0);
        assert!((moved - best.1).abs() < 2e-3, "ccp {moved} grid {}", best.1);
    }

    #[test]
    fn full_tangent_matches_unconstrained() {
        let m = LinearScorer::new(vec![0.7, -1.1], 0.2).unwrap();
        let c = CostSpec::weighted_quadratic(vec![0.8, 1.7], 1.0).unwrap();
        let x = vec![-0.4, 0.3];
        let cfg = ResponseConfig::evaluation();
        let t = TangentSpec::new(x.clone(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let a = ccp_respond(&x, &m, &c, &cfg).unwrap();
        let b = tangent_constrained_respond(&x, &m, &c, &t, &cfg).unwrap();
        assert!(math::dist(&a.x_star, &b.x_star) <= cfg.tol);
    }

    #[test]
    fn dependent_tangent_rejected() {
        assert!(TangentSpec::new(vec![0.0, 0.0], vec![vec![1.0, 1.0], vec![2.0, 2.0]]).is_err());
        assert!(TangentSpec::new(vec![0.0, 0.0], vec![]).is_err());
    }
}
